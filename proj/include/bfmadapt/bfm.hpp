#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bfmadapt/features.hpp"
#include "bfmadapt/mdp.hpp"

namespace bfma {

struct Temperatures {
  double beta_psi = 20.0;  // codebook interpolation sharpness
  double beta_pi = 10.0;   // action softmax sharpness
};

// Pretrained behavioral model: a codebook of latents on the sqrt(d) sphere,
// one successor-feature table and one greedy policy per entry, and the
// feature map / data distribution they were trained under. Queries at
// arbitrary latents softmax-interpolate between codebook skills.
struct BfmModel {
  int n_states = 0;
  int n_actions = 0;
  double discount = 0.0;
  Temperatures temps;
  std::vector<Vec> codebook;               // each of norm sqrt(d)
  std::vector<Mat> psi_tables;             // (n_states * n_actions) x d
  std::vector<PolicyTable> greedy_policies;
  FeatureMap features;
  DataDistribution rho;

  int dim() const { return static_cast<int>(features.phi.cols()); }
  int sa(int s, int a) const { return s * n_actions + a; }

  Vec usf_weights(const Vec& z) const;          // softmax(beta_psi * z.z_i / d)
  Vec usf(int s, int a, const Vec& z) const;
  Mat usf_jacobian(int s, int a, const Vec& z) const;  // d(usf)/dz, d x d
  Mat mixed_psi(const Vec& z) const;            // (n_states * n_actions) x d
  Mat policy_probs(const Vec& z) const;         // n_states x n_actions
  Vec action_probs(int s, const Vec& z) const;

  void validate() const;
};

BfmModel pretrain_with_codebook(const TabularMdp& mdp, const FeatureMap& features,
                                const DataDistribution& rho, std::vector<Vec> codebook,
                                Temperatures temps = {});
BfmModel pretrain(const TabularMdp& mdp, const FeatureMap& features, const DataDistribution& rho,
                  int codebook_size, uint64_t seed, Temperatures temps = {});

// Rank-filtered regularized inverse of (B^T D_rho B): numerically null
// eigendirections are dropped, the ridge is added to the retained ones.
struct FbFit {
  std::vector<Mat> f_tables;  // per skill, (n_states * n_actions) x d_b
  Mat b;                      // n_states x d_b
  double ridge = 0.0;
};

FbFit fb_fit(const TabularMdp& mdp, const BfmModel& model, const Mat& b, double ridge = 0.0);
Mat projection_onto_span(const Mat& b, const DataDistribution& rho, double ridge);

void save_model(const BfmModel& model, const std::string& path);
BfmModel load_model(const std::string& path);

Vec softmax(const Vec& logits);

}  // namespace bfma
