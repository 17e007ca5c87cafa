#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bfmadapt/bfm.hpp"
#include "bfmadapt/report.hpp"
#include "bfmadapt/sphere.hpp"
#include "bfmadapt/task.hpp"

namespace bfma {

// Lookahead latent adaptation: actor-only search over conditioning latents.
// A fixed-width Gaussian over ambient latent space is reweighted by short
// model-bootstrapped rollouts; its mean follows a leave-one-out REINFORCE
// gradient and is kept on the sqrt(d) sphere by projection.

// Pool of states visited during lookahead rollouts. Start states mix d0
// with uniform draws from this pool.
class StateBank {
 public:
  void push(int s) { states_.push_back(s); }
  bool empty() const { return states_.empty(); }
  std::size_t size() const { return states_.size(); }
  int sample(RandomStream& rs) const {
    if (states_.empty()) throw std::logic_error("StateBank::sample: bank is empty");
    return states_[rs.uniform_int(static_cast<int>(states_.size()))];
  }
  const std::vector<int>& contents() const { return states_; }

 private:
  std::vector<int> states_;
};

// Search distribution over latents: trainable mean on the sqrt(d) sphere,
// fixed isotropic width.
struct LatentGaussian {
  Vec mu;
  double sigma = 0.1;
  double lr = 0.05;
};

struct LolaConfig {
  bool zero_shot_init = true;  // start mu at the inferred latent (no-I: off)
  bool bootstrap = true;       // add the model's terminal value (no-R: off)
  int lookahead_n = 15;        // rollout steps per sampled latent
  int latents_per_state = 15;  // k, Gaussian draws per start state
  int starts_per_step = 2;     // m, start states per gradient step
  double reset_prob = 1.0;     // probability a start state is drawn from d0
  // Both schedules cool down linearly over the run: a wide, fast start finds
  // the right region, the narrow finish polishes within it.
  double lr = 0.02;            // step size at the first gradient step
  double lr_final = 0.005;     // step size at the last step; < 0 keeps lr constant
  double sigma = 0.0;          // Gaussian std at the first step; <= 0 selects 0.25 * sqrt(d)
  double sigma_final = 0.0;    // std at the last step; <= 0 selects 0.04 * sqrt(d) (capped at sigma)
  int gradient_steps = 800;
  double infer_ridge = 1e-8;
  int eval_every = 20;         // in gradient steps
  int eval_episodes = 50;
};

// n-step discounted reward collected from s0 under the softmax policy at z,
// plus (optionally) gamma^n times the model's value of the landing state,
// E_{a ~ pi_z}[psi(s_n, a, z)^T z_r]. States entered during the rollout are
// deposited into `bank` when one is given.
double lookahead_return(const TabularMdp& mdp, const BfmModel& model, const RewardTask& task,
                        int s0, const Vec& z, int n, double gamma, bool bootstrap, uint64_t seed,
                        StateBank* bank = nullptr, double infer_ridge = 1e-8);

// Leave-one-out REINFORCE estimate in ambient coordinates:
// (1/k) sum_i [R_i - mean_{j != i} R_j] * (z_i - mu) / sigma^2.
Vec loo_gradient(const std::vector<double>& returns, const std::vector<Vec>& latents,
                 const Vec& mu, double sigma);

AdaptationReport run_lola(const TabularMdp& mdp, const BfmModel& model, const RewardTask& task,
                          const LolaConfig& cfg, uint64_t seed);

}  // namespace bfma
