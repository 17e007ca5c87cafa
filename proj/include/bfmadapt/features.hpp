#pragma once

#include <cstdint>
#include <vector>

#include "bfmadapt/mdp.hpp"
#include "bfmadapt/types.hpp"

namespace bfma {

struct FeatureMap {
  Mat phi;  // n_states x d
  int dim() const { return static_cast<int>(phi.cols()); }
  void validate() const;
};

struct DataDistribution {
  Vec rho;  // n_states, nonnegative, sums to 1
  void validate() const;
};

struct FeatureSpec {
  enum class Kind { one_hot_subset, random_orthonormal, laplacian_eigs, goal_indicators };
  Kind kind = Kind::one_hot_subset;
  std::vector<int> indices;  // one_hot_subset / goal_indicators
  int d = 0;                 // random_orthonormal / laplacian_eigs
  uint64_t seed = 0;
  bool normalize_rows = false;
};

FeatureMap make_features(const TabularMdp& mdp, const FeatureSpec& spec);
DataDistribution uniform_distribution(int n_states);

Mat gram(const FeatureMap& features, const DataDistribution& rho);

struct ProjectionResult {
  Vec z;          // regression coefficients, length d
  Vec projected;  // phi * z
  Vec residual;   // reward - projected
};

// Linear regression of the reward onto the features under rho:
//   z = (phi^T D phi + ridge I)^-1 phi^T D reward.
// ridge == 0 with a singular gram throws, advising a positive ridge.
ProjectionResult project_reward(const FeatureMap& features, const DataDistribution& rho,
                                const Vec& reward, double ridge);

}  // namespace bfma
