#pragma once

#include <cstdint>

#include "bfmadapt/bfm.hpp"
#include "bfmadapt/task.hpp"

namespace bfma {

struct InferenceResult {
  Vec z_r;            // ridge-regression coefficients of the reward on the features
  Vec z_r_sphere;     // sqrt(d)-normalized conditioning latent; codebook[0] when degenerate
  Vec reconstructed;  // phi * z_r
  bool degenerate = false;  // reward has no usable in-span component
  // rho-weighted share of the reward the regression cannot explain:
  // ||r - phi z_r||_rho / ||r||_rho. 0 for on-span rewards (and for r = 0),
  // 1 when the reward is entirely outside the feature span.
  double residual_fraction = 0.0;
};

InferenceResult infer(const BfmModel& model, const RewardTask& task, double ridge = 1e-8);

// Q(s, a) = usf(s, a, z)^T z: the latent doubles as conditioning input and
// reward weights, i.e. the policy the model executes at z.
PolicyTable softmax_policy(const BfmModel& model, const Vec& z);

// d0-weighted exact value of pi under `reward` (no sampling).
double exact_policy_value(const TabularMdp& mdp, const PolicyTable& pi, const Vec& reward);

struct ReturnStats {
  double mean_discounted = 0.0;
  double stderr_discounted = 0.0;
  double mean_undiscounted = 0.0;
  double stderr_undiscounted = 0.0;
};

ReturnStats return_stats_from_samples(const std::vector<double>& discounted,
                                      const std::vector<double>& undiscounted);

// Monte-Carlo rollouts of the softmax policy at z, started from d0 and
// truncated at task.horizon. Episode i draws from a stream derived from
// (seed, i), so evaluations with matched seeds share noise per episode.
ReturnStats evaluate_return(const TabularMdp& mdp, const BfmModel& model, const Vec& z,
                            const RewardTask& task, int n_episodes, uint64_t seed);

}  // namespace bfma
