#include "bfmadapt/zeroshot.hpp"

#include <cmath>
#include <stdexcept>

#include "bfmadapt/rng.hpp"

namespace bfma {

namespace {
constexpr double kDegenerateNorm = 1e-9;
}

InferenceResult infer(const BfmModel& model, const RewardTask& task, double ridge) {
  if (task.reward.size() != model.n_states) {
    throw std::invalid_argument("infer: reward length does not match the model");
  }
  ProjectionResult proj = project_reward(model.features, model.rho, task.reward, ridge);
  InferenceResult out;
  out.z_r = proj.z;
  out.reconstructed = proj.projected;
  double norm = out.z_r.norm();
  out.degenerate = out.z_r.cwiseAbs().maxCoeff() < kDegenerateNorm;
  if (out.degenerate) {
    out.z_r_sphere = model.codebook[0];
  } else {
    out.z_r_sphere = std::sqrt(static_cast<double>(model.dim())) / norm * out.z_r;
  }
  const Vec rho_sqrt = model.rho.rho.cwiseSqrt();
  const double r_norm = task.reward.cwiseProduct(rho_sqrt).norm();
  if (r_norm > kDegenerateNorm) {
    out.residual_fraction =
        (task.reward - out.reconstructed).cwiseProduct(rho_sqrt).norm() / r_norm;
  }
  return out;
}

PolicyTable softmax_policy(const BfmModel& model, const Vec& z) {
  PolicyTable pi;
  pi.probs = model.policy_probs(z);
  return pi;
}

double exact_policy_value(const TabularMdp& mdp, const PolicyTable& pi, const Vec& reward) {
  Mat q = q_of_policy(mdp, pi, reward);
  double v = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    v += mdp.initial_dist[s] * pi.probs.row(s).dot(q.row(s));
  }
  return v;
}

ReturnStats return_stats_from_samples(const std::vector<double>& discounted,
                                      const std::vector<double>& undiscounted) {
  auto fill = [](const std::vector<double>& xs, double& mean, double& se) {
    const int n = static_cast<int>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += x;
    mean = acc / n;
    if (n < 2) {
      se = 0.0;
      return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
  };
  if (discounted.empty() || discounted.size() != undiscounted.size()) {
    throw std::invalid_argument("return_stats_from_samples: empty or mismatched samples");
  }
  ReturnStats stats;
  fill(discounted, stats.mean_discounted, stats.stderr_discounted);
  fill(undiscounted, stats.mean_undiscounted, stats.stderr_undiscounted);
  return stats;
}

ReturnStats evaluate_return(const TabularMdp& mdp, const BfmModel& model, const Vec& z,
                            const RewardTask& task, int n_episodes, uint64_t seed) {
  if (n_episodes <= 0) throw std::invalid_argument("evaluate_return: n_episodes must be positive");
  Mat probs = model.policy_probs(z);
  ActionSampler sampler = [&probs](int s, RandomStream& rs) {
    return sample_categorical_row(probs, s, rs);
  };
  std::vector<double> disc(n_episodes), undisc(n_episodes);
  for (int ep = 0; ep < n_episodes; ++ep) {
    RandomStream rs(derive_seed(seed, {0x45564cULL, static_cast<uint64_t>(ep)}));
    Rollout ro = rollout(mdp, sampler, std::nullopt, task.horizon, task.reward, rs);
    disc[ep] = discounted_return(ro, mdp.discount);
    double total = 0.0;
    for (double r : ro.rewards) total += r;
    undisc[ep] = total;
  }
  return return_stats_from_samples(disc, undisc);
}

}  // namespace bfma
