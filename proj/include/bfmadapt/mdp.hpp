#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "bfmadapt/rng.hpp"
#include "bfmadapt/types.hpp"

namespace bfma {

// Finite MDP with a state-reward convention: acting in (s, a) pays the
// reward of the *next* state, so every value here is
//   Q(s,a) = sum_t gamma^t E[ r(s_{t+1}) | s, a ].
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  Mat transition;    // (n_states * n_actions) x n_states, row sa(s, a)
  Vec initial_dist;  // length n_states
  double discount = 0.0;

  int sa(int s, int a) const { return s * n_actions + a; }
  void validate() const;
};

struct PolicyTable {
  Mat probs;  // n_states x n_actions
  void validate(const TabularMdp& mdp) const;
};

// m(sa, s') = sum_t gamma^t Pr(s_{t+1} = s' | s, a, pi); rows sum to 1/(1-gamma).
struct SuccessorMeasure {
  Mat m;  // (n_states * n_actions) x n_states
};

struct Rollout {
  int start_state = 0;
  std::vector<int> states;   // horizon + 1 entries
  std::vector<int> actions;  // horizon entries
  std::vector<double> rewards;
};

using ActionSampler = std::function<int(int state, RandomStream& rs)>;

Mat policy_transition(const TabularMdp& mdp, const PolicyTable& pi);
SuccessorMeasure successor_measure(const TabularMdp& mdp, const PolicyTable& pi);
Mat q_of_policy(const TabularMdp& mdp, const PolicyTable& pi, const Vec& reward);

// Value iteration to sup-norm 1e-10; greedy ties break to the lowest index.
std::pair<Mat, PolicyTable> optimal_q(const TabularMdp& mdp, const Vec& reward);
PolicyTable greedy_policy_from_q(const Mat& q, double tie_tol = 1e-9);

Rollout rollout(const TabularMdp& mdp, const ActionSampler& sampler,
                std::optional<int> start, int horizon, const Vec& reward,
                RandomStream& rs);
double discounted_return(const Rollout& ro, double gamma);

int sample_categorical_row(const Mat& table, int row, RandomStream& rs);

}  // namespace bfma
