#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bfmadapt/bfm.hpp"
#include "bfmadapt/features.hpp"
#include "bfmadapt/mdp.hpp"
#include "bfmadapt/task.hpp"

namespace bfma {

// Actions are N, E, S, W (0..3). A move into a wall or off the grid keeps
// the agent in place; the slip mass splits evenly between the two
// directions perpendicular to the intended one. States are the non-wall
// cells in row-major order.
struct GridSpec {
  int width = 0;
  int height = 0;
  std::vector<std::pair<int, int>> walls;        // (row, col)
  double slip = 0.0;
  std::vector<std::pair<int, int>> start_cells;  // empty: uniform over non-wall cells
  double discount = 0.95;
};

TabularMdp make_gridworld(const GridSpec& spec);

// Full-grid row-major cell -> state id map, -1 for walls.
std::vector<int> grid_cell_states(const GridSpec& spec);

// Every (s, a) reaches `branching` distinct states with Dirichlet(1) weights.
TabularMdp make_random_mdp(int n_states, int n_actions, int branching, uint64_t seed,
                           double discount = 0.95);

RewardTask make_on_span_task(const TabularMdp& mdp, const FeatureMap& phi,
                             const DataDistribution& rho, uint64_t seed, int horizon,
                             int eval_episodes, const std::string& name);
// Goal indicator with its in-span component removed.
RewardTask make_off_span_goal_task(const TabularMdp& mdp, const FeatureMap& phi,
                                   const DataDistribution& rho, int goal_state, int horizon,
                                   int eval_episodes, const std::string& name);
// alpha * (in-span part) + (1 - alpha) * (orthogonal part) of a goal indicator.
RewardTask make_mixed_task(const TabularMdp& mdp, const FeatureMap& phi,
                           const DataDistribution& rho, int goal_state, double alpha,
                           int horizon, int eval_episodes, const std::string& name);

struct TaskInfo {
  RewardTask task;
  bool on_span = false;
  double optimal_value = 0.0;  // d0-weighted optimal value, via value iteration
};

struct TaskSuite {
  std::vector<TaskInfo> tasks;
};

TaskSuite canonical_task_suite(const std::string& env_name, const TabularMdp& mdp,
                               const FeatureMap& phi, const DataDistribution& rho);

struct CanonicalEnv {
  std::string name;
  TabularMdp mdp;
  FeatureMap features;
  DataDistribution rho;
  TaskSuite suite;
};

// fourrooms11 | corridor20 | random50
CanonicalEnv canonical_env(const std::string& name);
GridSpec canonical_grid_spec(const std::string& name);

// Pretraining settings for the canonical benchmark models. Sharper than the
// BfmModel defaults: the canonical suites need near-greedy skills for the
// adaptation targets to be reachable.
Temperatures canonical_temperatures();
inline constexpr int kCanonicalCodebook = 64;

double optimal_value_from_start(const TabularMdp& mdp, const Vec& reward);

}  // namespace bfma
