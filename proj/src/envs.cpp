#include "bfmadapt/envs.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bfmadapt/rng.hpp"

namespace bfma {

static void check_grid(const GridSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw std::invalid_argument("grid: empty grid");
  if (!(spec.slip >= 0.0 && spec.slip <= 1.0)) throw std::invalid_argument("grid: slip outside [0,1]");
  if (!(spec.discount >= 0.0 && spec.discount < 1.0)) {
    throw std::invalid_argument("grid: discount outside [0,1)");
  }
  for (auto [r, c] : spec.walls) {
    if (r < 0 || r >= spec.height || c < 0 || c >= spec.width) {
      throw std::invalid_argument("grid: wall outside the grid");
    }
  }
}

std::vector<int> grid_cell_states(const GridSpec& spec) {
  check_grid(spec);
  std::set<std::pair<int, int>> walls(spec.walls.begin(), spec.walls.end());
  std::vector<int> map(static_cast<size_t>(spec.width) * spec.height, -1);
  int next = 0;
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (!walls.count({r, c})) map[r * spec.width + c] = next++;
    }
  }
  if (next == 0) throw std::invalid_argument("grid: no free cells");
  return map;
}

TabularMdp make_gridworld(const GridSpec& spec) {
  std::vector<int> map = grid_cell_states(spec);
  const int W = spec.width, H = spec.height;
  int S = 0;
  for (int id : map) S = std::max(S, id + 1);

  // N, E, S, W row/col deltas.
  static const int dr[4] = {-1, 0, 1, 0};
  static const int dc[4] = {0, 1, 0, -1};
  // Perpendicular action pairs: N/S slip to E and W, E/W slip to N and S.
  static const int perp[4][2] = {{1, 3}, {0, 2}, {1, 3}, {0, 2}};

  TabularMdp mdp;
  mdp.n_states = S;
  mdp.n_actions = 4;
  mdp.discount = spec.discount;
  mdp.transition = Mat::Zero(S * 4, S);

  auto target = [&](int r, int c, int dir) {
    int nr = r + dr[dir], nc = c + dc[dir];
    if (nr < 0 || nr >= H || nc < 0 || nc >= W) return map[r * W + c];
    int id = map[nr * W + nc];
    return id >= 0 ? id : map[r * W + c];
  };

  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      int s = map[r * W + c];
      if (s < 0) continue;
      for (int a = 0; a < 4; ++a) {
        int row = mdp.sa(s, a);
        mdp.transition(row, target(r, c, a)) += 1.0 - spec.slip;
        mdp.transition(row, target(r, c, perp[a][0])) += spec.slip / 2.0;
        mdp.transition(row, target(r, c, perp[a][1])) += spec.slip / 2.0;
      }
    }
  }

  mdp.initial_dist = Vec::Zero(S);
  if (spec.start_cells.empty()) {
    mdp.initial_dist.setConstant(1.0 / S);
  } else {
    for (auto [r, c] : spec.start_cells) {
      if (r < 0 || r >= H || c < 0 || c >= W || map[r * W + c] < 0) {
        throw std::invalid_argument("grid: start cell is a wall or out of bounds");
      }
      mdp.initial_dist[map[r * W + c]] += 1.0;
    }
    mdp.initial_dist /= mdp.initial_dist.sum();
  }
  mdp.validate();
  return mdp;
}

TabularMdp make_random_mdp(int n_states, int n_actions, int branching, uint64_t seed,
                           double discount) {
  if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("random mdp: empty");
  if (branching <= 0 || branching > n_states) {
    throw std::invalid_argument("random mdp: branching outside [1, n_states]");
  }
  RandomStream rs(seed);
  TabularMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.discount = discount;
  mdp.transition = Mat::Zero(n_states * n_actions, n_states);
  std::vector<int> pool(n_states);
  for (int row = 0; row < n_states * n_actions; ++row) {
    // Partial Fisher-Yates picks `branching` distinct successor states.
    for (int i = 0; i < n_states; ++i) pool[i] = i;
    double total = 0.0;
    for (int j = 0; j < branching; ++j) {
      int pick = j + rs.uniform_int(n_states - j);
      std::swap(pool[j], pool[pick]);
      double w = -std::log(1.0 - rs.uniform01());
      mdp.transition(row, pool[j]) = w;
      total += w;
    }
    mdp.transition.row(row) /= total;
  }
  mdp.initial_dist = Vec::Constant(n_states, 1.0 / n_states);
  mdp.validate();
  return mdp;
}

double optimal_value_from_start(const TabularMdp& mdp, const Vec& reward) {
  auto [q, pi] = optimal_q(mdp, reward);
  double v = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) v += mdp.initial_dist[s] * q.row(s).maxCoeff();
  return v;
}

RewardTask make_on_span_task(const TabularMdp& mdp, const FeatureMap& phi,
                             const DataDistribution& rho, uint64_t seed, int horizon,
                             int eval_episodes, const std::string& name) {
  (void)rho;
  const int d = phi.dim();
  RandomStream rs(seed);
  Vec w(d);
  for (int i = 0; i < d; ++i) w[i] = rs.normal();
  w *= std::sqrt(static_cast<double>(d)) / w.norm();
  RewardTask t;
  t.name = name;
  t.reward = phi.phi * w;
  t.horizon = horizon;
  t.eval_episodes = eval_episodes;
  return t;
}

static Vec goal_indicator(int n_states, int goal_state) {
  if (goal_state < 0 || goal_state >= n_states) {
    throw std::invalid_argument("task: goal state out of range");
  }
  Vec g = Vec::Zero(n_states);
  g[goal_state] = 1.0;
  return g;
}

RewardTask make_off_span_goal_task(const TabularMdp& mdp, const FeatureMap& phi,
                                   const DataDistribution& rho, int goal_state, int horizon,
                                   int eval_episodes, const std::string& name) {
  Vec g = goal_indicator(mdp.n_states, goal_state);
  ProjectionResult pr = project_reward(phi, rho, g, 0.0);
  RewardTask t;
  t.name = name;
  t.reward = pr.residual;
  t.horizon = horizon;
  t.eval_episodes = eval_episodes;
  return t;
}

RewardTask make_mixed_task(const TabularMdp& mdp, const FeatureMap& phi,
                           const DataDistribution& rho, int goal_state, double alpha,
                           int horizon, int eval_episodes, const std::string& name) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("task: alpha outside [0,1]");
  Vec g = goal_indicator(mdp.n_states, goal_state);
  ProjectionResult pr = project_reward(phi, rho, g, 0.0);
  RewardTask t;
  t.name = name;
  t.reward = alpha * pr.projected + (1.0 - alpha) * pr.residual;
  t.horizon = horizon;
  t.eval_episodes = eval_episodes;
  return t;
}

namespace {

struct CanonicalTasks {
  uint64_t on_seed_a, on_seed_b;
  int off_goal_a, off_goal_b;
  int mixed_goal_a, mixed_goal_b;
  int horizon;
  int eval_episodes;
};

CanonicalTasks canonical_task_params(const std::string& env_name) {
  if (env_name == "fourrooms11") return {11, 12, 45, 57, 51, 50, 60, 50};
  if (env_name == "corridor20") return {21, 22, 10, 11, 5, 8, 60, 50};
  if (env_name == "random50") return {31, 32, 46, 10, 9, 10, 60, 50};
  throw std::invalid_argument("unknown canonical environment: " + env_name);
}

}  // namespace

TaskSuite canonical_task_suite(const std::string& env_name, const TabularMdp& mdp,
                               const FeatureMap& phi, const DataDistribution& rho) {
  CanonicalTasks p = canonical_task_params(env_name);
  TaskSuite suite;
  auto add = [&](RewardTask task, bool on_span) {
    TaskInfo info;
    info.optimal_value = optimal_value_from_start(mdp, task.reward);
    info.task = std::move(task);
    info.on_span = on_span;
    suite.tasks.push_back(std::move(info));
  };
  add(make_on_span_task(mdp, phi, rho, p.on_seed_a, p.horizon, p.eval_episodes, "on_span_a"), true);
  add(make_on_span_task(mdp, phi, rho, p.on_seed_b, p.horizon, p.eval_episodes, "on_span_b"), true);
  add(make_off_span_goal_task(mdp, phi, rho, p.off_goal_a, p.horizon, p.eval_episodes,
                              "off_goal_" + std::to_string(p.off_goal_a)), false);
  add(make_off_span_goal_task(mdp, phi, rho, p.off_goal_b, p.horizon, p.eval_episodes,
                              "off_goal_" + std::to_string(p.off_goal_b)), false);
  add(make_mixed_task(mdp, phi, rho, p.mixed_goal_a, 0.5, p.horizon, p.eval_episodes,
                      "mixed_goal_" + std::to_string(p.mixed_goal_a)), false);
  add(make_mixed_task(mdp, phi, rho, p.mixed_goal_b, 0.5, p.horizon, p.eval_episodes,
                      "mixed_goal_" + std::to_string(p.mixed_goal_b)), false);
  return suite;
}

GridSpec canonical_grid_spec(const std::string& name) {
  if (name == "fourrooms11") {
    GridSpec g;
    g.width = 11;
    g.height = 11;
    g.slip = 0.1;
    g.discount = 0.9;
    for (int r = 0; r < 11; ++r) {
      if (r != 2 && r != 8) g.walls.push_back({r, 5});
    }
    for (int c = 0; c < 11; ++c) {
      if (c != 2 && c != 8 && c != 5) g.walls.push_back({5, c});
    }
    return g;
  }
  if (name == "corridor20") {
    GridSpec g;
    g.width = 20;
    g.height = 1;
    g.slip = 0.15;
    g.discount = 0.9;
    return g;
  }
  throw std::invalid_argument("unknown grid environment: " + name);
}

CanonicalEnv canonical_env(const std::string& name) {
  CanonicalEnv env;
  env.name = name;
  FeatureSpec fs;
  if (name == "fourrooms11") {
    env.mdp = make_gridworld(canonical_grid_spec(name));
    fs.kind = FeatureSpec::Kind::laplacian_eigs;
    fs.d = 8;
  } else if (name == "corridor20") {
    env.mdp = make_gridworld(canonical_grid_spec(name));
    fs.kind = FeatureSpec::Kind::laplacian_eigs;
    fs.d = 4;
  } else if (name == "random50") {
    env.mdp = make_random_mdp(50, 4, 5, 7, 0.9);
    fs.kind = FeatureSpec::Kind::random_orthonormal;
    fs.d = 10;
    fs.seed = 2026;
  } else {
    throw std::invalid_argument("unknown canonical environment: " + name);
  }
  env.features = make_features(env.mdp, fs);
  env.rho = uniform_distribution(env.mdp.n_states);
  env.suite = canonical_task_suite(name, env.mdp, env.features, env.rho);
  return env;
}

Temperatures canonical_temperatures() { return {40.0, 60.0}; }

}  // namespace bfma
