#include "bfmadapt/rela.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "bfmadapt/envs.hpp"
#include "bfmadapt/log.hpp"
#include "bfmadapt/zeroshot.hpp"

namespace bfma {

namespace {

constexpr uint64_t kTagInit = 0x72656c61'696e6974ULL;
constexpr uint64_t kTagAct = 0x72656c61'61637400ULL;
constexpr uint64_t kTagReplay = 0x72656c61'72657000ULL;
constexpr uint64_t kTagEval = 0x72656c61'6576616cULL;

void check_config(const RelaConfig& cfg) {
  if (cfg.episodes < 1) throw ConfigError("rela: episodes must be >= 1");
  if (cfg.utd < 1) throw ConfigError("rela: utd must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("rela: batch_size must be >= 1");
  if (cfg.exploration_eps < 0.0 || cfg.exploration_eps > 1.0)
    throw ConfigError("rela: eps must lie in [0, 1]");
  if (cfg.warm_start_steps < 0) throw ConfigError("rela: warm_start_steps must be >= 0");
  if (cfg.actor_lr < 0.0 || cfg.critic_lr < 0.0) throw ConfigError("rela: learning rates must be >= 0");
  if (cfg.polyak_tau < 0.0 || cfg.polyak_tau > 1.0) throw ConfigError("rela: tau must lie in [0, 1]");
  if (cfg.replay_capacity < 1) throw ConfigError("rela: replay_capacity must be >= 1");
  if (cfg.eval_every < 1) throw ConfigError("rela: eval_every must be >= 1");
  if (cfg.eval_episodes < 1) throw ConfigError("rela: eval_episodes must be >= 1");
  if (cfg.infer_ridge < 0.0) throw ConfigError("rela: infer_ridge must be >= 0");
  if (cfg.propose_every < 0) throw ConfigError("rela: propose_every must be >= 0");
  if (cfg.propose_start < 0) throw ConfigError("rela: propose_start must be >= 0");
  if (cfg.propose_pairs < 0) throw ConfigError("rela: propose_pairs must be >= 0");
  if (cfg.sweep_residual_threshold < 0.0) {
    throw ConfigError("rela: sweep_residual_threshold must be >= 0");
  }
  if (cfg.sweep_episodes < -1) throw ConfigError("rela: sweep_episodes must be >= -1");
}

}  // namespace

ResidualCritic make_critic(int n_states, int n_actions, double alpha_c, double tau) {
  ResidualCritic critic;
  critic.q = Mat::Zero(n_states, n_actions);
  critic.q_target = Mat::Zero(n_states, n_actions);
  critic.alpha_c = alpha_c;
  critic.tau = tau;
  return critic;
}

double base_q(const BfmModel& model, int s, int a, const Vec& cond_latent, const Vec& z_r) {
  return model.usf(s, a, cond_latent).dot(z_r);
}

Mat base_q_table(const BfmModel& model, const Vec& cond_latent, const Vec& z_r) {
  Vec flat = model.mixed_psi(cond_latent) * z_r;  // (S*A) indexed by sa(s,a)
  Mat table(model.n_states, model.n_actions);
  for (int s = 0; s < model.n_states; ++s)
    for (int a = 0; a < model.n_actions; ++a) table(s, a) = flat[model.sa(s, a)];
  return table;
}

std::vector<double> critic_update_with_tables(ResidualCritic& critic, const Mat& probs,
                                              const Mat& base, const std::vector<Transition>& batch,
                                              double gamma) {
  if (batch.empty()) throw std::invalid_argument("critic_update: empty batch");
  std::vector<double> deltas(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = batch[i];
    double next_value =
        probs.row(t.s_next).dot(base.row(t.s_next) + critic.q_target.row(t.s_next));
    double y = t.r + gamma * next_value;
    double delta = y - base(t.s, t.a) - critic.q(t.s, t.a);
    critic.q(t.s, t.a) += critic.alpha_c * delta;
    deltas[i] = delta;
  }
  critic.q_target = (1.0 - critic.tau) * critic.q_target + critic.tau * critic.q;
  return deltas;
}

std::vector<double> critic_update(ResidualCritic& critic, const BfmModel& model, const Vec& z,
                                  const Vec& z_r, const Vec& base_cond_latent, bool residual,
                                  const std::vector<Transition>& batch, double gamma) {
  Mat probs = model.policy_probs(z);
  Mat base = Mat::Zero(model.n_states, model.n_actions);
  if (residual) base = base_q_table(model, base_cond_latent, z_r);
  return critic_update_with_tables(critic, probs, base, batch, gamma);
}

LatentWorkspace make_latent_workspace(const BfmModel& model, const Vec& z_r,
                                      const Vec& z_r_sphere, BaseConditioning cond,
                                      bool use_base) {
  const int rows = model.n_states * model.n_actions;
  const int k = static_cast<int>(model.codebook.size());
  const int d = model.dim();
  LatentWorkspace ws;
  ws.row_blocks.resize(rows, Mat(k, d));
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < k; ++i) ws.row_blocks[r].row(i) = model.psi_tables[i].row(r);
  }
  if (use_base && cond == BaseConditioning::inferred_z_r) {
    ws.base_is_fixed = true;
    ws.base_flat = model.mixed_psi(z_r_sphere) * z_r;
  }
  return ws;
}

double latent_objective(const BfmModel& model, const LatentWorkspace& ws, const Mat& q_res,
                        const Vec& z, const Vec& z_r, BaseConditioning cond, bool use_base,
                        const std::vector<int>& states) {
  if (states.empty()) throw std::invalid_argument("latent_objective: empty state batch");
  if (use_base && cond == BaseConditioning::inferred_z_r && !ws.base_is_fixed) {
    throw std::invalid_argument("latent_objective: workspace lacks the fixed base values");
  }
  const int A = model.n_actions;
  // Codebook weights are shared across every (s, a); hoist them out of the loop.
  const Vec w = model.usf_weights(z);
  const bool base_follows_z = use_base && cond == BaseConditioning::current_z;
  Vec logits(A), values(A);
  double total = 0.0;
  for (int s : states) {
    for (int a = 0; a < A; ++a) {
      const int row = model.sa(s, a);
      const Mat& blk = ws.row_blocks[row];
      logits[a] = model.temps.beta_pi * w.dot(blk * z);
      double base = 0.0;
      if (use_base) base = base_follows_z ? w.dot(blk * z_r) : ws.base_flat[row];
      values[a] = q_res(s, a) + base;
    }
    total += softmax(logits).dot(values);
  }
  return total / static_cast<double>(states.size());
}

double latent_objective(const BfmModel& model, const Mat& q_res, const Vec& z, const Vec& z_r,
                        const Vec& z_r_sphere, BaseConditioning cond, bool use_base,
                        const std::vector<int>& states) {
  LatentWorkspace ws = make_latent_workspace(model, z_r, z_r_sphere, cond, use_base);
  return latent_objective(model, ws, q_res, z, z_r, cond, use_base, states);
}

Vec latent_gradient(const BfmModel& model, const LatentWorkspace& ws, const Mat& q_res,
                    const Vec& z, const Vec& z_r, BaseConditioning cond, bool use_base,
                    const std::vector<int>& states) {
  if (states.empty()) throw std::invalid_argument("latent_gradient: empty state batch");
  if (use_base && cond == BaseConditioning::inferred_z_r && !ws.base_is_fixed) {
    throw std::invalid_argument("latent_gradient: workspace lacks the fixed base values");
  }
  const int A = model.n_actions;
  const int d = model.dim();
  const int k = static_cast<int>(model.codebook.size());
  const double beta_pi = model.temps.beta_pi;
  const bool base_follows_z = use_base && cond == BaseConditioning::current_z;
  // The usf jacobian at z is sum_i psi_i(s,a) g_i^T with g_i shared across
  // (s, a): g_i = (beta_psi / d) w_i (c_i - cbar). Precomputing g turns the
  // per-pair jacobian into a handful of matrix-vector products.
  const Vec w = model.usf_weights(z);
  Vec cbar = Vec::Zero(d);
  for (int i = 0; i < k; ++i) cbar += w[i] * model.codebook[i];
  Mat g(k, d);
  const double scale = model.temps.beta_psi / d;
  for (int i = 0; i < k; ++i) g.row(i) = scale * w[i] * (model.codebook[i] - cbar).transpose();

  Vec acc = Vec::Zero(d);
  Vec logits(A), values(A), psi_dots(k), psi_dots_r(k), psi_mix(d);
  Mat grad_logits(A, d);
  Mat base_path(A, k);  // psi_i(s,a) . z_r, for the moving-base term
  for (int s : states) {
    for (int a = 0; a < A; ++a) {
      const int row = model.sa(s, a);
      const Mat& blk = ws.row_blocks[row];
      psi_dots.noalias() = blk * z;        // psi_i(s,a) . z per skill
      psi_mix.noalias() = blk.transpose() * w;
      logits[a] = beta_pi * psi_dots.dot(w);
      grad_logits.row(a) = beta_pi * (psi_dots.transpose() * g + psi_mix.transpose());
      double base = 0.0;
      if (use_base) {
        if (base_follows_z) {
          psi_dots_r.noalias() = blk * z_r;
          base_path.row(a) = psi_dots_r.transpose();
          base = w.dot(psi_dots_r);
        } else {
          base = ws.base_flat[row];
        }
      }
      values[a] = q_res(s, a) + base;
    }
    Vec pi = softmax(logits);
    Vec grad_bar = grad_logits.transpose() * pi;
    for (int a = 0; a < A; ++a) {
      acc += pi[a] * values[a] * (grad_logits.row(a).transpose() - grad_bar);
      if (base_follows_z) acc += pi[a] * (g.transpose() * base_path.row(a).transpose());
    }
  }
  acc /= static_cast<double>(states.size());
  return tangent_project(z, acc);
}

Vec latent_gradient(const BfmModel& model, const Mat& q_res, const Vec& z, const Vec& z_r,
                    const Vec& z_r_sphere, BaseConditioning cond, bool use_base,
                    const std::vector<int>& states) {
  LatentWorkspace ws = make_latent_workspace(model, z_r, z_r_sphere, cond, use_base);
  return latent_gradient(model, ws, q_res, z, z_r, cond, use_base, states);
}

AdaptationReport run_rela(const TabularMdp& mdp, const BfmModel& model, const RewardTask& task,
                          const RelaConfig& cfg, uint64_t seed) {
  check_config(cfg);
  mdp.validate();
  auto t_start = std::chrono::steady_clock::now();

  InferenceResult inf = infer(model, task, cfg.infer_ridge);
  const Vec& z_r = inf.z_r;
  const Vec& z_rs = inf.z_r_sphere;

  AdaptationReport report;
  report.algorithm = "rela";
  report.task_name = task.name;
  report.seed = seed;
  report.degenerate_inference = inf.degenerate;
  report.optimal_return = optimal_value_from_start(mdp, task.reward);
  // One eval seed for the whole run: eval points share episode noise, so
  // comparisons against the zero-shot return and across episodes are paired.
  const uint64_t eval_seed = derive_seed(seed, {kTagEval});
  report.zero_shot_return =
      evaluate_return(mdp, model, z_rs, task, cfg.eval_episodes, eval_seed).mean_discounted;

  Vec z;
  if (cfg.zero_shot_init) {
    z = z_rs;
  } else {
    RandomStream init_rs(derive_seed(seed, {kTagInit}));
    z = random_sphere_latent(model.dim(), init_rs);
  }

  RandomStream act_rs(derive_seed(seed, {kTagAct}));
  ReplayBuffer buffer(cfg.replay_capacity, derive_seed(seed, {kTagReplay}));
  ResidualCritic critic = make_critic(mdp.n_states, mdp.n_actions, cfg.critic_lr, cfg.polyak_tau);

  const int A = mdp.n_actions;
  const Mat zero_base = Mat::Zero(mdp.n_states, A);
  // With inferred-latent conditioning the base table never moves.
  const Mat fixed_base =
      cfg.residual && cfg.base_cond == BaseConditioning::inferred_z_r
          ? base_q_table(model, z_rs, z_r)
          : zero_base;

  long long env_steps = 0;
  auto act_step = [&](int s, const Mat& probs) {
    int a;
    if (act_rs.uniform01() < cfg.exploration_eps) {
      a = act_rs.uniform_int(A);
    } else {
      a = sample_categorical_row(probs, s, act_rs);
    }
    int s_next = sample_categorical_row(mdp.transition, mdp.sa(s, a), act_rs);
    Transition t{s, a, task.reward[s_next], s_next};
    buffer.push(t);
    ++env_steps;
    return s_next;
  };

  // Warm start: collect transitions at the initial latent, no updates.
  if (cfg.warm_start_steps > 0) {
    Mat probs = model.policy_probs(z);
    int collected = 0;
    while (collected < cfg.warm_start_steps) {
      int s = act_rs.categorical(mdp.initial_dist.data(), mdp.n_states);
      for (int t = 0; t < task.horizon && collected < cfg.warm_start_steps; ++t) {
        s = act_step(s, probs);
        ++collected;
      }
    }
  }

  auto record_eval = [&](int episode) {
    ReturnStats stats = evaluate_return(mdp, model, z, task, cfg.eval_episodes, eval_seed);
    EvalRecord rec;
    rec.env_steps = env_steps;
    rec.episode = episode;
    rec.mean_return = stats.mean_discounted;
    rec.stderr_return = stats.stderr_discounted;
    rec.improvement_pct =
        improvement_pct(stats.mean_discounted, report.zero_shot_return, report.optimal_return);
    rec.cosine_to_zr = cosine(z, z_rs);
    report.records.push_back(rec);
    log_debug("rela episode " + std::to_string(episode) + " return " +
              std::to_string(stats.mean_discounted));
  };
  record_eval(0);

  const LatentWorkspace lat_ws =
      make_latent_workspace(model, z_r, z_rs, cfg.base_cond, cfg.residual);
  std::vector<int> all_states(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) all_states[s] = s;
  const int n_skills = static_cast<int>(model.codebook.size());
  // Critic-guided global search: score the codebook, the inferred latent,
  // the current latent, and normalized midpoints among the best skills with
  // the critic's objective, then jump to the argmax. Deterministic and free
  // of environment interaction. The midpoints matter for tasks that fall
  // between skills, where no single codebook entry clears the bar.
  auto propose_latent = [&]() {
    auto score = [&](const Vec& cand) {
      return latent_objective(model, lat_ws, critic.q, cand, z_r, cfg.base_cond, cfg.residual,
                              all_states);
    };
    double best = score(z);
    Vec best_z = z;
    auto consider = [&](const Vec& cand) {
      double v = score(cand);
      if (v > best) { best = v; best_z = cand; }
    };
    if (cfg.zero_shot_init) consider(z_rs);
    std::vector<std::pair<double, int>> ranked(n_skills);
    for (int i = 0; i < n_skills; ++i) {
      ranked[i] = {score(model.codebook[i]), i};
      if (ranked[i].first > best) { best = ranked[i].first; best_z = model.codebook[i]; }
    }
    const int top = std::min(cfg.propose_pairs, n_skills);
    if (top > 0) {
      std::partial_sort(ranked.begin(), ranked.begin() + top, ranked.end(),
                        std::greater<std::pair<double, int>>());
      auto consider_mid = [&](const Vec& a, const Vec& b) {
        Vec sum = a + b;
        if (sum.norm() > 1e-9) consider(sphere_normalize(sum));
      };
      for (int i = 0; i < top; ++i) {
        consider_mid(z, model.codebook[ranked[i].second]);
        for (int j = i + 1; j < top; ++j) {
          consider_mid(model.codebook[ranked[i].second], model.codebook[ranked[j].second]);
        }
      }
    }
    z = best_z;
  };

  int sweep_len = 0;
  if ((inf.degenerate || inf.residual_fraction > cfg.sweep_residual_threshold) &&
      cfg.sweep_episodes != 0) {
    sweep_len = cfg.sweep_episodes > 0 ? cfg.sweep_episodes : n_skills;
    sweep_len = std::min(sweep_len, cfg.episodes / 2);
  }

  std::vector<int> state_batch(cfg.batch_size);
  for (int episode = 1; episode <= cfg.episodes; ++episode) {
    if (episode <= sweep_len) z = model.codebook[(episode - 1) % n_skills];
    int s = act_rs.categorical(mdp.initial_dist.data(), mdp.n_states);
    // Acting and bootstrap tables are refreshed per episode: the latent moves
    // at most actor_lr per step, so the within-episode drift is negligible and
    // the full-table recomputation is the dominant cost otherwise.
    const Mat probs = model.policy_probs(z);
    const Mat& base = !cfg.residual ? zero_base
                      : cfg.base_cond == BaseConditioning::current_z
                          ? base_q_table(model, z, z_r)
                          : fixed_base;
    for (int t = 0; t < task.horizon; ++t) {
      s = act_step(s, probs);
      for (int u = 0; u < cfg.utd; ++u) {
        critic_update_with_tables(critic, probs, base, buffer.sample_batch(cfg.batch_size),
                                  mdp.discount);
      }
      std::vector<Transition> lbatch = buffer.sample_batch(cfg.batch_size);
      for (int i = 0; i < cfg.batch_size; ++i) state_batch[i] = lbatch[i].s;
      Vec g = latent_gradient(model, lat_ws, critic.q, z, z_r, cfg.base_cond, cfg.residual,
                              state_batch);
      if (cfg.actor_lr > 0.0) z = sphere_normalize(z + cfg.actor_lr * g);
    }
    const bool sweep_handoff = sweep_len > 0 && episode == sweep_len;
    if (cfg.propose_every > 0 &&
        (sweep_handoff || (episode > sweep_len && episode >= cfg.propose_start &&
                           episode % cfg.propose_every == 0))) {
      propose_latent();
    }
    if (episode % cfg.eval_every == 0 || episode == cfg.episodes) record_eval(episode);
  }

  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

AdaptationReport run_td3z_scratch(const TabularMdp& mdp, const BfmModel& model,
                                  const RewardTask& task, const RelaConfig& cfg, uint64_t seed) {
  RelaConfig scratch = cfg;
  scratch.residual = false;
  scratch.zero_shot_init = false;
  AdaptationReport report = run_rela(mdp, model, task, scratch, seed);
  report.algorithm = "td3z_scratch";
  return report;
}

}  // namespace bfma
