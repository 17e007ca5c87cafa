#include "bfmadapt/lola.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "bfmadapt/envs.hpp"
#include "bfmadapt/log.hpp"
#include "bfmadapt/zeroshot.hpp"

namespace bfma {

namespace {

constexpr uint64_t kTagInit = 0x6c6f6c61696e6974ULL;
constexpr uint64_t kTagRun = 0x6c6f6c6172756e00ULL;
constexpr uint64_t kTagEval = 0x6c6f6c616576616cULL;
constexpr uint64_t kTagRoll = 0x6c6f6c61726f6c6cULL;

void check_config(const LolaConfig& cfg) {
  if (cfg.lookahead_n < 1) throw ConfigError("lola: lookahead_n must be >= 1");
  if (cfg.latents_per_state < 2)
    throw ConfigError("lola: latents_per_state must be >= 2 (leave-one-out needs a peer)");
  if (cfg.starts_per_step < 1) throw ConfigError("lola: starts_per_step must be >= 1");
  if (cfg.reset_prob < 0.0 || cfg.reset_prob > 1.0)
    throw ConfigError("lola: reset_prob must lie in [0, 1]");
  if (cfg.lr < 0.0) throw ConfigError("lola: lr must be >= 0");
  if (cfg.lr_final > cfg.lr)
    throw ConfigError("lola: lr_final must not exceed lr (schedules only cool down)");
  if (cfg.sigma_final > 0.0 && cfg.sigma > 0.0 && cfg.sigma_final > cfg.sigma)
    throw ConfigError("lola: sigma_final must not exceed sigma (schedules only cool down)");
  if (cfg.gradient_steps < 0) throw ConfigError("lola: gradient_steps must be >= 0");
  if (cfg.eval_every < 1) throw ConfigError("lola: eval_every must be >= 1");
  if (cfg.eval_episodes < 1) throw ConfigError("lola: eval_episodes must be >= 1");
  if (cfg.infer_ridge < 0.0) throw ConfigError("lola: infer_ridge must be >= 0");
}

// n sampled steps under the softmax table `probs`; discounted reward of the
// states entered, landing state left in *s_end.
double sample_rollout(const TabularMdp& mdp, const Mat& probs, const Vec& reward, int s0, int n,
                      double gamma, RandomStream& rs, StateBank* bank, int* s_end) {
  double acc = 0.0, gt = 1.0;
  int s = s0;
  for (int t = 0; t < n; ++t) {
    int a = sample_categorical_row(probs, s, rs);
    s = sample_categorical_row(mdp.transition, mdp.sa(s, a), rs);
    acc += gt * reward[s];
    gt *= gamma;
    if (bank) bank->push(s);
  }
  *s_end = s;
  return acc;
}

double terminal_value(const BfmModel& model, const Mat& probs, int s, const Vec& z,
                      const Vec& z_r) {
  double v = 0.0;
  for (int a = 0; a < model.n_actions; ++a) v += probs(s, a) * model.usf(s, a, z).dot(z_r);
  return v;
}

}  // namespace

double lookahead_return(const TabularMdp& mdp, const BfmModel& model, const RewardTask& task,
                        int s0, const Vec& z, int n, double gamma, bool bootstrap, uint64_t seed,
                        StateBank* bank, double infer_ridge) {
  if (s0 < 0 || s0 >= mdp.n_states)
    throw std::invalid_argument("lookahead_return: invalid start state");
  if (n < 1) throw std::invalid_argument("lookahead_return: n must be >= 1");
  InferenceResult inf = infer(model, task, infer_ridge);
  Mat probs = model.policy_probs(z);
  RandomStream rs(seed);
  int s_end = s0;
  double acc = sample_rollout(mdp, probs, task.reward, s0, n, gamma, rs, bank, &s_end);
  if (bootstrap) acc += std::pow(gamma, n) * terminal_value(model, probs, s_end, z, inf.z_r);
  return acc;
}

Vec loo_gradient(const std::vector<double>& returns, const std::vector<Vec>& latents,
                 const Vec& mu, double sigma) {
  const int k = static_cast<int>(returns.size());
  if (k < 2) throw std::invalid_argument("loo_gradient: need at least two returns");
  if (latents.size() != returns.size())
    throw std::invalid_argument("loo_gradient: returns/latents size mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("loo_gradient: sigma must be positive");
  double total = 0.0;
  for (double r : returns) total += r;
  Vec g = Vec::Zero(mu.size());
  for (int i = 0; i < k; ++i) {
    double baseline = (total - returns[i]) / (k - 1);
    g += (returns[i] - baseline) / (sigma * sigma) * (latents[i] - mu);
  }
  return g / k;
}

AdaptationReport run_lola(const TabularMdp& mdp, const BfmModel& model, const RewardTask& task,
                          const LolaConfig& cfg, uint64_t seed) {
  check_config(cfg);
  mdp.validate();
  auto t_start = std::chrono::steady_clock::now();

  InferenceResult inf = infer(model, task, cfg.infer_ridge);
  const Vec& z_r = inf.z_r;
  const Vec& z_rs = inf.z_r_sphere;
  const int d = model.dim();

  AdaptationReport report;
  report.algorithm = "lola";
  report.task_name = task.name;
  report.seed = seed;
  report.degenerate_inference = inf.degenerate;
  report.optimal_return = optimal_value_from_start(mdp, task.reward);
  // One eval seed for the whole run, as in the residual adapter: evaluation
  // points share episode noise and compare pairwise.
  const uint64_t eval_seed = derive_seed(seed, {kTagEval});
  report.zero_shot_return =
      evaluate_return(mdp, model, z_rs, task, cfg.eval_episodes, eval_seed).mean_discounted;

  LatentGaussian gauss;
  const double sigma0 = cfg.sigma > 0.0 ? cfg.sigma : 0.25 * std::sqrt(static_cast<double>(d));
  const double sigma1 =
      cfg.sigma_final > 0.0 ? cfg.sigma_final
                            : std::min(sigma0, 0.04 * std::sqrt(static_cast<double>(d)));
  const double lr0 = cfg.lr;
  const double lr1 = cfg.lr_final >= 0.0 ? cfg.lr_final : lr0;
  gauss.sigma = sigma0;
  gauss.lr = lr0;
  if (cfg.zero_shot_init) {
    gauss.mu = z_rs;
  } else {
    RandomStream init_rs(derive_seed(seed, {kTagInit}));
    gauss.mu = random_sphere_latent(d, init_rs);
  }

  RandomStream run_rs(derive_seed(seed, {kTagRun}));
  StateBank bank;
  long long env_steps = 0;

  auto record_eval = [&](int step) {
    ReturnStats stats = evaluate_return(mdp, model, gauss.mu, task, cfg.eval_episodes, eval_seed);
    EvalRecord rec;
    rec.env_steps = env_steps;
    rec.episode = step;
    rec.mean_return = stats.mean_discounted;
    rec.stderr_return = stats.stderr_discounted;
    rec.improvement_pct =
        improvement_pct(stats.mean_discounted, report.zero_shot_return, report.optimal_return);
    rec.cosine_to_zr = cosine(gauss.mu, z_rs);
    report.records.push_back(rec);
    log_debug("lola step " + std::to_string(step) + " return " +
              std::to_string(stats.mean_discounted));
  };
  record_eval(0);

  const int k = cfg.latents_per_state;
  std::vector<double> returns(k);
  std::vector<Vec> latents(k);
  for (int step = 1; step <= cfg.gradient_steps; ++step) {
    // Linear cool-down across the run: wide/fast early steps explore, narrow
    // /slow late steps hold the mean near the best latent found.
    const double frac =
        cfg.gradient_steps > 1 ? static_cast<double>(step - 1) / (cfg.gradient_steps - 1) : 0.0;
    gauss.sigma = sigma0 + (sigma1 - sigma0) * frac;
    gauss.lr = lr0 + (lr1 - lr0) * frac;
    Vec g = Vec::Zero(d);
    for (int j = 0; j < cfg.starts_per_step; ++j) {
      int s0;
      if (bank.empty() || run_rs.uniform01() < cfg.reset_prob) {
        s0 = run_rs.categorical(mdp.initial_dist.data(), mdp.n_states);
      } else {
        s0 = bank.sample(run_rs);
      }
      // All k draws replay the same trajectory stream: shared noise cancels
      // in the leave-one-out advantages, so return differences isolate the
      // effect of the latent. The seed is fixed before the draws, so the
      // estimator stays unbiased.
      const uint64_t traj_seed =
          derive_seed(seed, {kTagRoll, static_cast<uint64_t>(step), static_cast<uint64_t>(j)});
      for (int i = 0; i < k; ++i) {
        Vec z_amb(d);
        for (int c = 0; c < d; ++c) z_amb[c] = gauss.mu[c] + gauss.sigma * run_rs.normal();
        Vec z_cond = sphere_normalize(z_amb);
        Mat probs = model.policy_probs(z_cond);
        RandomStream traj_rs(traj_seed);
        int s_end = s0;
        double r = sample_rollout(mdp, probs, task.reward, s0, cfg.lookahead_n, mdp.discount,
                                  traj_rs, &bank, &s_end);
        if (cfg.bootstrap)
          r += std::pow(mdp.discount, cfg.lookahead_n) *
               terminal_value(model, probs, s_end, z_cond, z_r);
        latents[i] = z_amb;
        returns[i] = r;
      }
      g += loo_gradient(returns, latents, gauss.mu, gauss.sigma);
    }
    g /= cfg.starts_per_step;
    env_steps += static_cast<long long>(cfg.starts_per_step) * k * cfg.lookahead_n;
    if (gauss.lr > 0.0) gauss.mu = sphere_normalize(gauss.mu + gauss.lr * g);
    if (step % cfg.eval_every == 0 || step == cfg.gradient_steps) record_eval(step);
  }

  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace bfma
