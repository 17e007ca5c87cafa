#pragma once

#include <cstdint>
#include <vector>

#include "bfmadapt/bfm.hpp"
#include "bfmadapt/replay.hpp"
#include "bfmadapt/report.hpp"
#include "bfmadapt/sphere.hpp"
#include "bfmadapt/task.hpp"

namespace bfma {

// Residual latent adaptation: the pretrained model is frozen; learning
// touches only a tabular residual critic and the conditioning latent z.

struct ResidualCritic {
  Mat q;         // n_states x n_actions
  Mat q_target;  // polyak-averaged copy used in TD targets
  double alpha_c = 0.1;
  double tau = 0.01;
};

ResidualCritic make_critic(int n_states, int n_actions, double alpha_c, double tau);

// Which latent conditions the frozen base value psi(s,a,.)^T z_r.
enum class BaseConditioning { current_z, inferred_z_r };

double base_q(const BfmModel& model, int s, int a, const Vec& cond_latent, const Vec& z_r);
Mat base_q_table(const BfmModel& model, const Vec& cond_latent, const Vec& z_r);

// One TD pass over the batch: targets bootstrap the expected next action
// under the softmax policy at z, per-element table update, then a polyak
// step of q_target toward q. Returns the per-element TD errors. With
// residual=false the base terms drop and the critic learns the full value.
std::vector<double> critic_update(ResidualCritic& critic, const BfmModel& model, const Vec& z,
                                  const Vec& z_r, const Vec& base_cond_latent, bool residual,
                                  const std::vector<Transition>& batch, double gamma);
std::vector<double> critic_update_with_tables(ResidualCritic& critic, const Mat& probs,
                                              const Mat& base, const std::vector<Transition>& batch,
                                              double gamma);

// Per-run scratch for the latent objective and gradient: the codebook
// successor-feature rows regrouped per (s, a) into contiguous k x d blocks
// (the tables themselves scatter one row across k matrices), plus the base
// values when the conditioning latent is fixed for the whole run.
struct LatentWorkspace {
  std::vector<Mat> row_blocks;  // flat (s, a) index -> k x d psi row stack
  Vec base_flat;                // base values per flat (s, a); empty unless fixed
  bool base_is_fixed = false;
};

LatentWorkspace make_latent_workspace(const BfmModel& model, const Vec& z_r,
                                      const Vec& z_r_sphere, BaseConditioning cond, bool use_base);

// J(z) = mean over states of E_{a ~ pi_z}[ base(s,a) + q_res(s,a) ]; the
// gradient is analytic in z (softmax weights and, with current_z
// conditioning, the interpolated-feature path) and is returned projected to
// the tangent space of the sqrt(d) sphere at z. The workspace overloads are
// the implementation; the plain ones build the workspace per call.
double latent_objective(const BfmModel& model, const LatentWorkspace& ws, const Mat& q_res,
                        const Vec& z, const Vec& z_r, BaseConditioning cond, bool use_base,
                        const std::vector<int>& states);
double latent_objective(const BfmModel& model, const Mat& q_res, const Vec& z, const Vec& z_r,
                        const Vec& z_r_sphere, BaseConditioning cond, bool use_base,
                        const std::vector<int>& states);
Vec latent_gradient(const BfmModel& model, const LatentWorkspace& ws, const Mat& q_res,
                    const Vec& z, const Vec& z_r, BaseConditioning cond, bool use_base,
                    const std::vector<int>& states);
Vec latent_gradient(const BfmModel& model, const Mat& q_res, const Vec& z, const Vec& z_r,
                    const Vec& z_r_sphere, BaseConditioning cond, bool use_base,
                    const std::vector<int>& states);

struct RelaConfig {
  bool zero_shot_init = true;   // start z at the inferred latent (no-I ablation: off)
  bool residual = true;         // keep the frozen base value (no-R ablation: off)
  BaseConditioning base_cond = BaseConditioning::inferred_z_r;
  int warm_start_steps = 0;     // transitions collected before any update
  int utd = 4;                  // critic updates per environment step
  double exploration_eps = 0.1;
  double actor_lr = 0.05;
  double critic_lr = 0.1;
  double polyak_tau = 0.01;
  int batch_size = 64;
  int episodes = 300;
  int replay_capacity = 100000;
  double infer_ridge = 1e-8;
  int eval_every = 10;
  int eval_episodes = 50;
  // Critic-guided proposals: every propose_every episodes (once the critic
  // has propose_start episodes of data behind it) the codebook entries, the
  // inferred latent, and the current latent are scored with the critic's
  // objective over all states, and the latent jumps to the argmax. Gradient
  // ascent alone cannot leave a saturated-softmax plateau; the jumps search
  // globally at zero environment cost. 0 disables.
  int propose_every = 5;
  int propose_start = 10;
  // On top of the single skills, proposals also score blends: normalized
  // midpoints of codebook pairs drawn from the propose_pairs best-scoring
  // skills, and midpoints of the current latent with each of those skills.
  // Tasks that fall between skills (no single codebook entry is good) are
  // reachable only through such combinations. 0 keeps single skills only.
  int propose_pairs = 8;
  // Exploration bootstrap: when inference leaves a large part of the reward
  // unexplained (degenerate, or residual_fraction above this threshold), the
  // fallback/base policy carries little information about where the missing
  // reward lives, so the first sweep_episodes episodes cycle through the
  // codebook skills as the acting latent. The replay then covers every
  // skill's territory and the proposal step has real values to compare.
  // -1 sizes the sweep to the codebook, 0 disables it; on-span runs
  // (residual_fraction ~ 0) never sweep.
  double sweep_residual_threshold = 0.25;
  int sweep_episodes = -1;
};

AdaptationReport run_rela(const TabularMdp& mdp, const BfmModel& model, const RewardTask& task,
                          const RelaConfig& cfg, uint64_t seed);

// The scratch latent TD baseline: run_rela with the residual and the
// zero-shot initialization forced off. Bitwise-identical trajectories.
AdaptationReport run_td3z_scratch(const TabularMdp& mdp, const BfmModel& model,
                                  const RewardTask& task, const RelaConfig& cfg, uint64_t seed);

}  // namespace bfma
