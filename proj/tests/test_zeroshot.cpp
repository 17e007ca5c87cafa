#include <doctest.h>

#include "bfmadapt/envs.hpp"
#include "bfmadapt/zeroshot.hpp"
#include "helpers.hpp"

using namespace bfma;

namespace {

BfmModel fork_model(double beta_pi = 10.0) {
  TabularMdp mdp = testutil::two_act();
  FeatureSpec fs;
  fs.kind = FeatureSpec::Kind::one_hot_subset;
  fs.indices = {1};
  FeatureMap phi = make_features(mdp, fs);
  std::vector<Vec> codebook;
  Vec z(1);
  z[0] = 1.0;
  codebook.push_back(z);
  Temperatures temps;
  temps.beta_pi = beta_pi;
  return pretrain_with_codebook(mdp, phi, uniform_distribution(3), codebook, temps);
}

}  // namespace

TEST_CASE("inference recovers in-span reward coefficients") {
  BfmModel m = fork_model();
  RewardTask task;
  task.name = "reach";
  task.reward = Vec::Zero(3);
  task.reward[1] = 1.0;
  InferenceResult inf = infer(m, task, 0.0);
  CHECK(inf.z_r[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(inf.z_r_sphere[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(inf.degenerate);
  CHECK((inf.reconstructed - task.reward).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("orthogonal rewards infer a degenerate zero latent") {
  BfmModel m = fork_model();
  RewardTask task;
  task.name = "orthogonal";
  task.reward = Vec::Zero(3);
  task.reward[0] = 1.0;
  InferenceResult inf = infer(m, task, 0.0);
  CHECK(inf.z_r.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(inf.degenerate);
  // Fallback conditioning latent comes from the codebook.
  CHECK((inf.z_r_sphere - m.codebook[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(inf.reconstructed.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("full-rank features reconstruct any reward exactly") {
  TabularMdp mdp = testutil::random_dense_mdp(6, 2, 30, 0.9);
  FeatureSpec fs;
  fs.kind = FeatureSpec::Kind::one_hot_subset;
  fs.indices = {0, 1, 2, 3, 4, 5};
  FeatureMap phi = make_features(mdp, fs);
  BfmModel m = pretrain(mdp, phi, uniform_distribution(6), 3, 31);
  RewardTask task;
  task.reward = testutil::random_vec(6, 32);
  InferenceResult inf = infer(m, task, 0.0);
  CHECK((inf.reconstructed - task.reward).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("inference is scale-equivariant and the policy scale-invariant") {
  TabularMdp mdp = testutil::random_dense_mdp(8, 3, 33, 0.9);
  FeatureSpec fs;
  fs.kind = FeatureSpec::Kind::random_orthonormal;
  fs.d = 3;
  fs.seed = 34;
  FeatureMap phi = make_features(mdp, fs);
  BfmModel m = pretrain(mdp, phi, uniform_distribution(8), 5, 35);
  RewardTask task;
  task.reward = phi.phi * testutil::random_vec(3, 36);
  InferenceResult a = infer(m, task, 0.0);
  RewardTask scaled = task;
  scaled.reward *= 3.5;
  InferenceResult b = infer(m, scaled, 0.0);
  CHECK((b.z_r - 3.5 * a.z_r).cwiseAbs().maxCoeff() < 1e-9);
  for (int s = 0; s < 8; ++s) {
    Vec va(m.n_actions), vb(m.n_actions);
    for (int act = 0; act < m.n_actions; ++act) {
      va[act] = m.usf(s, act, a.z_r_sphere).dot(a.z_r);
      vb[act] = m.usf(s, act, b.z_r_sphere).dot(b.z_r);
    }
    CHECK(argmax_tied(va) == argmax_tied(vb));
  }
}

TEST_CASE("deterministic fork evaluation returns 1.75 with zero spread") {
  BfmModel m = fork_model(1e6);
  RewardTask task;
  task.reward = Vec::Zero(3);
  task.reward[1] = 1.0;
  task.horizon = 3;
  task.eval_episodes = 4;
  ReturnStats stats = evaluate_return(testutil::two_act(), m, m.codebook[0], task, 4, 77);
  CHECK(stats.mean_discounted == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(stats.stderr_discounted == 0.0);
  CHECK(stats.mean_undiscounted == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("zero rewards evaluate to zero return") {
  BfmModel m = fork_model();
  RewardTask task;
  task.reward = Vec::Zero(3);
  task.horizon = 5;
  ReturnStats stats = evaluate_return(testutil::two_act(), m, m.codebook[0], task, 3, 5);
  CHECK(stats.mean_discounted == 0.0);
  CHECK(stats.mean_undiscounted == 0.0);
}

TEST_CASE("evaluation is reproducible from its seed") {
  CanonicalEnv env = canonical_env("corridor20");
  BfmModel m = pretrain(env.mdp, env.features, env.rho, 8, 40);
  const RewardTask& task = env.suite.tasks[0].task;
  Vec z = m.codebook[2];
  ReturnStats a = evaluate_return(env.mdp, m, z, task, 20, 123);
  ReturnStats b = evaluate_return(env.mdp, m, z, task, 20, 123);
  ReturnStats c = evaluate_return(env.mdp, m, z, task, 20, 124);
  CHECK(a.mean_discounted == b.mean_discounted);
  CHECK(a.stderr_discounted == b.stderr_discounted);
  CHECK(a.mean_discounted != c.mean_discounted);
}

TEST_CASE("softmax policies with sharp temperatures recover in-codebook optima") {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    TabularMdp mdp = testutil::random_dense_mdp(10, 3, 600 + seed, 0.9);
    FeatureSpec fs;
    fs.kind = FeatureSpec::Kind::random_orthonormal;
    fs.d = 4;
    fs.seed = 610 + seed;
    FeatureMap phi = make_features(mdp, fs);
    Temperatures temps;
    temps.beta_pi = 100.0;
    BfmModel m = pretrain(mdp, phi, uniform_distribution(10), 5, 620 + seed, temps);
    const Vec& w = m.codebook[seed % 5];
    Vec reward = phi.phi * w;
    double vstar = optimal_value_from_start(mdp, reward);
    PolicyTable pi = softmax_policy(m, w);
    double v = exact_policy_value(mdp, pi, reward);
    CHECK(v <= vstar + 1e-9);
    CHECK(v >= vstar - 0.02 * std::abs(vstar));
  }
}
