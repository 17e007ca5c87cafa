#include <doctest.h>

#include "bfmadapt/envs.hpp"
#include "bfmadapt/features.hpp"
#include "helpers.hpp"

using namespace bfma;

TEST_CASE("2x2 gridworld without slip moves deterministically") {
  GridSpec g;
  g.width = 2;
  g.height = 2;
  g.slip = 0.0;
  g.discount = 0.9;
  TabularMdp mdp = make_gridworld(g);
  REQUIRE(mdp.n_states == 4);
  REQUIRE(mdp.n_actions == 4);
  mdp.validate();
  // States in row-major order: 0=(0,0) 1=(0,1) 2=(1,0) 3=(1,1).
  // East from (0,0) lands in (0,1).
  CHECK(mdp.transition(mdp.sa(0, 1), 1) == 1.0);
  // North from (0,0) reflects off the edge.
  CHECK(mdp.transition(mdp.sa(0, 0), 0) == 1.0);
  // South from (0,1) lands in (1,1).
  CHECK(mdp.transition(mdp.sa(1, 2), 3) == 1.0);
}

TEST_CASE("slip mass goes to the perpendicular neighbours") {
  GridSpec g;
  g.width = 3;
  g.height = 3;
  g.slip = 0.2;
  TabularMdp mdp = make_gridworld(g);
  // Center cell is state 4; action E: intended (1,2)=5 with 0.8,
  // perpendicular N (0,1)=1 and S (2,1)=7 with 0.1 each.
  CHECK(mdp.transition(mdp.sa(4, 1), 5) == doctest::Approx(0.8));
  CHECK(mdp.transition(mdp.sa(4, 1), 1) == doctest::Approx(0.1));
  CHECK(mdp.transition(mdp.sa(4, 1), 7) == doctest::Approx(0.1));
}

TEST_CASE("walls reflect and drop out of the state space") {
  GridSpec g;
  g.width = 3;
  g.height = 1;
  g.walls = {{0, 1}};  // middle cell walled
  g.slip = 0.0;
  TabularMdp mdp = make_gridworld(g);
  REQUIRE(mdp.n_states == 2);
  // East from the left cell bumps into the wall and stays.
  CHECK(mdp.transition(mdp.sa(0, 1), 0) == 1.0);
  std::vector<int> map = grid_cell_states(g);
  CHECK(map[0] == 0);
  CHECK(map[1] == -1);
  CHECK(map[2] == 1);
}

TEST_CASE("corridor vertical actions keep the agent in place") {
  GridSpec g;
  g.width = 5;
  g.height = 1;
  g.slip = 0.0;
  TabularMdp mdp = make_gridworld(g);
  CHECK(mdp.transition(mdp.sa(2, 0), 2) == 1.0);  // N bounces
  CHECK(mdp.transition(mdp.sa(2, 2), 2) == 1.0);  // S bounces
}

TEST_CASE("random mdp respects branching and is seed-reproducible") {
  TabularMdp a = make_random_mdp(20, 3, 5, 99);
  TabularMdp b = make_random_mdp(20, 3, 5, 99);
  TabularMdp c = make_random_mdp(20, 3, 5, 100);
  a.validate();
  CHECK((a.transition - b.transition).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.transition - c.transition).cwiseAbs().maxCoeff() > 0.0);
  for (int row = 0; row < 60; ++row) {
    int nonzero = 0;
    for (int sp = 0; sp < 20; ++sp) {
      if (a.transition(row, sp) > 0.0) ++nonzero;
    }
    CHECK(nonzero == 5);
  }
}

TEST_CASE("task suite spans behave as constructed") {
  TabularMdp mdp = make_random_mdp(12, 3, 4, 5, 0.9);
  FeatureSpec fs;
  fs.kind = FeatureSpec::Kind::random_orthonormal;
  fs.d = 4;
  fs.seed = 17;
  FeatureMap phi = make_features(mdp, fs);
  DataDistribution rho = uniform_distribution(12);

  RewardTask on = make_on_span_task(mdp, phi, rho, 3, 40, 10, "on");
  ProjectionResult pr_on = project_reward(phi, rho, on.reward, 0.0);
  CHECK(pr_on.residual.cwiseAbs().maxCoeff() < 1e-9);

  RewardTask off = make_off_span_goal_task(mdp, phi, rho, 7, 40, 10, "off");
  ProjectionResult pr_off = project_reward(phi, rho, off.reward, 0.0);
  CHECK(pr_off.z.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(off.reward.cwiseAbs().maxCoeff() > 0.0);

  RewardTask mixed_full = make_mixed_task(mdp, phi, rho, 7, 1.0, 40, 10, "m1");
  ProjectionResult pr_m1 = project_reward(phi, rho, mixed_full.reward, 0.0);
  CHECK(pr_m1.residual.cwiseAbs().maxCoeff() < 1e-9);

  RewardTask mixed_half = make_mixed_task(mdp, phi, rho, 7, 0.5, 40, 10, "m5");
  Vec goal = Vec::Zero(12);
  goal[7] = 1.0;
  CHECK((mixed_half.reward - 0.5 * goal).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("canonical environments have the pinned shapes") {
  CanonicalEnv four = canonical_env("fourrooms11");
  CHECK(four.mdp.n_states == 104);
  CHECK(four.mdp.n_actions == 4);
  four.mdp.validate();
  CHECK(four.suite.tasks.size() == 6);

  CanonicalEnv corr = canonical_env("corridor20");
  CHECK(corr.mdp.n_states == 20);
  CHECK(corr.suite.tasks.size() == 6);

  CanonicalEnv rnd = canonical_env("random50");
  CHECK(rnd.mdp.n_states == 50);
  CHECK(rnd.mdp.n_actions == 4);
  CHECK(rnd.suite.tasks.size() == 6);

  int on_count = 0, off_count = 0;
  for (const auto& t : rnd.suite.tasks) {
    ProjectionResult pr = project_reward(rnd.features, rnd.rho, t.task.reward, 0.0);
    if (t.on_span) {
      ++on_count;
      CHECK(pr.residual.cwiseAbs().maxCoeff() < 1e-9);
    }
    if (pr.z.cwiseAbs().maxCoeff() < 1e-9) ++off_count;
    CHECK(t.optimal_value > 0.0);
  }
  CHECK(on_count == 2);
  CHECK(off_count == 2);

  CHECK_THROWS_AS(canonical_env("nope"), std::invalid_argument);
}
