#include <doctest.h>

#include "bfmadapt/features.hpp"
#include "helpers.hpp"

using namespace bfma;

TEST_CASE("one-hot subset features are indicator columns") {
  TabularMdp mdp = testutil::chain2();
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::one_hot_subset;
  spec.indices = {1};
  FeatureMap f = make_features(mdp, spec);
  REQUIRE(f.phi.rows() == 2);
  REQUIRE(f.phi.cols() == 1);
  CHECK(f.phi(0, 0) == 0.0);
  CHECK(f.phi(1, 0) == 1.0);
}

TEST_CASE("gram of full one-hot features is diag(rho)") {
  TabularMdp mdp = testutil::random_dense_mdp(3, 2, 5, 0.9);
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::one_hot_subset;
  spec.indices = {0, 1, 2};
  FeatureMap f = make_features(mdp, spec);
  DataDistribution rho;
  rho.rho = Vec(3);
  rho.rho << 0.25, 0.5, 0.25;
  Mat g = gram(f, rho);
  CHECK((g - rho.rho.asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("random orthonormal features have identity gram under uniform rho") {
  TabularMdp mdp = testutil::random_dense_mdp(12, 2, 6, 0.9);
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::random_orthonormal;
  spec.d = 5;
  spec.seed = 77;
  FeatureMap f = make_features(mdp, spec);
  Mat g = gram(f, uniform_distribution(12));
  CHECK((g - Mat::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-9);
  // Same seed, same features.
  FeatureMap f2 = make_features(mdp, spec);
  CHECK((f.phi - f2.phi).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian features are eigenvectors of the symmetrized chain laplacian") {
  TabularMdp mdp = testutil::random_dense_mdp(10, 3, 7, 0.9);
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::laplacian_eigs;
  spec.d = 4;
  FeatureMap f = make_features(mdp, spec);
  // Rebuild the operator independently and use the Rayleigh quotient as the
  // eigenvalue estimate.
  PolicyTable uni;
  uni.probs = Mat::Constant(10, 3, 1.0 / 3.0);
  Mat pu = policy_transition(mdp, uni);
  Mat lap = Mat::Identity(10, 10) - 0.5 * (pu + pu.transpose());
  for (int j = 0; j < 4; ++j) {
    Vec v = f.phi.col(j);
    double lambda = v.dot(lap * v) / v.squaredNorm();
    CHECK((lap * v - lambda * v).norm() < 1e-8);
  }
}

TEST_CASE("goal indicator features") {
  TabularMdp mdp = testutil::random_dense_mdp(5, 2, 8, 0.9);
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::goal_indicators;
  spec.indices = {2, 4};
  FeatureMap f = make_features(mdp, spec);
  CHECK(f.phi.col(0).sum() == 1.0);
  CHECK(f.phi(2, 0) == 1.0);
  CHECK(f.phi(4, 1) == 1.0);
}

TEST_CASE("row normalization flag") {
  TabularMdp mdp = testutil::random_dense_mdp(6, 2, 9, 0.9);
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::random_orthonormal;
  spec.d = 3;
  spec.seed = 5;
  spec.normalize_rows = true;
  FeatureMap f = make_features(mdp, spec);
  for (int s = 0; s < 6; ++s) CHECK(f.phi.row(s).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reward projection recovers in-span rewards exactly") {
  TabularMdp mdp = testutil::chain2();
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::one_hot_subset;
  spec.indices = {1};
  FeatureMap f = make_features(mdp, spec);
  DataDistribution rho = uniform_distribution(2);
  Vec r(2);
  r << 0.0, 1.0;
  ProjectionResult pr = project_reward(f, rho, r, 0.0);
  CHECK(pr.z[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pr.residual.norm() < 1e-12);
  CHECK((pr.projected - r).norm() < 1e-12);
}

TEST_CASE("reward orthogonal to the span projects to zero") {
  TabularMdp mdp = testutil::chain2();
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::one_hot_subset;
  spec.indices = {1};
  FeatureMap f = make_features(mdp, spec);
  DataDistribution rho = uniform_distribution(2);
  Vec r(2);
  r << 1.0, 0.0;
  ProjectionResult pr = project_reward(f, rho, r, 0.0);
  CHECK(std::abs(pr.z[0]) < 1e-12);
  CHECK((pr.residual - r).norm() < 1e-12);
}

TEST_CASE("projection is idempotent and residual is rho-orthogonal to the span") {
  TabularMdp mdp = testutil::random_dense_mdp(9, 2, 10, 0.9);
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::random_orthonormal;
  spec.d = 4;
  spec.seed = 3;
  FeatureMap f = make_features(mdp, spec);
  DataDistribution rho = uniform_distribution(9);
  Vec r = testutil::random_vec(9, 11);
  ProjectionResult pr = project_reward(f, rho, r, 0.0);
  ProjectionResult pr2 = project_reward(f, rho, pr.projected, 0.0);
  CHECK((pr2.projected - pr.projected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(pr2.residual.cwiseAbs().maxCoeff() < 1e-10);
  Vec orth = f.phi.transpose() * rho.rho.asDiagonal() * pr.residual;
  CHECK(orth.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ridge shrinks the regression coefficients") {
  TabularMdp mdp = testutil::random_dense_mdp(9, 2, 12, 0.9);
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::random_orthonormal;
  spec.d = 4;
  spec.seed = 4;
  FeatureMap f = make_features(mdp, spec);
  DataDistribution rho = uniform_distribution(9);
  Vec r = testutil::random_vec(9, 13);
  double prev = project_reward(f, rho, r, 0.0).z.norm();
  for (double ridge : {1e-6, 1e-2, 1.0}) {
    double cur = project_reward(f, rho, r, ridge).z.norm();
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("singular gram without ridge is an error, with ridge it is not") {
  TabularMdp mdp = testutil::random_dense_mdp(6, 2, 14, 0.9);
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::one_hot_subset;
  spec.indices = {2, 2};  // duplicate column => rank deficient
  FeatureMap f = make_features(mdp, spec);
  DataDistribution rho = uniform_distribution(6);
  Vec r = testutil::random_vec(6, 15);
  CHECK_THROWS_WITH_AS(project_reward(f, rho, r, 0.0),
                       doctest::Contains("ridge"), std::invalid_argument);
  CHECK_NOTHROW(project_reward(f, rho, r, 1e-8));
}

TEST_CASE("feature dimension larger than the state count is rejected") {
  TabularMdp mdp = testutil::chain2();
  FeatureSpec spec;
  spec.kind = FeatureSpec::Kind::random_orthonormal;
  spec.d = 3;
  CHECK_THROWS_AS(make_features(mdp, spec), std::invalid_argument);
  spec.kind = FeatureSpec::Kind::laplacian_eigs;
  CHECK_THROWS_AS(make_features(mdp, spec), std::invalid_argument);
}
