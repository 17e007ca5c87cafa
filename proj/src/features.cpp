#include "bfmadapt/features.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>

#include "bfmadapt/rng.hpp"

namespace bfma {

void FeatureMap::validate() const {
  if (phi.rows() == 0 || phi.cols() == 0) throw InvariantError("features: empty map");
  if (!phi.allFinite()) throw InvariantError("features: non-finite entry");
}

void DataDistribution::validate() const {
  if (rho.size() == 0) throw InvariantError("rho: empty");
  if (rho.minCoeff() < -1e-12 || std::abs(rho.sum() - 1.0) > 1e-9) {
    throw InvariantError("rho: not a distribution");
  }
}

DataDistribution uniform_distribution(int n_states) {
  DataDistribution d;
  d.rho = Vec::Constant(n_states, 1.0 / n_states);
  return d;
}

// Deterministic column signs: make the largest-magnitude entry positive.
static void fix_column_signs(Mat& m) {
  for (int j = 0; j < m.cols(); ++j) {
    int idx = 0;
    m.col(j).cwiseAbs().maxCoeff(&idx);
    if (m(idx, j) < 0.0) m.col(j) = -m.col(j);
  }
}

static Mat indicator_columns(int n_states, const std::vector<int>& indices) {
  if (indices.empty()) throw std::invalid_argument("features: empty index list");
  Mat phi = Mat::Zero(n_states, static_cast<int>(indices.size()));
  for (size_t j = 0; j < indices.size(); ++j) {
    int s = indices[j];
    if (s < 0 || s >= n_states) throw std::invalid_argument("features: state index out of range");
    phi(s, static_cast<int>(j)) = 1.0;
  }
  return phi;
}

FeatureMap make_features(const TabularMdp& mdp, const FeatureSpec& spec) {
  const int S = mdp.n_states;
  FeatureMap out;
  switch (spec.kind) {
    case FeatureSpec::Kind::one_hot_subset:
    case FeatureSpec::Kind::goal_indicators:
      out.phi = indicator_columns(S, spec.indices);
      break;
    case FeatureSpec::Kind::random_orthonormal: {
      if (spec.d <= 0 || spec.d > S) {
        throw std::invalid_argument("features: dimension must be in [1, n_states]");
      }
      RandomStream rs(spec.seed);
      Mat g(S, spec.d);
      for (int j = 0; j < spec.d; ++j) {
        for (int s = 0; s < S; ++s) g(s, j) = rs.normal();
      }
      Eigen::HouseholderQR<Mat> qr(g);
      Mat q = qr.householderQ() * Mat::Identity(S, spec.d);
      // Columns of q are orthonormal in the standard inner product; scaling
      // by sqrt(S) makes them orthonormal under the uniform distribution.
      out.phi = std::sqrt(static_cast<double>(S)) * q;
      fix_column_signs(out.phi);
      break;
    }
    case FeatureSpec::Kind::laplacian_eigs: {
      if (spec.d <= 0 || spec.d > S) {
        throw std::invalid_argument("features: dimension must be in [1, n_states]");
      }
      PolicyTable uniform;
      uniform.probs = Mat::Constant(S, mdp.n_actions, 1.0 / mdp.n_actions);
      Mat pu = policy_transition(mdp, uniform);
      Mat lap = Mat::Identity(S, S) - 0.5 * (pu + pu.transpose());
      Eigen::SelfAdjointEigenSolver<Mat> es(lap);
      if (es.info() != Eigen::Success) throw InvariantError("features: eigensolver failed");
      // Eigenvalues come out ascending: smoothest eigenvectors first.
      out.phi = std::sqrt(static_cast<double>(S)) * es.eigenvectors().leftCols(spec.d);
      fix_column_signs(out.phi);
      break;
    }
  }
  if (spec.normalize_rows) {
    for (int s = 0; s < S; ++s) {
      double n = out.phi.row(s).norm();
      if (n > 0.0) out.phi.row(s) /= n;
    }
  }
  out.validate();
  return out;
}

Mat gram(const FeatureMap& features, const DataDistribution& rho) {
  if (features.phi.rows() != rho.rho.size()) throw std::invalid_argument("gram: length mismatch");
  return features.phi.transpose() * rho.rho.asDiagonal() * features.phi;
}

ProjectionResult project_reward(const FeatureMap& features, const DataDistribution& rho,
                                const Vec& reward, double ridge) {
  if (reward.size() != features.phi.rows()) {
    throw std::invalid_argument("project_reward: reward length mismatch");
  }
  if (ridge < 0.0) throw std::invalid_argument("project_reward: negative ridge");
  const int d = features.dim();
  Mat g = gram(features, rho);
  Vec target = features.phi.transpose() * (rho.rho.asDiagonal() * reward);
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  if (es.info() != Eigen::Success) throw InvariantError("project_reward: eigensolver failed");
  double max_eig = es.eigenvalues().maxCoeff();
  if (ridge == 0.0 && es.eigenvalues().minCoeff() <= std::max(max_eig, 1.0) * 1e-12) {
    throw std::invalid_argument(
        "project_reward: feature gram matrix is singular; pass a positive ridge");
  }
  Vec inv_eigs(d);
  for (int i = 0; i < d; ++i) inv_eigs[i] = 1.0 / (es.eigenvalues()[i] + ridge);
  ProjectionResult out;
  out.z = es.eigenvectors() * inv_eigs.asDiagonal() * (es.eigenvectors().transpose() * target);
  out.projected = features.phi * out.z;
  out.residual = reward - out.projected;
  return out;
}

}  // namespace bfma
