#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace bfma {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Configuration / schema problems (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or corrupt files, unsupported model versions (CLI exit code 3).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A checked runtime invariant failed (CLI exit code 4).
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lowest index whose value is within tol of the maximum.
inline int argmax_tied(const Eigen::Ref<const Vec>& v, double tol = 1e-9) {
  if (v.size() == 0) throw std::invalid_argument("argmax_tied: empty vector");
  double best = v.maxCoeff();
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] >= best - tol) return i;
  }
  return 0;
}

}  // namespace bfma
