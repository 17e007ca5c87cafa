#pragma once

#include <cstdint>
#include <vector>

#include "bfmadapt/mdp.hpp"
#include "bfmadapt/rng.hpp"

namespace testutil {

using bfma::Mat;
using bfma::Vec;

// Independent oracle: evaluate Q^pi by iterating the Bellman backup
//   Q(s,a) <- sum_s' P(s'|s,a) [ r(s') + gamma * sum_a' pi(a'|s') Q(s',a') ]
// until the sup-norm change drops below eps. Pure fixed-point iteration,
// no linear solves, so it cross-checks the dense-solver path.
inline Mat oracle_policy_q(const bfma::TabularMdp& mdp, const bfma::PolicyTable& pi,
                           const Vec& reward, double eps = 1e-12, int max_iters = 200000) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Mat q = Mat::Zero(S, A);
  for (int it = 0; it < max_iters; ++it) {
    Vec v(S);
    for (int s = 0; s < S; ++s) v[s] = pi.probs.row(s).dot(q.row(s));
    Mat next(S, A);
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double acc = 0.0;
        for (int sp = 0; sp < S; ++sp) {
          acc += mdp.transition(mdp.sa(s, a), sp) * (reward[sp] + mdp.discount * v[sp]);
        }
        next(s, a) = acc;
        delta = std::max(delta, std::abs(acc - q(s, a)));
      }
    }
    q = next;
    if (delta < eps) break;
  }
  return q;
}

// Dense random MDP built locally (independent of the envs module): every
// (s,a) row is a normalized vector of Exp(1) draws, d0 uniform.
inline bfma::TabularMdp random_dense_mdp(int S, int A, uint64_t seed, double gamma) {
  bfma::RandomStream rs(seed);
  bfma::TabularMdp mdp;
  mdp.n_states = S;
  mdp.n_actions = A;
  mdp.discount = gamma;
  mdp.transition = Mat(S * A, S);
  for (int row = 0; row < S * A; ++row) {
    double total = 0.0;
    for (int sp = 0; sp < S; ++sp) {
      double e = -std::log(1.0 - rs.uniform01());
      mdp.transition(row, sp) = e;
      total += e;
    }
    mdp.transition.row(row) /= total;
  }
  mdp.initial_dist = Vec::Constant(S, 1.0 / S);
  return mdp;
}

inline bfma::PolicyTable random_policy(int S, int A, uint64_t seed) {
  bfma::RandomStream rs(seed);
  bfma::PolicyTable pi;
  pi.probs = Mat(S, A);
  for (int s = 0; s < S; ++s) {
    double total = 0.0;
    for (int a = 0; a < A; ++a) {
      double e = -std::log(1.0 - rs.uniform01());
      pi.probs(s, a) = e;
      total += e;
    }
    pi.probs.row(s) /= total;
  }
  return pi;
}

inline Vec random_vec(int n, uint64_t seed) {
  bfma::RandomStream rs(seed);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rs.normal();
  return v;
}

// Two-state chain: s0 -> s1 -> s1, one action, gamma 0.5.
inline bfma::TabularMdp chain2() {
  bfma::TabularMdp mdp;
  mdp.n_states = 2;
  mdp.n_actions = 1;
  mdp.discount = 0.5;
  mdp.transition = Mat::Zero(2, 2);
  mdp.transition(0, 1) = 1.0;
  mdp.transition(1, 1) = 1.0;
  mdp.initial_dist = Vec::Zero(2);
  mdp.initial_dist[0] = 1.0;
  return mdp;
}

// Three states, two actions: from s0, a0 leads to absorbing s1 and a1 to
// absorbing s2; gamma 0.5.
inline bfma::TabularMdp two_act() {
  bfma::TabularMdp mdp;
  mdp.n_states = 3;
  mdp.n_actions = 2;
  mdp.discount = 0.5;
  mdp.transition = Mat::Zero(6, 3);
  mdp.transition(mdp.sa(0, 0), 1) = 1.0;
  mdp.transition(mdp.sa(0, 1), 2) = 1.0;
  mdp.transition(mdp.sa(1, 0), 1) = 1.0;
  mdp.transition(mdp.sa(1, 1), 1) = 1.0;
  mdp.transition(mdp.sa(2, 0), 2) = 1.0;
  mdp.transition(mdp.sa(2, 1), 2) = 1.0;
  mdp.initial_dist = Vec::Zero(3);
  mdp.initial_dist[0] = 1.0;
  return mdp;
}

// Gauss-Hermite nodes/weights for weight e^{-x^2} via the Golub-Welsch
// tridiagonal. E_{t ~ N(m, s^2)}[f(t)] = (1/sqrt(pi)) sum_i w_i f(m + sqrt(2) s x_i).
inline void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Mat jac = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double b = std::sqrt(i / 2.0);
    jac(i - 1, i) = b;
    jac(i, i - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(jac);
  nodes.resize(n);
  weights.resize(n);
  const double sqrt_pi = std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    double v0 = es.eigenvectors()(0, i);
    weights[i] = sqrt_pi * v0 * v0;
  }
}

}  // namespace testutil
