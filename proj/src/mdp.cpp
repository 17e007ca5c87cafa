#include "bfmadapt/mdp.hpp"

#include <Eigen/LU>
#include <cmath>

namespace bfma {

void TabularMdp::validate() const {
  if (n_states <= 0 || n_actions <= 0) throw InvariantError("mdp: empty state or action set");
  if (transition.rows() != static_cast<long>(n_states) * n_actions ||
      transition.cols() != n_states) {
    throw InvariantError("mdp: transition shape mismatch");
  }
  if (initial_dist.size() != n_states) throw InvariantError("mdp: initial_dist length mismatch");
  if (!(discount >= 0.0 && discount < 1.0)) throw InvariantError("mdp: discount outside [0,1)");
  for (long row = 0; row < transition.rows(); ++row) {
    if (transition.row(row).minCoeff() < -1e-12) {
      throw InvariantError("mdp: negative transition probability");
    }
    if (std::abs(transition.row(row).sum() - 1.0) > 1e-9) {
      throw InvariantError("mdp: transition row does not sum to 1");
    }
  }
  if (initial_dist.minCoeff() < -1e-12 || std::abs(initial_dist.sum() - 1.0) > 1e-9) {
    throw InvariantError("mdp: initial_dist is not a distribution");
  }
}

void PolicyTable::validate(const TabularMdp& mdp) const {
  if (probs.rows() != mdp.n_states || probs.cols() != mdp.n_actions) {
    throw InvariantError("policy: shape mismatch");
  }
  for (int s = 0; s < mdp.n_states; ++s) {
    if (probs.row(s).minCoeff() < -1e-12 || std::abs(probs.row(s).sum() - 1.0) > 1e-9) {
      throw InvariantError("policy: row is not a distribution");
    }
  }
}

Mat policy_transition(const TabularMdp& mdp, const PolicyTable& pi) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Mat p = Mat::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      if (pi.probs(s, a) != 0.0) p.row(s) += pi.probs(s, a) * mdp.transition.row(mdp.sa(s, a));
    }
  }
  return p;
}

SuccessorMeasure successor_measure(const TabularMdp& mdp, const PolicyTable& pi) {
  const int S = mdp.n_states;
  Mat ppi = policy_transition(mdp, pi);
  // m = P_sa (I - gamma P_pi)^-1, solved as (I - gamma P_pi)^T m^T = P_sa^T.
  Mat a = Mat::Identity(S, S) - mdp.discount * ppi;
  Eigen::PartialPivLU<Mat> lu(a.transpose());
  SuccessorMeasure out;
  out.m = lu.solve(mdp.transition.transpose()).transpose();
  return out;
}

Mat q_of_policy(const TabularMdp& mdp, const PolicyTable& pi, const Vec& reward) {
  if (reward.size() != mdp.n_states) throw std::invalid_argument("q_of_policy: reward length");
  SuccessorMeasure m = successor_measure(mdp, pi);
  Vec flat = m.m * reward;
  Mat q(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) q(s, a) = flat[mdp.sa(s, a)];
  }
  return q;
}

PolicyTable greedy_policy_from_q(const Mat& q, double tie_tol) {
  PolicyTable pi;
  pi.probs = Mat::Zero(q.rows(), q.cols());
  for (int s = 0; s < q.rows(); ++s) {
    Vec row = q.row(s);
    pi.probs(s, argmax_tied(row, tie_tol)) = 1.0;
  }
  return pi;
}

std::pair<Mat, PolicyTable> optimal_q(const TabularMdp& mdp, const Vec& reward) {
  if (reward.size() != mdp.n_states) throw std::invalid_argument("optimal_q: reward length");
  const int S = mdp.n_states, A = mdp.n_actions;
  const double stop = 1e-10;
  Mat q = Mat::Zero(S, A);
  Vec v = Vec::Zero(S);
  // gamma^k * rmax / (1 - gamma) < stop bounds the needed iteration count.
  int max_iters = 10'000'000;
  for (int it = 0; it < max_iters; ++it) {
    Vec target = reward + mdp.discount * v;
    Vec flat = mdp.transition * target;
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double nv = flat[mdp.sa(s, a)];
        delta = std::max(delta, std::abs(nv - q(s, a)));
        q(s, a) = nv;
      }
      v[s] = q.row(s).maxCoeff();
    }
    if (delta < stop) break;
  }
  return {q, greedy_policy_from_q(q)};
}

int sample_categorical_row(const Mat& table, int row, RandomStream& rs) {
  // Eigen stores column-major; copy the row out to keep the stride simple.
  thread_local std::vector<double> buf;
  buf.resize(table.cols());
  for (int j = 0; j < table.cols(); ++j) buf[j] = table(row, j);
  return rs.categorical(buf.data(), static_cast<int>(buf.size()));
}

Rollout rollout(const TabularMdp& mdp, const ActionSampler& sampler,
                std::optional<int> start, int horizon, const Vec& reward,
                RandomStream& rs) {
  if (reward.size() != mdp.n_states) throw std::invalid_argument("rollout: reward length");
  if (horizon < 0) throw std::invalid_argument("rollout: negative horizon");
  Rollout ro;
  int s;
  if (start.has_value()) {
    s = *start;
    if (s < 0 || s >= mdp.n_states) throw std::invalid_argument("rollout: start out of range");
  } else {
    thread_local std::vector<double> d0;
    d0.assign(mdp.initial_dist.data(), mdp.initial_dist.data() + mdp.n_states);
    s = rs.categorical(d0.data(), mdp.n_states);
  }
  ro.start_state = s;
  ro.states.push_back(s);
  ro.actions.reserve(horizon);
  ro.rewards.reserve(horizon);
  for (int t = 0; t < horizon; ++t) {
    int a = sampler(s, rs);
    if (a < 0 || a >= mdp.n_actions) throw std::invalid_argument("rollout: sampler action out of range");
    int sp = sample_categorical_row(mdp.transition, mdp.sa(s, a), rs);
    ro.actions.push_back(a);
    ro.rewards.push_back(reward[sp]);
    ro.states.push_back(sp);
    s = sp;
  }
  return ro;
}

double discounted_return(const Rollout& ro, double gamma) {
  double acc = 0.0, g = 1.0;
  for (double r : ro.rewards) {
    acc += g * r;
    g *= gamma;
  }
  return acc;
}

}  // namespace bfma
