#include "bfmadapt/bfm.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>

#include "bfmadapt/rng.hpp"
#include "bfmadapt/tensor_io.hpp"

namespace bfma {

Vec softmax(const Vec& logits) {
  Vec shifted = logits.array() - logits.maxCoeff();
  Vec e = shifted.array().exp();
  return e / e.sum();
}

Vec BfmModel::usf_weights(const Vec& z) const {
  const int k = static_cast<int>(codebook.size());
  Vec logits(k);
  for (int i = 0; i < k; ++i) logits[i] = temps.beta_psi * z.dot(codebook[i]) / dim();
  return softmax(logits);
}

Vec BfmModel::usf(int s, int a, const Vec& z) const {
  Vec w = usf_weights(z);
  Vec out = Vec::Zero(dim());
  for (size_t i = 0; i < codebook.size(); ++i) out += w[i] * psi_tables[i].row(sa(s, a)).transpose();
  return out;
}

Mat BfmModel::usf_jacobian(int s, int a, const Vec& z) const {
  const int d = dim();
  Vec w = usf_weights(z);
  Vec zbar = Vec::Zero(d);
  for (size_t i = 0; i < codebook.size(); ++i) zbar += w[i] * codebook[i];
  // d(usf)/dz = (beta_psi / d) * sum_i w_i psi_i (z_i - zbar)^T
  Mat jac = Mat::Zero(d, d);
  double scale = temps.beta_psi / d;
  for (size_t i = 0; i < codebook.size(); ++i) {
    jac += scale * w[i] * (psi_tables[i].row(sa(s, a)).transpose() * (codebook[i] - zbar).transpose());
  }
  return jac;
}

Mat BfmModel::mixed_psi(const Vec& z) const {
  Vec w = usf_weights(z);
  Mat out = Mat::Zero(psi_tables[0].rows(), dim());
  for (size_t i = 0; i < codebook.size(); ++i) out += w[i] * psi_tables[i];
  return out;
}

Mat BfmModel::policy_probs(const Vec& z) const {
  Vec values = mixed_psi(z) * z;  // psi(s,a,z)^T z, flat over (s,a)
  Mat probs(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    Vec logits(n_actions);
    for (int a = 0; a < n_actions; ++a) logits[a] = temps.beta_pi * values[sa(s, a)];
    probs.row(s) = softmax(logits).transpose();
  }
  return probs;
}

Vec BfmModel::action_probs(int s, const Vec& z) const {
  Vec w = usf_weights(z);
  Vec logits(n_actions);
  for (int a = 0; a < n_actions; ++a) {
    double v = 0.0;
    for (size_t i = 0; i < codebook.size(); ++i) v += w[i] * psi_tables[i].row(sa(s, a)).dot(z);
    logits[a] = temps.beta_pi * v;
  }
  return softmax(logits);
}

void BfmModel::validate() const {
  if (n_states <= 0 || n_actions <= 0) throw InvariantError("model: empty state or action set");
  if (!(discount >= 0.0 && discount < 1.0)) throw InvariantError("model: discount outside [0,1)");
  if (temps.beta_psi < 0.0 || temps.beta_pi < 0.0) throw InvariantError("model: negative temperature");
  if (codebook.empty()) throw InvariantError("model: empty codebook");
  const int d = dim();
  double root_d = std::sqrt(static_cast<double>(d));
  if (psi_tables.size() != codebook.size() || greedy_policies.size() != codebook.size()) {
    throw InvariantError("model: per-skill table count mismatch");
  }
  for (size_t i = 0; i < codebook.size(); ++i) {
    if (codebook[i].size() != d) throw InvariantError("model: codebook dimension mismatch");
    if (std::abs(codebook[i].norm() - root_d) > 1e-9) {
      throw InvariantError("model: codebook entry off the sqrt(d) sphere");
    }
    if (psi_tables[i].rows() != static_cast<long>(n_states) * n_actions ||
        psi_tables[i].cols() != d) {
      throw InvariantError("model: psi table shape mismatch");
    }
    if (!psi_tables[i].allFinite()) throw InvariantError("model: non-finite psi entry");
  }
  if (features.phi.rows() != n_states || features.phi.cols() != d) {
    throw InvariantError("model: feature map shape mismatch");
  }
  if (rho.rho.size() != n_states) throw InvariantError("model: rho length mismatch");
}

BfmModel pretrain_with_codebook(const TabularMdp& mdp, const FeatureMap& features,
                                const DataDistribution& rho, std::vector<Vec> codebook,
                                Temperatures temps) {
  mdp.validate();
  features.validate();
  rho.validate();
  if (features.phi.rows() != mdp.n_states) throw std::invalid_argument("pretrain: feature rows");
  if (rho.rho.size() != mdp.n_states) throw std::invalid_argument("pretrain: rho length");
  if (codebook.empty()) throw std::invalid_argument("pretrain: empty codebook");

  BfmModel model;
  model.n_states = mdp.n_states;
  model.n_actions = mdp.n_actions;
  model.discount = mdp.discount;
  model.temps = temps;
  model.features = features;
  model.rho = rho;
  model.codebook = std::move(codebook);

  for (const Vec& z : model.codebook) {
    Vec reward = features.phi * z;
    auto [qstar, pi] = optimal_q(mdp, reward);
    SuccessorMeasure m = successor_measure(mdp, pi);
    Mat psi = m.m * features.phi;

    // Build check 1: psi must satisfy its own Bellman identity,
    // psi = P (phi + gamma * avg_pi psi), computed through an independent path.
    Mat avg = Mat::Zero(mdp.n_states, model.dim());
    for (int s = 0; s < mdp.n_states; ++s) {
      for (int a = 0; a < mdp.n_actions; ++a) {
        avg.row(s) += pi.probs(s, a) * psi.row(mdp.sa(s, a));
      }
    }
    Mat residual = mdp.transition * (features.phi + mdp.discount * avg) - psi;
    if (residual.cwiseAbs().maxCoeff() > 1e-8) {
      throw InvariantError("pretrain: successor features fail their Bellman identity");
    }

    // Build check 2: acting greedily on psi^T z must reproduce the skill's
    // greedy policy at every state.
    for (int s = 0; s < mdp.n_states; ++s) {
      Vec vals(mdp.n_actions);
      for (int a = 0; a < mdp.n_actions; ++a) vals[a] = psi.row(mdp.sa(s, a)).dot(z);
      int greedy = 0;
      pi.probs.row(s).maxCoeff(&greedy);
      if (argmax_tied(vals) != greedy) {
        throw InvariantError("pretrain: latent greedy action disagrees with the skill policy");
      }
    }

    model.psi_tables.push_back(std::move(psi));
    model.greedy_policies.push_back(std::move(pi));
  }
  model.validate();
  return model;
}

BfmModel pretrain(const TabularMdp& mdp, const FeatureMap& features, const DataDistribution& rho,
                  int codebook_size, uint64_t seed, Temperatures temps) {
  if (codebook_size <= 0) throw std::invalid_argument("pretrain: codebook_size must be positive");
  const int d = static_cast<int>(features.phi.cols());
  double root_d = std::sqrt(static_cast<double>(d));
  RandomStream rs(seed);
  std::vector<Vec> codebook;
  codebook.reserve(codebook_size);
  while (static_cast<int>(codebook.size()) < codebook_size) {
    Vec z(d);
    for (int i = 0; i < d; ++i) z[i] = rs.normal();
    double n = z.norm();
    if (n < 1e-12) continue;
    codebook.push_back(z * (root_d / n));
  }
  return pretrain_with_codebook(mdp, features, rho, std::move(codebook), temps);
}

// Eigendecomposition-based inverse of B^T D_rho B with a relative rank
// cutoff. Numerically null directions carry no signal (their components of
// B^T D r vanish identically), so they are dropped rather than ridged;
// keeping them would blow the decomposition identities up to O(ridge/eps).
static Mat filtered_inverse(const Mat& g, double ridge) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  if (es.info() != Eigen::Success) throw InvariantError("fb_fit: eigensolver failed");
  double max_eig = es.eigenvalues().maxCoeff();
  double cut = std::max(max_eig, 1.0) * 1e-12;
  Vec inv = Vec::Zero(g.rows());
  bool dropped = false;
  for (int i = 0; i < g.rows(); ++i) {
    if (es.eigenvalues()[i] > cut) {
      inv[i] = 1.0 / (es.eigenvalues()[i] + ridge);
    } else {
      dropped = true;
    }
  }
  if (dropped && ridge == 0.0) {
    throw std::invalid_argument(
        "fb_fit: B^T D_rho B is singular; pass a full-rank B or a positive ridge");
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Mat projection_onto_span(const Mat& b, const DataDistribution& rho, double ridge) {
  Mat drho = rho.rho.asDiagonal();
  Mat g = b.transpose() * drho * b;
  return b * filtered_inverse(g, ridge) * b.transpose() * drho;
}

FbFit fb_fit(const TabularMdp& mdp, const BfmModel& model, const Mat& b, double ridge) {
  if (b.rows() != mdp.n_states) throw std::invalid_argument("fb_fit: B row count mismatch");
  if (ridge < 0.0) throw std::invalid_argument("fb_fit: negative ridge");
  Mat drho = model.rho.rho.asDiagonal();
  Mat ginv = filtered_inverse(b.transpose() * drho * b, ridge);
  Mat pib = b * ginv * b.transpose() * drho;

  FbFit fit;
  fit.b = b;
  fit.ridge = ridge;
  for (const PolicyTable& pi : model.greedy_policies) {
    SuccessorMeasure m = successor_measure(mdp, pi);
    Mat f = m.m * b * ginv;
    if ((f * (b.transpose() * drho) - m.m * pib).cwiseAbs().maxCoeff() > 1e-8) {
      throw InvariantError("fb_fit: stationarity identity violated");
    }
    fit.f_tables.push_back(std::move(f));
  }
  return fit;
}

static constexpr int kModelVersion = 1;

void save_model(const BfmModel& model, const std::string& path) {
  model.validate();
  const int k = static_cast<int>(model.codebook.size());
  const int S = model.n_states, A = model.n_actions, d = model.dim();

  std::vector<double> codebook_data;
  codebook_data.reserve(static_cast<size_t>(k) * d);
  for (const Vec& z : model.codebook) {
    for (int j = 0; j < d; ++j) codebook_data.push_back(z[j]);
  }
  std::vector<double> psi_data;
  psi_data.reserve(static_cast<size_t>(k) * S * A * d);
  for (const Mat& psi : model.psi_tables) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        for (int j = 0; j < d; ++j) psi_data.push_back(psi(model.sa(s, a), j));
      }
    }
  }
  std::vector<double> policy_data;
  policy_data.reserve(static_cast<size_t>(k) * S * A);
  for (const PolicyTable& pi : model.greedy_policies) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) policy_data.push_back(pi.probs(s, a));
    }
  }
  std::vector<double> phi_data;
  phi_data.reserve(static_cast<size_t>(S) * d);
  for (int s = 0; s < S; ++s) {
    for (int j = 0; j < d; ++j) phi_data.push_back(model.features.phi(s, j));
  }
  std::vector<double> rho_data(model.rho.rho.data(), model.rho.rho.data() + S);

  nlohmann::json j;
  j["version"] = kModelVersion;
  j["d"] = d;
  j["n_states"] = S;
  j["n_actions"] = A;
  j["gamma"] = model.discount;
  j["temperatures"] = {{"beta_psi", model.temps.beta_psi}, {"beta_pi", model.temps.beta_pi}};
  j["codebook"] = tensor_to_json({k, d}, codebook_data);
  j["psi"] = tensor_to_json({k, S, A, d}, psi_data);
  j["policies"] = tensor_to_json({k, S, A}, policy_data);
  j["phi"] = tensor_to_json({S, d}, phi_data);
  j["rho"] = tensor_to_json({S}, rho_data);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  out << j.dump();
  out << '\n';
  if (!out) throw IoError("failed writing model file: " + path);
}

BfmModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed model file " + path + ": " + e.what());
  }
  try {
    if (!j.contains("version") || !j.at("version").is_number_integer()) {
      throw IoError("model file has no version field: " + path);
    }
    if (j.at("version").get<int>() != kModelVersion) {
      throw IoError("unsupported model file version " + j.at("version").dump() + ": " + path);
    }
    BfmModel model;
    model.n_states = j.at("n_states").get<int>();
    model.n_actions = j.at("n_actions").get<int>();
    model.discount = j.at("gamma").get<double>();
    model.temps.beta_psi = j.at("temperatures").at("beta_psi").get<double>();
    model.temps.beta_pi = j.at("temperatures").at("beta_pi").get<double>();
    const int d = j.at("d").get<int>();
    const int S = model.n_states, A = model.n_actions;

    std::vector<long> shape;
    std::vector<double> codebook_data = tensor_from_json(j.at("codebook"), shape);
    if (shape.size() != 2 || shape[1] != d) throw IoError("model codebook shape mismatch: " + path);
    const int k = static_cast<int>(shape[0]);
    for (int i = 0; i < k; ++i) {
      model.codebook.emplace_back(Eigen::Map<const Vec>(codebook_data.data() + i * d, d));
    }

    std::vector<double> psi_data = tensor_from_json(j.at("psi"), shape);
    if (shape != std::vector<long>{k, S, A, d}) throw IoError("model psi shape mismatch: " + path);
    for (int i = 0; i < k; ++i) {
      Mat psi(S * A, d);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          for (int col = 0; col < d; ++col) {
            psi(s * A + a, col) = psi_data[((static_cast<size_t>(i) * S + s) * A + a) * d + col];
          }
        }
      }
      model.psi_tables.push_back(std::move(psi));
    }

    std::vector<double> policy_data = tensor_from_json(j.at("policies"), shape);
    if (shape != std::vector<long>{k, S, A}) throw IoError("model policy shape mismatch: " + path);
    for (int i = 0; i < k; ++i) {
      PolicyTable pi;
      pi.probs = Mat(S, A);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          pi.probs(s, a) = policy_data[(static_cast<size_t>(i) * S + s) * A + a];
        }
      }
      model.greedy_policies.push_back(std::move(pi));
    }

    std::vector<double> phi_data = tensor_from_json(j.at("phi"), shape);
    if (shape != std::vector<long>{S, d}) throw IoError("model phi shape mismatch: " + path);
    model.features.phi = Mat(S, d);
    for (int s = 0; s < S; ++s) {
      for (int col = 0; col < d; ++col) model.features.phi(s, col) = phi_data[static_cast<size_t>(s) * d + col];
    }

    std::vector<double> rho_data = tensor_from_json(j.at("rho"), shape);
    if (shape != std::vector<long>{S}) throw IoError("model rho shape mismatch: " + path);
    model.rho.rho = Eigen::Map<const Vec>(rho_data.data(), S);

    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed model file " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError("malformed model file " + path + ": " + e.what());
  }
}

}  // namespace bfma
