#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bfmadapt/rng.hpp"
#include "bfmadapt/types.hpp"

namespace bfma {

// Rescale to the sqrt(d) sphere used for conditioning latents.
inline Vec sphere_normalize(const Vec& z) {
  double norm = z.norm();
  if (!(norm > 1e-12)) throw std::invalid_argument("sphere_normalize: vector is numerically zero");
  return std::sqrt(static_cast<double>(z.size())) / norm * z;
}

// Remove the radial component of g at z (z need not be exactly on the sphere).
inline Vec tangent_project(const Vec& z, const Vec& g) {
  double zz = z.squaredNorm();
  if (!(zz > 0.0)) throw std::invalid_argument("tangent_project: zero base point");
  return g - (g.dot(z) / zz) * z;
}

// Uniform point on the sqrt(d) sphere (normalized Gaussian direction).
inline Vec random_sphere_latent(int d, RandomStream& rs) {
  Vec z(d);
  do {
    for (int i = 0; i < d; ++i) z[i] = rs.normal();
  } while (z.norm() < 1e-9);
  return sphere_normalize(z);
}

inline double cosine(const Vec& u, const Vec& v) {
  double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return u.dot(v) / (nu * nv);
}

}  // namespace bfma
