#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "inscribe/core.hpp"
#include "inscribe/numerics.hpp"

namespace fixtures {

using inscribe::FacetIncidence;
using inscribe::Inscription;
using inscribe::Matrix;
using inscribe::PolytopeVRep;

// Unit-circle triangle; facet j is opposite vertex j, h_j = -2 v_j.
inline Inscription triangle() {
  const double r = std::sqrt(3.0) / 2.0;
  Matrix v(2, 3);
  v << 1.0, -0.5, -0.5, 0.0, r, -r;
  return {PolytopeVRep{2, v}, -2.0 * v};
}

inline FacetIncidence triangle_incidence() {
  FacetIncidence inc(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) inc.on_facet(i, j) = (i != j);
  return inc;
}

// Square (+-1/sqrt2, +-1/sqrt2) with facets x <= 1/sqrt2, y <= ..., -x <= ..., -y <= ...
inline Inscription square() {
  const double s = 1.0 / std::sqrt(2.0);
  Matrix v(2, 4);
  v << s, -s, -s, s, s, s, -s, -s;
  Matrix h(2, 4);
  h << std::sqrt(2.0), 0.0, -std::sqrt(2.0), 0.0, 0.0, std::sqrt(2.0), 0.0, -std::sqrt(2.0);
  return {PolytopeVRep{2, v}, h};
}

inline Matrix random_symmetric(Eigen::Index k, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix a(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = g(rng);
  return 0.5 * (a + a.transpose());
}

inline Matrix random_low_rank(Eigen::Index k, Eigen::Index r, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix f(k, r), s = Matrix::Zero(r, r);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < r; ++j) f(i, j) = g(rng);
  for (Eigen::Index j = 0; j < r; ++j) s(j, j) = g(rng);
  Matrix y = f * s * f.transpose();
  return 0.5 * (y + y.transpose());
}

}  // namespace fixtures
