#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "inscribe/core.hpp"
#include "inscribe/error.hpp"
#include "inscribe/numerics.hpp"
#include "inscribe/sdp.hpp"

namespace inscribe {

enum class FamilyKind { NGon, Simplex, Cube, CrossPolytope };

constexpr std::string_view to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::NGon: return "ngon";
    case FamilyKind::Simplex: return "simplex";
    case FamilyKind::Cube: return "cube";
    case FamilyKind::CrossPolytope: return "cross_polytope";
  }
  return "?";
}

inline std::optional<FamilyKind> parse_family_kind(std::string_view s) {
  if (s == "ngon") return FamilyKind::NGon;
  if (s == "simplex") return FamilyKind::Simplex;
  if (s == "cube") return FamilyKind::Cube;
  if (s == "cross_polytope" || s == "cross") return FamilyKind::CrossPolytope;
  return std::nullopt;
}

/// `param` is the number of vertices for n-gons and the dimension otherwise.
struct FamilySpec {
  FamilyKind kind = FamilyKind::NGon;
  int param = 3;
};

/// Scalar dual certificate (lambda_bar, u_bar, w_bar) for a regular member of
/// one of the four families, together with its canonical inscription.
struct FamilyCertificate {
  FamilySpec spec;
  double lambda_bar = 0.0;
  double u_bar = 0.0;
  double w_bar = 0.0;
  double lambda_max_closed_form = 0.0;
  double h_norm_sq = 0.0;  // common ||h_j||^2
  int vertices_per_facet = 0;
  Inscription inscription;
  FacetIncidence incidence;

  int dim() const { return inscription.polytope.dim; }
  DualCertificate certificate() const { return scalar_certificate(incidence, u_bar, w_bar, lambda_bar); }
  WeightMatrix weights() const { return uniform_weights(incidence, lambda_bar); }
};

namespace detail {

// Sign of coordinate `axis` (0-based) of the index-th +-1 vector of length d,
// in binary-counter order with +1 first: index 0 is (+,...,+).
inline double counter_sign(Eigen::Index index, int axis, int d) {
  return ((index >> (d - 1 - axis)) & 1) ? -1.0 : 1.0;
}

inline Inscription ngon_inscription(int n, FacetIncidence& inc) {
  const double pi = std::numbers::pi;
  Matrix v(2, n), h(2, n);
  for (int i = 0; i < n; ++i) {
    v(0, i) = std::cos(2.0 * pi * i / n);
    v(1, i) = std::sin(2.0 * pi * i / n);
  }
  const double c2 = std::pow(std::cos(pi / n), 2);
  inc = FacetIncidence(n, n);
  for (int j = 0; j < n; ++j) {
    const int next = (j + 1) % n;
    // facet j holds vertices j and j+1; its normal points at the edge midpoint
    h.col(j) = (v.col(j) + v.col(next)) / (2.0 * c2);
    inc.on_facet(j, j) = true;
    inc.on_facet(next, j) = true;
  }
  return {PolytopeVRep{2, v}, h};
}

// d+1 unit vectors with pairwise inner product -1/d: centred standard basis
// of R^{d+1} written in the Helmert basis of the sum-zero hyperplane.
inline Inscription simplex_inscription(int d, FacetIncidence& inc) {
  const int n = d + 1;
  Matrix helmert(d, n);
  helmert.setZero();
  for (int k = 1; k <= d; ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) helmert(k - 1, i) = s;
    helmert(k - 1, k) = -k * s;
  }
  Matrix v(d, n);
  for (int i = 0; i < n; ++i) {
    Vector e = Vector::Constant(n, -1.0 / n);
    e(i) += 1.0;
    v.col(i) = (helmert * e).normalized();
  }
  // facet i is opposite vertex i
  Matrix h = -static_cast<double>(d) * v;
  inc = FacetIncidence(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inc.on_facet(i, j) = (i != j);
  return {PolytopeVRep{d, v}, h};
}

inline Inscription cube_inscription(int d, FacetIncidence& inc) {
  const Eigen::Index n = Eigen::Index{1} << d;
  const int m = 2 * d;
  const double r = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix v(d, n), h = Matrix::Zero(d, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) v(a, i) = r * counter_sign(i, a, d);
  // facets: +e_1..+e_d then -e_1..-e_d, scaled by sqrt(d)
  for (int a = 0; a < d; ++a) {
    h(a, a) = std::sqrt(static_cast<double>(d));
    h(a, d + a) = -std::sqrt(static_cast<double>(d));
  }
  inc = FacetIncidence(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      const bool plus = counter_sign(i, a, d) > 0;
      inc.on_facet(i, a) = plus;
      inc.on_facet(i, d + a) = !plus;
    }
  return {PolytopeVRep{d, v}, h};
}

inline Inscription cross_inscription(int d, FacetIncidence& inc) {
  const int n = 2 * d;
  const Eigen::Index m = Eigen::Index{1} << d;
  Matrix v = Matrix::Zero(d, n), h(d, m);
  for (int a = 0; a < d; ++a) {
    v(a, a) = 1.0;
    v(a, d + a) = -1.0;
  }
  for (Eigen::Index j = 0; j < m; ++j)
    for (int a = 0; a < d; ++a) h(a, j) = counter_sign(j, a, d);
  inc = FacetIncidence(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (int a = 0; a < d; ++a) {
      const bool plus = counter_sign(j, a, d) > 0;
      inc.on_facet(a, j) = plus;
      inc.on_facet(d + a, j) = !plus;
    }
  return {PolytopeVRep{d, v}, h};
}

}  // namespace detail

inline FamilyCertificate build_family(const FamilySpec& spec) {
  FamilyCertificate out;
  out.spec = spec;
  const double pi = std::numbers::pi;
  const int p = spec.param;
  switch (spec.kind) {
    case FamilyKind::NGon: {
      if (p < 3) throw Error(ErrorCode::InvalidParam, "ngon needs n >= 3, got " + std::to_string(p));
      const double c2 = std::pow(std::cos(pi / p), 2);
      out.lambda_bar = 2.0 / (p * c2);
      out.u_bar = std::pow(std::tan(pi / p), 2);
      out.w_bar = (p - 2.0) / (p * c2);
      out.lambda_max_closed_form = 4.0 / c2;
      out.h_norm_sq = 1.0 / c2;
      out.vertices_per_facet = 2;
      out.inscription = detail::ngon_inscription(p, out.incidence);
      break;
    }
    case FamilyKind::Simplex: {
      if (p < 2) throw Error(ErrorCode::InvalidParam, "simplex needs d >= 2, got " + std::to_string(p));
      const double d = p;
      out.lambda_bar = 2.0 * d * d / (d + 1.0);
      out.u_bar = -1.0 + d * d;
      out.w_bar = 2.0 * d / (d + 1.0);
      out.lambda_max_closed_form = 4.0 * d * d;
      out.h_norm_sq = d * d;
      out.vertices_per_facet = p;
      out.inscription = detail::simplex_inscription(p, out.incidence);
      break;
    }
    case FamilyKind::Cube: {
      if (p < 2) throw Error(ErrorCode::InvalidParam, "cube needs d >= 2, got " + std::to_string(p));
      if (p > 16) throw Error(ErrorCode::InvalidParam, "cube dimension too large");
      const double d = p;
      const double t = d * std::pow(2.0, 1.0 - d);
      out.lambda_bar = t;
      out.u_bar = -1.0 + d * d * std::pow(2.0, 1.0 - d);
      out.w_bar = t;
      out.lambda_max_closed_form = d * d * std::pow(2.0, 3.0 - d);
      out.h_norm_sq = d;
      out.vertices_per_facet = 1 << (p - 1);
      out.inscription = detail::cube_inscription(p, out.incidence);
      break;
    }
    case FamilyKind::CrossPolytope: {
      if (p < 2) throw Error(ErrorCode::InvalidParam, "cross_polytope needs d >= 2, got " + std::to_string(p));
      if (p > 16) throw Error(ErrorCode::InvalidParam, "cross_polytope dimension too large");
      const double d = p;
      out.lambda_bar = 1.0;
      out.u_bar = -1.0 + std::pow(2.0, d - 1.0);
      out.w_bar = 1.0;
      out.lambda_max_closed_form = std::pow(2.0, d + 1.0);
      out.h_norm_sq = d;
      out.vertices_per_facet = p;
      out.inscription = detail::cross_inscription(p, out.incidence);
      break;
    }
  }
  return out;
}

/// lambda_max(M M^T) by a dense eigensolve of the assembled M.
inline double family_lambda_max_numeric(const FamilyCertificate& cert) {
  const Matrix mm = dual_matrix(cert.certificate(), cert.incidence);
  return max_eigenvalue(mm * mm.transpose());
}

/// The primal point (A*, B*, S*) of the canonical inscription.
inline PrimalPoint family_primal_point(const FamilyCertificate& cert) {
  PrimalPoint p = PrimalPoint::from_gram(gram_from_inscription(cert.inscription));
  p.s = cert.incidence.on_facet.select(0.0, p.s);
  return p;
}

}  // namespace inscribe
