#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "inscribe/error.hpp"
#include "inscribe/numerics.hpp"

namespace inscribe {

// Default tolerances shared across the library.
inline constexpr double kEpsZero = 1e-7;       // support threshold, relative to max|S|
inline constexpr double kEpsSide = 1e-9;       // exact-input facet side test
inline constexpr double kTolFit = 1e-6;        // noisy facet fit residual
inline constexpr double kTolSide = 1e-6;       // noisy facet side margin
inline constexpr double kUnitNormTol = 1e-9;   // "on the unit sphere"

/// n points in R^d, stored as the columns of a d x n matrix.
struct PolytopeVRep {
  int dim = 0;
  Matrix vertices;

  Eigen::Index n() const { return vertices.cols(); }
  Eigen::VectorXd vertex(Eigen::Index i) const { return vertices.col(i); }
};

/// Vertex/facet incidence: on_facet(i, j) is true iff vertex i lies on facet j.
struct FacetIncidence {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> on_facet;

  FacetIncidence() = default;
  FacetIncidence(Eigen::Index n, Eigen::Index m) : on_facet(n, m) { on_facet.setConstant(false); }

  Eigen::Index n() const { return on_facet.rows(); }
  Eigen::Index m() const { return on_facet.cols(); }
  bool operator()(Eigen::Index i, Eigen::Index j) const { return on_facet(i, j); }

  std::vector<Eigen::Index> facet_vertices(Eigen::Index j) const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < n(); ++i)
      if (on_facet(i, j)) out.push_back(i);
    return out;
  }

  /// Number of zero positions |I^z|.
  Eigen::Index zero_count() const { return on_facet.count(); }

  /// Zero positions in row-major order; this is the indexing used for the
  /// dual vector w.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> zero_positions() const {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    for (Eigen::Index i = 0; i < n(); ++i)
      for (Eigen::Index j = 0; j < m(); ++j)
        if (on_facet(i, j)) out.emplace_back(i, j);
    return out;
  }

  bool operator==(const FacetIncidence& o) const {
    return n() == o.n() && m() == o.m() && (on_facet == o.on_facet).all();
  }
};

/// Checks the incidence invariants for a d-polytope: each facet has at least d
/// vertices, each vertex lies on at least d facets, no repeated facets.
inline void validate_incidence(const FacetIncidence& inc, int dim) {
  for (Eigen::Index j = 0; j < inc.m(); ++j) {
    const auto c = inc.on_facet.col(j).count();
    if (c < dim)
      throw Error(ErrorCode::DegenerateIncidence,
                  "facet " + std::to_string(j) + " has " + std::to_string(c) + " vertices, need >= " + std::to_string(dim));
  }
  for (Eigen::Index i = 0; i < inc.n(); ++i) {
    const auto c = inc.on_facet.row(i).count();
    if (c < dim)
      throw Error(ErrorCode::DegenerateIncidence,
                  "vertex " + std::to_string(i) + " lies on " + std::to_string(c) + " facets, need >= " + std::to_string(dim));
  }
  for (Eigen::Index a = 0; a < inc.m(); ++a)
    for (Eigen::Index b = a + 1; b < inc.m(); ++b)
      if ((inc.on_facet.col(a) == inc.on_facet.col(b)).all())
        throw Error(ErrorCode::DegenerateIncidence,
                    "facets " + std::to_string(a) + " and " + std::to_string(b) + " are identical");
}

struct SlackMatrix {
  Matrix entries;  // n x m, >= 0, exactly 0 on zero_set
  FacetIncidence zero_set;
};

/// An inscription on the unit sphere: facets are 1 - h_j^T x >= 0 with h_j the
/// columns of facet_normals.
struct Inscription {
  PolytopeVRep polytope;
  Matrix facet_normals;  // d x m
};

/// The bordered matrix [[1, 1^T, 1^T], [1, A, S], [1, S^T, B]].
struct GramBorderMatrix {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Matrix data;

  GramBorderMatrix() = default;
  GramBorderMatrix(Eigen::Index n_, Eigen::Index m_, Matrix data_) : n(n_), m(m_), data(std::move(data_)) {
    if (data.rows() != 1 + n + m || data.cols() != 1 + n + m)
      throw Error(ErrorCode::DimensionMismatch, "GramBorderMatrix: data must be (1+n+m) square");
  }

  Eigen::Index order() const { return 1 + n + m; }
  auto A() const { return data.block(1, 1, n, n); }
  auto S() const { return data.block(1, 1 + n, n, m); }
  auto B() const { return data.block(1 + n, 1 + n, m, m); }

  /// Max deviation of the border (row/column 0) from all-ones.
  double border_error() const {
    return std::max((data.row(0).array() - 1.0).abs().maxCoeff(), (data.col(0).array() - 1.0).abs().maxCoeff());
  }
};

/// X = W W^T with W = [[1, 0], [1_n, V^T], [1_m, -H^T]].
inline GramBorderMatrix gram_from_inscription(const Matrix& vertices, const Matrix& normals) {
  const Eigen::Index d = vertices.rows(), n = vertices.cols(), m = normals.cols();
  if (normals.rows() != d && m > 0) throw Error(ErrorCode::DimensionMismatch, "gram_from_inscription: V and H dimensions differ");
  Matrix w = Matrix::Zero(1 + n + m, 1 + d);
  w.col(0).setOnes();
  w.block(1, 1, n, d) = vertices.transpose();
  if (m > 0) w.block(1 + n, 1, m, d) = -normals.transpose();
  return GramBorderMatrix(n, m, w * w.transpose());
}

inline GramBorderMatrix gram_from_inscription(const Inscription& insc) {
  return gram_from_inscription(insc.polytope.vertices, insc.facet_normals);
}

// ---------------------------------------------------------------------------
// slack matrices

inline FacetIncidence zero_pattern(const Matrix& s, double eps_zero, int dim) {
  if (!(eps_zero > 0.0)) throw Error(ErrorCode::InvalidArgument, "zero_pattern: eps_zero must be positive");
  detail::require_finite(s, "zero_pattern");
  FacetIncidence inc(s.rows(), s.cols());
  if (s.size() == 0) return inc;
  const double cut = eps_zero * (1.0 + s.cwiseAbs().maxCoeff());
  inc.on_facet = s.array().abs() <= cut;
  for (Eigen::Index j = 0; j < inc.m(); ++j) {
    const auto c = inc.on_facet.col(j).count();
    if (c < dim)
      throw Error(ErrorCode::DegenerateIncidence,
                  "facet column " + std::to_string(j) + " has " + std::to_string(c) + " zeros, need >= " + std::to_string(dim));
  }
  return inc;
}

inline SlackMatrix slack_from_reps(const PolytopeVRep& v, const Matrix& normals, double eps_zero = kEpsZero) {
  const Eigen::Index n = v.n(), m = normals.cols();
  if (m > 0 && normals.rows() != v.dim)
    throw Error(ErrorCode::DimensionMismatch, "slack_from_reps: normals have dimension " + std::to_string(normals.rows()) +
                                                  ", vertices " + std::to_string(v.dim));
  if (v.vertices.rows() != v.dim) throw Error(ErrorCode::DimensionMismatch, "slack_from_reps: vertex matrix rows != dim");
  Matrix s = Matrix::Ones(n, m);
  if (m > 0) s -= v.vertices.transpose() * normals;
  if (s.size() > 0) {
    const double cut = eps_zero * (1.0 + s.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        if (s(i, j) < -cut)
          throw Error(ErrorCode::NegativeSlack, "S(" + std::to_string(i) + "," + std::to_string(j) + ") = " + std::to_string(s(i, j)));
  }
  SlackMatrix out;
  out.zero_set = zero_pattern(s, eps_zero, v.dim);
  out.entries = out.zero_set.on_facet.select(0.0, s.cwiseMax(0.0));
  return out;
}

// ---------------------------------------------------------------------------
// hyperplane fitting

namespace detail {

/// Hyperplane a^T x = b through the given points, ||a|| = 1, in the least
/// squares sense. `rank_ok` is false when the points do not pin down a unique
/// hyperplane.
struct HyperplaneFit {
  Vector a;
  double b = 0.0;
  double max_residual = 0.0;
  bool rank_ok = false;
};

inline HyperplaneFit fit_hyperplane(const Matrix& vertices, const std::vector<Eigen::Index>& idx) {
  const Eigen::Index d = vertices.rows();
  const auto k = static_cast<Eigen::Index>(idx.size());
  HyperplaneFit fit;
  fit.a = Vector::Zero(d);
  if (k < d) return fit;
  Matrix sys(k, d + 1);
  for (Eigen::Index r = 0; r < k; ++r) {
    sys.row(r).head(d) = vertices.col(idx[static_cast<std::size_t>(r)]).transpose();
    sys(r, d) = -1.0;
  }
  Eigen::JacobiSVD<Matrix> svd(sys, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  // A unique hyperplane needs the augmented system to have rank d.
  const double top = sv.size() ? sv(0) : 0.0;
  if (sv.size() < d || top == 0.0 || sv(d - 1) <= 1e-10 * top) return fit;
  Vector z = svd.matrixV().col(d);
  const double an = z.head(d).norm();
  if (an <= 1e-14) return fit;  // degenerate: hyperplane at infinity
  z /= an;
  fit.a = z.head(d);
  fit.b = z(d);
  fit.max_residual = 0.0;
  for (auto i : idx) fit.max_residual = std::max(fit.max_residual, std::abs(fit.a.dot(vertices.col(i)) - fit.b));
  fit.rank_ok = true;
  return fit;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// facet enumeration

/// Brute-force facets of a simplicial point configuration: every d-subset whose
/// hyperplane leaves all other points strictly on one side.
inline FacetIncidence facet_enumeration(const PolytopeVRep& v, double eps_side = kEpsSide) {
  const int d = v.dim;
  const Eigen::Index n = v.n();
  if (d < 1 || v.vertices.rows() != d) throw Error(ErrorCode::DimensionMismatch, "facet_enumeration: bad dimension");
  if (n < d + 1) throw Error(ErrorCode::NotFullDimensional, "facet_enumeration: need at least d+1 points");
  detail::require_finite(v.vertices, "facet_enumeration");
  Matrix lifted(d + 1, n);
  lifted.row(0).setOnes();
  lifted.bottomRows(d) = v.vertices;
  if (numeric_rank(lifted, 1e-10) < d + 1)
    throw Error(ErrorCode::NotFullDimensional, "facet_enumeration: points do not affinely span R^d");

  std::vector<std::vector<Eigen::Index>> facets;
  std::vector<Eigen::Index> subset(static_cast<std::size_t>(d));
  std::iota(subset.begin(), subset.end(), Eigen::Index{0});
  while (true) {
    const auto fit = detail::fit_hyperplane(v.vertices, subset);
    if (fit.rank_ok) {
      int pos = 0, neg = 0;
      Eigen::Index on_plane = -1;
      std::size_t cursor = 0;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (cursor < subset.size() && subset[cursor] == k) {
          ++cursor;
          continue;
        }
        const double s = fit.b - fit.a.dot(v.vertices.col(k));
        if (std::abs(s) <= eps_side)
          on_plane = k;
        else if (s > 0)
          ++pos;
        else
          ++neg;
      }
      // Only supporting hyperplanes matter: a coincidence on a hyperplane
      // that cuts through the hull is not a facet.
      if (pos == 0 || neg == 0) {
        if (on_plane >= 0)
          throw Error(ErrorCode::NotSimplicial, "vertex " + std::to_string(on_plane) + " lies on a supporting hyperplane of a d-subset");
        facets.push_back(subset);
      }
    }
    // next combination in lexicographic order
    int i = d - 1;
    while (i >= 0 && subset[static_cast<std::size_t>(i)] == n - d + i) --i;
    if (i < 0) break;
    ++subset[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < d; ++j) subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
  }

  FacetIncidence inc(n, static_cast<Eigen::Index>(facets.size()));
  for (std::size_t j = 0; j < facets.size(); ++j)
    for (auto i : facets[j]) inc.on_facet(i, static_cast<Eigen::Index>(j)) = true;
  for (Eigen::Index k = 0; k < n; ++k)
    if (!inc.on_facet.row(k).any()) throw Error(ErrorCode::InteriorPoint, "vertex " + std::to_string(k) + " lies on no facet");
  return inc;
}

// ---------------------------------------------------------------------------
// random generation

struct RandomPolytope {
  PolytopeVRep polytope;
  FacetIncidence incidence;
};

/// n i.i.d. uniform points on the unit (d-1)-sphere. The whole sample is
/// redrawn when the configuration is not simplicial.
inline RandomPolytope random_inscribed(int n, int d, std::uint64_t seed, int max_resamples = 100) {
  if (d < 2 || n < d + 1)
    throw Error(ErrorCode::InvalidArgument, "random_inscribed: need d >= 2 and n >= d+1 (got n=" + std::to_string(n) +
                                                ", d=" + std::to_string(d) + ")");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt <= max_resamples; ++attempt) {
    Matrix pts(d, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      double norm = 0.0;
      do {
        for (Eigen::Index i = 0; i < d; ++i) pts(i, j) = gauss(rng);
        norm = pts.col(j).norm();
      } while (norm < 1e-12);
      pts.col(j) /= norm;
    }
    PolytopeVRep poly{d, pts};
    try {
      auto inc = facet_enumeration(poly);
      return {std::move(poly), std::move(inc)};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotSimplicial && e.code() != ErrorCode::InteriorPoint &&
          e.code() != ErrorCode::NotFullDimensional)
        throw;
    }
  }
  throw Error(ErrorCode::RetryLimit, "random_inscribed: no simplicial sample after " + std::to_string(max_resamples) + " resamples");
}

// ---------------------------------------------------------------------------
// projective normalization

inline void require_on_sphere(const PolytopeVRep& v, double tol, const char* who) {
  for (Eigen::Index i = 0; i < v.n(); ++i) {
    const double r = v.vertices.col(i).norm();
    if (std::abs(r - 1.0) > tol)
      throw Error(ErrorCode::InvalidArgument, std::string(who) + ": vertex " + std::to_string(i) + " has norm " + std::to_string(r));
  }
}

/// Householder reflection Q (symmetric, orthogonal) with Q x = ||x|| e_1.
inline Matrix householder_to_e1(const Vector& x) {
  const Eigen::Index d = x.size();
  Matrix q = Matrix::Identity(d, d);
  const double nx = x.norm();
  if (nx == 0.0) return q;
  Vector u = x;
  u(0) -= nx;
  const double uu = u.squaredNorm();
  if (uu <= 1e-30 * nx * nx) return q;
  q -= (2.0 / uu) * u * u.transpose();
  return q;
}

/// Moves the vertex centroid to the origin with a projective map that keeps
/// the unit sphere fixed. The result is expressed back in the input frame.
inline PolytopeVRep normalize_inscription(const PolytopeVRep& v) {
  require_on_sphere(v, kUnitNormTol, "normalize_inscription");
  const Vector centroid = v.vertices.rowwise().mean();
  const double alpha = centroid.norm();
  if (alpha >= 1.0 - 1e-9) throw Error(ErrorCode::CentroidOnSphere, "normalize_inscription: centroid norm " + std::to_string(alpha));
  if (alpha == 0.0) return v;
  const Matrix q = householder_to_e1(centroid);
  const double shrink = std::sqrt(1.0 - alpha * alpha);
  PolytopeVRep out{v.dim, Matrix(v.dim, v.n())};
  for (Eigen::Index i = 0; i < v.n(); ++i) {
    Vector x = q * v.vertices.col(i);
    const double denom = 1.0 - alpha * x(0);
    Vector w(v.dim);
    w(0) = (x(0) - alpha) / denom;
    w.tail(v.dim - 1) = shrink * x.tail(v.dim - 1) / denom;
    w.normalize();
    out.vertices.col(i) = q.transpose() * w;
  }
  return out;
}

// ---------------------------------------------------------------------------
// vertex extraction

struct ExtractTolerances {
  double border = 1e-6;  // | ||row 0 of factor|| - 1 |
  double zero_vertex = 1e-6;
};

/// Reads vertices off a bordered Gram matrix: factor the top d+1 eigenpairs,
/// rotate the border row onto e_1 and take coordinates 2..d+1 of each vertex
/// row, rescaled onto the unit sphere.
inline PolytopeVRep extract_vertices(const GramBorderMatrix& x, int d, ExtractTolerances tol) {
  const Eigen::Index k = d + 1;
  if (d < 1 || k > x.order()) throw Error(ErrorCode::InvalidArgument, "extract_vertices: need 1 <= d and d+1 <= 1+n+m");
  const SymEig eig = sym_eig(x.data);
  Matrix factor = eig.vectors.leftCols(k) * eig.values.head(k).cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Vector r0 = factor.row(0).transpose();
  const double r0n = r0.norm();
  if (std::abs(r0n - 1.0) > tol.border)
    throw Error(ErrorCode::BorderViolation, "extract_vertices: border row has norm " + std::to_string(r0n));
  factor = factor * householder_to_e1(r0);
  PolytopeVRep out{d, Matrix(d, x.n)};
  for (Eigen::Index i = 0; i < x.n; ++i) {
    Vector vi = factor.row(1 + i).tail(d).transpose();
    const double len = vi.norm();
    if (len < tol.zero_vertex) throw Error(ErrorCode::ZeroVertex, "extract_vertices: vertex " + std::to_string(i) + " has norm " + std::to_string(len));
    out.vertices.col(i) = vi / len;
  }
  return out;
}

inline PolytopeVRep extract_vertices(const GramBorderMatrix& x, int d, double tol) {
  return extract_vertices(x, d, ExtractTolerances{tol, tol});
}

// ---------------------------------------------------------------------------
// combinatorial verification

struct VerifyReport {
  bool ok = false;
  std::vector<Eigen::Index> bad_facets;
  /// Fitted normals written as 1 - h^T x >= 0 (d x m); NaN columns where the
  /// facet could not be fitted or its hyperplane passes through the origin.
  Matrix facet_normals;
  /// True when every fitted facet has the origin strictly on its inner side.
  bool origin_interior = false;
};

inline VerifyReport verify_inscription(const PolytopeVRep& v, const FacetIncidence& target, double tol_fit = kTolFit,
                                       double tol_side = kTolSide) {
  VerifyReport rep;
  const Eigen::Index m = target.m();
  const int d = v.dim;
  rep.facet_normals = Matrix::Constant(std::max(d, 0), m, std::numeric_limits<double>::quiet_NaN());
  if (v.n() != target.n() || v.vertices.rows() != d || !v.vertices.allFinite()) {
    for (Eigen::Index j = 0; j < m; ++j) rep.bad_facets.push_back(j);
    return rep;
  }
  require_on_sphere(v, 1e-6, "verify_inscription");
  bool origin_inside = true;
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto idx = target.facet_vertices(j);
    const auto fit = detail::fit_hyperplane(v.vertices, idx);
    bool good = fit.rank_ok && fit.max_residual <= tol_fit;
    if (good) {
      Vector side(v.n() - static_cast<Eigen::Index>(idx.size()));
      Eigen::Index c = 0;
      for (Eigen::Index k = 0; k < v.n(); ++k)
        if (!target(k, j)) side(c++) = fit.b - fit.a.dot(v.vertices.col(k));
      double orient = (side.size() == 0 || side.sum() >= 0.0) ? 1.0 : -1.0;
      good = side.size() == 0 || (orient * side).minCoeff() >= tol_side;
      const double b = orient * fit.b;
      if (good && b > 1e-12)
        rep.facet_normals.col(j) = (orient * fit.a) / b;
      else
        origin_inside = false;
    }
    if (!good) rep.bad_facets.push_back(j);
  }
  rep.ok = rep.bad_facets.empty();
  rep.origin_interior = rep.ok && origin_inside;
  return rep;
}

// ---------------------------------------------------------------------------
// combinatorial type counts for n = d+2 and n = d+3

namespace detail {

inline std::int64_t euler_phi(std::int64_t h) {
  std::int64_t result = h;
  for (std::int64_t p = 2; p * p <= h; ++p) {
    if (h % p == 0) {
      while (h % p == 0) h /= p;
      result -= result / p;
    }
  }
  if (h > 1) result -= result / h;
  return result;
}

}  // namespace detail

inline std::int64_t count_types(int n, int d) {
  if (d < 1 || d > 56) throw Error(ErrorCode::Unsupported, "count_types: d out of range");
  if (n == d + 2) return d / 2;
  if (n != d + 3)
    throw Error(ErrorCode::Unsupported, "count_types(" + std::to_string(n) + ", " + std::to_string(d) + "): only n = d+2 or d+3");
  const std::int64_t q = d + 3;
  std::int64_t sum = 0;
  for (std::int64_t h = 1; h <= q; h += 2)
    if (q % h == 0) sum += detail::euler_phi(h) * (std::int64_t{1} << (q / h));
  if (sum % (4 * q) != 0) throw Error(ErrorCode::Unsupported, "count_types: necklace sum not divisible by 4(d+3)");
  return (std::int64_t{1} << (d / 2)) - (d + 4) / 2 + sum / (4 * q);
}

}  // namespace inscribe
