#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "inscribe/core.hpp"
#include "inscribe/error.hpp"
#include "inscribe/numerics.hpp"

namespace inscribe {

/// Penalty weights lambda_ij (n x m). Entries on the zero pattern are 0.
struct WeightMatrix {
  Matrix lambda;
};

inline WeightMatrix uniform_weights(const FacetIncidence& inc, double value) {
  WeightMatrix w{Matrix::Constant(inc.n(), inc.m(), value)};
  w.lambda = inc.on_facet.select(0.0, w.lambda);
  return w;
}

inline void validate_weights(const WeightMatrix& w, const FacetIncidence& inc) {
  if (w.lambda.rows() != inc.n() || w.lambda.cols() != inc.m())
    throw Error(ErrorCode::DimensionMismatch, "weights shape does not match incidence");
  detail::require_finite(w.lambda, "weights");
  for (Eigen::Index i = 0; i < inc.n(); ++i)
    for (Eigen::Index j = 0; j < inc.m(); ++j) {
      if (w.lambda(i, j) < 0.0) throw Error(ErrorCode::InvalidArgument, "negative weight");
      if (inc(i, j) && w.lambda(i, j) != 0.0) throw Error(ErrorCode::InvalidArgument, "nonzero weight on the zero pattern");
    }
}

struct SdpInstance {
  FacetIncidence incidence;
  WeightMatrix weights;
  int dim = 0;
};

struct SolverOptions {
  double rho = 3.0;
  double tol = 1e-7;
  int max_iter = 50000;
  double relaxation = 1.6;  // over-relaxation in (0, 2); 1 disables it
  bool adaptive_rho = false;  // residual balancing every rho_interval iterations
  int rho_interval = 100;
  bool precondition = true;   // diagonal rescaling of the facet rows
};

struct SdpSolution {
  GramBorderMatrix x;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// C = I with -lambda_ij / 2 at both symmetric S positions, so that
/// <C, X> = tr(X) - sum lambda_ij S_ij.
inline Matrix build_cost(const SdpInstance& inst) {
  const Eigen::Index n = inst.incidence.n(), m = inst.incidence.m();
  validate_weights(inst.weights, inst.incidence);
  Matrix c = Matrix::Identity(1 + n + m, 1 + n + m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      if (inst.incidence(i, j)) continue;
      const double h = -0.5 * inst.weights.lambda(i, j);
      c(1 + i, 1 + n + j) = h;
      c(1 + n + j, 1 + i) = h;
    }
  return c;
}

namespace detail {

/// Resets the entries fixed by the SDP constraints: border = 1, A_ii = 2 and
/// S_ij = 0 on the zero pattern.
inline void reset_fixed_entries(Matrix& x, const FacetIncidence& inc) {
  const Eigen::Index n = inc.n(), m = inc.m();
  x.row(0).setOnes();
  x.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) x(1 + i, 1 + i) = 2.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (inc(i, j)) {
        x(1 + i, 1 + n + j) = 0.0;
        x(1 + n + j, 1 + i) = 0.0;
      }
}

struct SplitResult {
  Matrix x;  // affine-feasible iterate
  Matrix z;  // PSD iterate
  Matrix u;  // scaled dual
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Two-set consensus splitting for  min <C, X>  s.t.  X in K, X PSD,  where K
/// is handled by an entrywise projection `project` (in place).
///
///   X <- P_K(Z - U - C / rho)
///   Xr = a X + (1 - a) Z          (over-relaxation, a = opts.relaxation)
///   Z <- P_psd(Xr + U)
///   U <- U + Xr - Z
///
/// With adaptive_rho, rho is doubled or halved when one residual dominates the
/// other by 10x (U is rescaled to match).
/// Residuals are ||X - Z||_F and rho ||Z - Z_prev||_F, both absolute.
template <class Project>
SplitResult split_solve(const Matrix& cost, Project&& project, Matrix z, Matrix u, const SolverOptions& opts) {
  if (!(opts.rho > 0.0) || !(opts.tol > 0.0) || opts.max_iter < 0 || !(opts.relaxation > 0.0 && opts.relaxation < 2.0))
    throw Error(ErrorCode::InvalidArgument, "solver options: need rho > 0, tol > 0, max_iter >= 0, relaxation in (0, 2)");
  const double a = opts.relaxation;
  SplitResult out;
  double rho = opts.rho;
  Matrix shift = cost / rho;
  Matrix x = z - u - shift;
  project(x);
  out.primal_residual = std::numeric_limits<double>::infinity();
  out.dual_residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    x = z - u - shift;
    project(x);
    Matrix xr = a * x + (1.0 - a) * z;
    Matrix z_prev = std::move(z);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(xr + u);
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::NonFinite, "splitting solver: eigendecomposition failed");
    z = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
    u += xr - z;
    out.primal_residual = (x - z).norm();
    out.dual_residual = rho * (z - z_prev).norm();
    out.iterations = it;
    if (!std::isfinite(out.primal_residual) || !std::isfinite(out.dual_residual))
      throw Error(ErrorCode::NonFinite, "splitting solver diverged");
    if (out.primal_residual <= opts.tol && out.dual_residual <= opts.tol) {
      out.converged = true;
      break;
    }
    if (opts.adaptive_rho && it % opts.rho_interval == 0) {
      double factor = 1.0;
      if (out.primal_residual > 10.0 * out.dual_residual) factor = 2.0;
      else if (out.dual_residual > 10.0 * out.primal_residual) factor = 0.5;
      if (factor != 1.0 && rho * factor >= 1e-6 && rho * factor <= 1e6) {
        rho *= factor;
        u /= factor;
        shift = cost / rho;
      }
    }
  }
  out.x = std::move(x);
  out.z = std::move(z);
  out.u = std::move(u);
  return out;
}

}  // namespace detail

namespace detail {

/// Per-row scale of the bordered variable: 1 on the border and the A block,
/// max(1, sum_i lambda_ij / 2) on facet row j, which tracks sqrt(B_jj) at the
/// optimum.
inline Vector facet_scaling(const SdpInstance& inst) {
  const Eigen::Index n = inst.incidence.n(), m = inst.incidence.m();
  Vector dv = Vector::Ones(1 + n + m);
  for (Eigen::Index j = 0; j < m; ++j) dv(1 + n + j) = std::max(1.0, 0.5 * inst.weights.lambda.col(j).sum());
  return dv;
}

}  // namespace detail

/// Solves  min tr(X) - sum lambda_ij S_ij  over PSD bordered matrices with
/// A_ii = 2 and S = 0 on the zero pattern. `warm_start`, when given, seeds the
/// PSD iterate.
///
/// With opts.precondition the splitting runs on Xt = D^-1 X D^-1 for the
/// diagonal D of detail::facet_scaling, so the fixed entries stay entrywise and
/// PSD-ness is unchanged; tol is divided by max(D)^2 to keep the accuracy of X.
inline SdpSolution solve_sdp(const SdpInstance& inst, const SolverOptions& opts = {},
                             const std::optional<Matrix>& warm_start = std::nullopt) {
  const FacetIncidence& inc = inst.incidence;
  const Eigen::Index n = inc.n(), m = inc.m();
  const Eigen::Index order = 1 + n + m;
  const Matrix cost = build_cost(inst);
  const Vector dv = opts.precondition ? detail::facet_scaling(inst) : Vector::Ones(order);
  const Vector dinv = dv.cwiseInverse();
  const double dmax = dv.maxCoeff();

  Matrix z0;
  if (warm_start) {
    if (warm_start->rows() != order || warm_start->cols() != order)
      throw Error(ErrorCode::DimensionMismatch, "solve_sdp: warm start has the wrong order");
    detail::require_finite(*warm_start, "solve_sdp warm start");
    z0 = dinv.asDiagonal() * (*warm_start) * dinv.asDiagonal();
  } else {
    z0 = Matrix::Identity(order, order);
  }
  auto project = [&](Matrix& x) {
    detail::reset_fixed_entries(x, inc);
    // border entries of Xt are 1 / d_k
    for (Eigen::Index k = 1; k < order; ++k) {
      x(0, k) = dinv(k);
      x(k, 0) = dinv(k);
    }
  };
  project(z0);
  const Matrix scaled_cost = dv.asDiagonal() * cost * dv.asDiagonal() / dmax;
  SolverOptions inner = opts;
  inner.tol = opts.tol / (dmax * dmax);
  auto res = detail::split_solve(scaled_cost, project, std::move(z0), Matrix::Zero(order, order), inner);

  // Report the PSD iterate with its fixed entries reset; it is PSD to within
  // the primal residual and satisfies the equalities exactly.
  Matrix x = dv.asDiagonal() * res.z * dv.asDiagonal();
  detail::reset_fixed_entries(x, inc);
  SdpSolution sol;
  sol.objective = (cost.array() * x.array()).sum();
  sol.x = GramBorderMatrix(n, m, std::move(x));
  sol.primal_residual = res.primal_residual * dmax * dmax;
  sol.dual_residual = res.dual_residual * dmax * dmax;
  sol.iterations = res.iterations;
  sol.converged = res.converged;
  return sol;
}

// ---------------------------------------------------------------------------
// duality

/// (u, w, lambda) for the dual problem; w is indexed by the row-major order of
/// the zero positions.
struct DualCertificate {
  Vector u;
  Vector w;
  WeightMatrix weights;
};

inline Matrix dual_matrix(const DualCertificate& cert, const FacetIncidence& inc) {
  if (cert.w.size() != inc.zero_count())
    throw Error(ErrorCode::LengthMismatch, "dual_matrix: |w| = " + std::to_string(cert.w.size()) + " but |I^z| = " +
                                               std::to_string(inc.zero_count()));
  if (cert.weights.lambda.rows() != inc.n() || cert.weights.lambda.cols() != inc.m())
    throw Error(ErrorCode::DimensionMismatch, "dual_matrix: weights shape does not match incidence");
  Matrix mm = -cert.weights.lambda;
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < inc.n(); ++i)
    for (Eigen::Index j = 0; j < inc.m(); ++j)
      if (inc(i, j)) mm(i, j) = cert.w(k++);
  return mm;
}

/// lambda_min(I + diag(u) - M M^T / 4), the Schur form of the dual constraint.
inline double dual_feasibility_margin(const DualCertificate& cert, const FacetIncidence& inc) {
  if (cert.u.size() != inc.n()) throw Error(ErrorCode::LengthMismatch, "dual certificate: |u| != n");
  const Matrix mm = dual_matrix(cert, inc);
  Matrix schur = Matrix::Identity(inc.n(), inc.n());
  schur.diagonal() += cert.u;
  schur -= 0.25 * mm * mm.transpose();
  return min_eigenvalue(schur);
}

inline bool check_dual_feasible(const DualCertificate& cert, const FacetIncidence& inc, double tol = 1e-9) {
  return dual_feasibility_margin(cert, inc) >= -tol;
}

/// (A, B, S) blocks of a primal point.
struct PrimalPoint {
  Matrix a, b, s;

  static PrimalPoint from_gram(const GramBorderMatrix& x) { return {x.A(), x.B(), x.S()}; }
};

inline double primal_objective(const Matrix& a, const Matrix& b, const Matrix& s, const WeightMatrix& weights) {
  if (weights.lambda.rows() != s.rows() || weights.lambda.cols() != s.cols())
    throw Error(ErrorCode::DimensionMismatch, "primal_objective: weights shape does not match S");
  return a.trace() + b.trace() - (weights.lambda.array() * s.array()).sum() + 1.0;
}

inline double primal_objective(const PrimalPoint& p, const WeightMatrix& weights) {
  return primal_objective(p.a, p.b, p.s, weights);
}

inline double dual_objective(const DualCertificate& cert, const FacetIncidence& inc) {
  const Matrix mm = dual_matrix(cert, inc);
  return static_cast<double>(inc.m() + inc.n()) + mm.sum() - cert.u.sum() + 1.0;
}

/// Largest violation of the primal constraints: equalities and
/// lambda_min([[A, S], [S^T, B]] - 1).
inline double primal_infeasibility(const PrimalPoint& p, const FacetIncidence& inc) {
  const Eigen::Index n = inc.n(), m = inc.m();
  if (p.a.rows() != n || p.a.cols() != n || p.b.rows() != m || p.b.cols() != m || p.s.rows() != n || p.s.cols() != m)
    throw Error(ErrorCode::DimensionMismatch, "primal point shape does not match incidence");
  double viol = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) viol = std::max(viol, std::abs(p.a(i, i) - 2.0));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (inc(i, j)) viol = std::max(viol, std::abs(p.s(i, j)));
  Matrix blk(n + m, n + m);
  blk << p.a, p.s, p.s.transpose(), p.b;
  blk.array() -= 1.0;
  viol = std::max(viol, -min_eigenvalue(0.5 * (blk + blk.transpose())));
  return viol;
}

/// f_p - f_d for a feasible primal point and dual certificate.
inline double duality_gap(const PrimalPoint& p, const DualCertificate& cert, const FacetIncidence& inc, double tol = 1e-8) {
  const double pv = primal_infeasibility(p, inc);
  if (pv > tol) throw Error(ErrorCode::InfeasiblePoint, "duality_gap: primal point infeasible by " + std::to_string(pv));
  const double dm = dual_feasibility_margin(cert, inc);
  if (dm < -tol) throw Error(ErrorCode::InfeasiblePoint, "duality_gap: dual certificate infeasible, margin " + std::to_string(dm));
  return primal_objective(p, cert.weights) - dual_objective(cert, inc);
}

/// Uniform (u_bar, w_bar, lambda_bar) certificate on an incidence.
inline DualCertificate scalar_certificate(const FacetIncidence& inc, double u_bar, double w_bar, double lambda_bar) {
  return {Vector::Constant(inc.n(), u_bar), Vector::Constant(inc.zero_count(), w_bar), uniform_weights(inc, lambda_bar)};
}

struct SimplifiedConditions {
  bool feasible = false;   // lambda_max(M M^T) <= 4 + 4 u_bar
  bool zero_gap = false;   // n (1 + u_bar) + m ||h||^2 == (lambda_bar + w_bar) k m
  double lambda_max = 0.0;
};

/// The two scalar conditions for facet-transitive polytopes with k vertices
/// per facet. M is built from the incidence so lambda_max is computed, not
/// assumed.
inline SimplifiedConditions check_simplified_conditions(const FacetIncidence& inc, double h_norm_sq, double u_bar, double w_bar,
                                                        double lambda_bar, double tol = 1e-9) {
  const Eigen::Index n = inc.n(), m = inc.m();
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "check_simplified_conditions: no facets");
  const auto k = inc.on_facet.col(0).count();
  for (Eigen::Index j = 1; j < m; ++j)
    if (inc.on_facet.col(j).count() != k)
      throw Error(ErrorCode::InvalidArgument, "check_simplified_conditions: facets have different vertex counts");
  const Matrix mm = dual_matrix(scalar_certificate(inc, u_bar, w_bar, lambda_bar), inc);
  SimplifiedConditions out;
  out.lambda_max = max_eigenvalue(mm * mm.transpose());
  const double rhs6 = 4.0 + 4.0 * u_bar;
  out.feasible = out.lambda_max <= rhs6 + tol * (1.0 + std::abs(rhs6));
  const double lhs7 = static_cast<double>(n) * (1.0 + u_bar) + static_cast<double>(m) * h_norm_sq;
  const double rhs7 = (lambda_bar + w_bar) * static_cast<double>(k) * static_cast<double>(m);
  out.zero_gap = std::abs(lhs7 - rhs7) <= tol * (1.0 + std::abs(lhs7));
  return out;
}

// ---------------------------------------------------------------------------
// lambda* tuning

struct LambdaStarResult {
  WeightMatrix weights;
  DualCertificate certificate;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Chooses weights minimising the duality gap at a known inscription: a joint
/// SDP over (lambda >= 0, u, w) with the dual block
/// [[I + diag(u), M/2], [M^T/2, I]] as its PSD variable.
inline LambdaStarResult tune_lambda_star(const Inscription& insc, const FacetIncidence& inc, const SolverOptions& opts = {}) {
  const PolytopeVRep& poly = insc.polytope;
  const Eigen::Index n = inc.n(), m = inc.m();
  const int d = poly.dim;
  if (poly.n() != n || insc.facet_normals.cols() != m || insc.facet_normals.rows() != d)
    throw Error(ErrorCode::DimensionMismatch, "tune_lambda_star: inscription does not match incidence");
  require_on_sphere(poly, 1e-6, "tune_lambda_star");
  Matrix s = Matrix::Ones(n, m) - poly.vertices.transpose() * insc.facet_normals;
  s = inc.on_facet.select(0.0, s);

  // gap = sum ||h_j||^2 + <C, Z>
  const Eigen::Index order = n + m;
  Matrix cost = Matrix::Zero(order, order);
  for (Eigen::Index i = 0; i < n; ++i) cost(i, i) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double c = inc(i, j) ? -1.0 : -(1.0 - s(i, j));
      cost(i, n + j) = c;
      cost(n + j, i) = c;
    }

  auto make_project = [&](double cap) {
    return [&, cap](Matrix& z) {
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k)
          if (i != k) z(i, k) = 0.0;
      z.bottomRightCorner(m, m).setIdentity();
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
          if (inc(i, j)) continue;
          double v = 0.5 * (z(i, n + j) + z(n + j, i));
          v = std::clamp(v, -0.5 * cap, 0.0);
          z(i, n + j) = v;
          z(n + j, i) = v;
        }
    };
  };

  // Iterates stay bounded under the cap; if the cap binds it is lifted and the
  // solve resumes from where it stopped.
  const double cap = 100.0 * (2.0 * d / static_cast<double>(n));
  Matrix z0 = Matrix::Identity(order, order);
  auto res = detail::split_solve(cost, make_project(cap), z0, Matrix::Zero(order, order), opts);
  bool cap_active = false;
  for (Eigen::Index i = 0; i < n && !cap_active; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (!inc(i, j) && res.x(i, n + j) <= -0.5 * cap * (1.0 - 1e-6)) {
        cap_active = true;
        break;
      }
  int total_iter = res.iterations;
  if (cap_active) {
    res = detail::split_solve(cost, make_project(std::numeric_limits<double>::infinity()), std::move(res.z), std::move(res.u), opts);
    total_iter += res.iterations;
  }

  const Matrix& z = res.x;
  LambdaStarResult out;
  out.iterations = total_iter;
  out.converged = res.converged;
  out.weights.lambda = Matrix::Zero(n, m);
  out.certificate.u = Vector(n);
  out.certificate.w = Vector(inc.zero_count());
  for (Eigen::Index i = 0; i < n; ++i) out.certificate.u(i) = z(i, i) - 1.0;
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      if (inc(i, j))
        out.certificate.w(k++) = 2.0 * z(i, n + j);
      else
        out.weights.lambda(i, j) = std::max(0.0, -2.0 * z(i, n + j));
    }
  out.certificate.weights = out.weights;
  // Repair the small PSD violation left by the splitting so the certificate
  // is exactly dual feasible; this shifts the gap by n * shift.
  const double margin = dual_feasibility_margin(out.certificate, inc);
  if (margin < 0.0) out.certificate.u.array() += -margin * (1.0 + 1e-12) + 1e-15;

  PrimalPoint p = PrimalPoint::from_gram(gram_from_inscription(insc));
  p.s = inc.on_facet.select(0.0, p.s);
  out.gap = primal_objective(p, out.weights) - dual_objective(out.certificate, inc);
  return out;
}

}  // namespace inscribe
