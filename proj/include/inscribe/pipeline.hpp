#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "inscribe/core.hpp"
#include "inscribe/error.hpp"
#include "inscribe/numerics.hpp"
#include "inscribe/sdp.hpp"

namespace inscribe {

namespace method {
inline constexpr const char* kSdpConst = "SDP-λc";
inline constexpr const char* kSapConst = "SAP-λc";
inline constexpr const char* kSdpHeur = "SDP-λh";
inline constexpr const char* kSapHeur = "SAP-λh";
inline constexpr const char* kApHeur = "AP-λh";
inline constexpr const char* kSdpStar = "SDP-λ*";
inline constexpr const char* kSapStar = "SAP-λ*";
inline constexpr const char* kApStar = "AP-λ*";
inline constexpr const char* kSap = "SAP-λ";
inline constexpr const char* kAp = "AP-λ";
}  // namespace method

struct PipelineOptions {
  SolverOptions sdp;
  double eps_stop = 1e-7;     // AP/SAP stopping tolerance on ||X - Y||_F
  int ap_max_iter = 5000;
  double eps_pos = 0.0;       // closure of the strict S_ij > 0 constraints
  double proj_tol = 1e-8;     // inner projection tolerance
  int proj_max_iter = 20000;
  double rank_tol = 1e-6;
  double tol_fit = kTolFit;
  double tol_side = kTolSide;
  double extract_border_tol = 0.5;
  int heuristic_rounds = 10;
};

struct StepRecord {
  std::string method;
  bool inscribed = false;
  int iterations = 0;
};

struct PipelineReport {
  std::string method;
  bool inscribed = false;
  std::optional<PolytopeVRep> vertices;
  int rank_at_tol = 0;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::vector<std::vector<Eigen::Index>> bad_facet_history;
  bool converged = false;
  bool capped = false;  // stopped by the iteration cap; counted unsolved in benchmarks
  GramBorderMatrix final_x;
  std::optional<WeightMatrix> weights;  // final weights of an SDP stage
  int sdp_solves = 0;
  std::vector<StepRecord> steps;        // filled by run_procedure
};

/// Outcome of reading a candidate inscription off a bordered Gram matrix.
struct PointCheck {
  bool inscribed = false;
  std::optional<PolytopeVRep> vertices;
  std::vector<Eigen::Index> bad_facets;
  int rank = 0;
};

inline PointCheck check_point(const GramBorderMatrix& x, const FacetIncidence& inc, int d, const PipelineOptions& opts) {
  PointCheck out;
  out.rank = numeric_rank(0.5 * (x.data + x.data.transpose()), opts.rank_tol);
  try {
    auto v = extract_vertices(x, d, ExtractTolerances{opts.extract_border_tol, 1e-12});
    auto rep = verify_inscription(v, inc, opts.tol_fit, opts.tol_side);
    out.inscribed = rep.ok;
    out.bad_facets = std::move(rep.bad_facets);
    out.vertices = std::move(v);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BorderViolation && e.code() != ErrorCode::ZeroVertex && e.code() != ErrorCode::NonFinite) throw;
    for (Eigen::Index j = 0; j < inc.m(); ++j) out.bad_facets.push_back(j);
  }
  return out;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void apply_check(PipelineReport& rep, PointCheck chk) {
  rep.inscribed = chk.inscribed;
  rep.rank_at_tol = chk.rank;
  rep.vertices = chk.inscribed ? std::move(chk.vertices) : std::nullopt;
  rep.bad_facet_history.push_back(std::move(chk.bad_facets));
}

}  // namespace detail

struct ProjectionResult {
  GramBorderMatrix x;
  int iterations = 0;
  bool converged = false;
};

/// Multipliers of the entrywise constraints kept between calls; successive
/// projections of nearby points converge much faster from the previous ones.
struct ProjectionState {
  Matrix dual;
};

namespace detail {

struct EntryConstraints {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> fixed;  // equalities
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> lower;  // X_ij >= target_ij
  Matrix target;
};

inline EntryConstraints entry_constraints(const FacetIncidence& inc, double eps_pos) {
  const Eigen::Index n = inc.n(), m = inc.m(), order = 1 + n + m;
  EntryConstraints c;
  c.fixed.setConstant(order, order, false);
  c.lower.setConstant(order, order, false);
  c.target = Matrix::Zero(order, order);
  for (Eigen::Index k = 0; k < order; ++k) {
    c.fixed(0, k) = c.fixed(k, 0) = true;
    c.target(0, k) = c.target(k, 0) = 1.0;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    c.fixed(1 + i, 1 + i) = true;
    c.target(1 + i, 1 + i) = 2.0;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      auto& mask = inc(i, j) ? c.fixed : c.lower;
      mask(1 + i, 1 + n + j) = mask(1 + n + j, 1 + i) = true;
      if (!inc(i, j)) c.target(1 + i, 1 + n + j) = c.target(1 + n + j, 1 + i) = eps_pos;
    }
  return c;
}

}  // namespace detail

/// Frobenius-nearest point of PSD ∩ {border = 1, A_ii = 2, S = 0 on the
/// pattern, S >= eps_pos elsewhere}.
///
/// Alternates psd_project with the entrywise constraints through their
/// multipliers L: X(L) = P_psd(Y + L), and L follows projected gradient steps
/// on  1/2 ||P_psd(Y + L)||^2 - <T, L>  (L >= 0 on the inequalities) with
/// Barzilai-Borwein step lengths and a nonmonotone line search. A unit step
/// gives plain Dykstra alternation. Stops when the projected gradient, which
/// is the constraint violation of X(L), is below tol * max(1, max_ij |Y_ij|).
/// The fixed entries of the result are exact and it is PSD to within about
/// that tolerance.
inline ProjectionResult project_onto_constraints(const GramBorderMatrix& y, const FacetIncidence& inc, double eps_pos = 0.0,
                                                 double tol = 1e-8, int max_iter = 20000, ProjectionState* state = nullptr) {
  if (y.n != inc.n() || y.m != inc.m()) throw Error(ErrorCode::DimensionMismatch, "project_onto_constraints: shape mismatch");
  if (!(tol > 0.0) || max_iter < 0) throw Error(ErrorCode::InvalidArgument, "project_onto_constraints: need tol > 0, max_iter >= 0");
  const Eigen::Index order = y.order();
  const Matrix ys = detail::symmetrized(y.data, "project_onto_constraints");
  const auto cons = detail::entry_constraints(inc, eps_pos);
  const double stop = tol * std::max(1.0, ys.cwiseAbs().maxCoeff());

  auto clip = [&](Matrix& l) {
    for (Eigen::Index k = 0; k < l.size(); ++k) {
      if (cons.lower(k))
        l(k) = std::max(l(k), 0.0);
      else if (!cons.fixed(k))
        l(k) = 0.0;
    }
  };
  struct Eval {
    Matrix x, grad;
    double value = 0.0;
  };
  auto evaluate = [&](const Matrix& l) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(ys + l);
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::NonFinite, "project_onto_constraints: eigendecomposition failed");
    const Vector lp = eig.eigenvalues().cwiseMax(0.0);
    Eval e;
    e.x = eig.eigenvectors() * lp.asDiagonal() * eig.eigenvectors().transpose();
    e.x = 0.5 * (e.x + e.x.transpose());
    e.value = 0.5 * lp.squaredNorm() - (cons.target.array() * l.array()).sum();
    e.grad = (cons.fixed || cons.lower).select((e.x - cons.target).array(), 0.0).matrix();
    return e;
  };

  Matrix l = Matrix::Zero(order, order);
  if (state && state->dual.rows() == order && state->dual.cols() == order && state->dual.allFinite()) l = state->dual;
  clip(l);
  Eval cur = evaluate(l);
  ProjectionResult out;
  std::vector<double> recent{cur.value};
  double step = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    Matrix trial = l - cur.grad;
    clip(trial);
    if ((trial - l).norm() <= stop) {
      out.converged = true;
      break;
    }
    out.iterations = it;
    Matrix dir = l - step * cur.grad;
    clip(dir);
    dir -= l;
    const double slope = (cur.grad.array() * dir.array()).sum();
    const double ref = *std::max_element(recent.begin(), recent.end());
    double a = 1.0;
    Matrix l_next;
    Eval next;
    for (int back = 0; back < 40; ++back) {
      l_next = l + a * dir;
      next = evaluate(l_next);
      if (next.value <= ref + 1e-4 * a * slope) break;
      a *= 0.5;
    }
    const Matrix sv = l_next - l;
    const double sr = (sv.array() * (next.grad - cur.grad).array()).sum();
    step = sr > 0.0 ? std::clamp(sv.squaredNorm() / sr, 1e-10, 1e10) : 1e10;
    l = std::move(l_next);
    cur = std::move(next);
    recent.push_back(cur.value);
    if (recent.size() > 10) recent.erase(recent.begin());
  }
  if (state) state->dual = l;

  Matrix x = std::move(cur.x);
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (cons.fixed(k))
      x(k) = cons.target(k);
    else if (cons.lower(k))
      x(k) = std::max(x(k), cons.target(k));
  }
  out.x = GramBorderMatrix(inc.n(), inc.m(), std::move(x));
  return out;
}

/// Overwrites the fixed entries (border, A_ii, S on the pattern) and leaves
/// everything else, including the B block, as is. The result need not be PSD.
inline GramBorderMatrix simplified_projection(const GramBorderMatrix& y, const FacetIncidence& inc) {
  Matrix x = y.data;
  detail::reset_fixed_entries(x, inc);
  return GramBorderMatrix(y.n, y.m, std::move(x));
}

namespace detail {

template <class Projector>
PipelineReport alternate(const char* label, const GramBorderMatrix& x0, const FacetIncidence& inc, int d, const PipelineOptions& opts,
                         Projector&& project) {
  const auto t0 = std::chrono::steady_clock::now();
  if (x0.n != inc.n() || x0.m != inc.m()) throw Error(ErrorCode::DimensionMismatch, std::string(label) + ": start point shape mismatch");
  if (d + 1 > x0.order()) throw Error(ErrorCode::InvalidArgument, std::string(label) + ": d+1 exceeds matrix order");
  PipelineReport rep;
  rep.method = label;
  PointCheck start = check_point(x0, inc, d, opts);
  const bool start_ok = start.inscribed;

  GramBorderMatrix x = x0;
  for (int it = 1; it <= opts.ap_max_iter; ++it) {
    const GramBorderMatrix y(x.n, x.m, rank_truncate(x.data, d + 1));
    x = project(y);
    rep.iterations = it;
    if ((x.data - y.data).norm() <= opts.eps_stop) {
      rep.converged = true;
      break;
    }
  }

  bool kept_start = false;
  if (rep.iterations == 0) {
    apply_check(rep, std::move(start));
    kept_start = true;
  } else {
    PointCheck fin = check_point(x, inc, d, opts);
    // a start point that already gives an inscription is never given up
    if (start_ok && !(rep.converged && fin.inscribed)) {
      apply_check(rep, std::move(start));
      x = x0;
      kept_start = true;
    } else {
      apply_check(rep, std::move(fin));
    }
  }
  rep.capped = !rep.converged && !kept_start && rep.iterations >= opts.ap_max_iter;
  rep.final_x = std::move(x);
  rep.wall_time_s = seconds_since(t0);
  return rep;
}

}  // namespace detail

/// Alternating projection between the rank-(d+1) matrices and the constraint
/// set; only locally convergent, so a non-converged report is a normal result.
inline PipelineReport alternating_projection(const GramBorderMatrix& x0, const FacetIncidence& inc, int d,
                                             const PipelineOptions& opts = {}) {
  ProjectionState state;
  return detail::alternate(method::kAp, x0, inc, d, opts, [&](const GramBorderMatrix& y) {
    return project_onto_constraints(y, inc, opts.eps_pos, opts.proj_tol, opts.proj_max_iter, &state).x;
  });
}

/// Like alternating_projection, but the constraint step just overwrites the
/// fixed entries.
inline PipelineReport simplified_ap(const GramBorderMatrix& x0, const FacetIncidence& inc, int d, const PipelineOptions& opts = {}) {
  return detail::alternate(method::kSap, x0, inc, d, opts,
                           [&](const GramBorderMatrix& y) { return simplified_projection(y, inc); });
}

/// One SDP solve with fixed weights followed by extraction and verification.
inline PipelineReport sdp_with_weights(const FacetIncidence& inc, int d, const WeightMatrix& weights, const PipelineOptions& opts,
                                       const char* label) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineReport rep;
  rep.method = label;
  const SdpSolution sol = solve_sdp(SdpInstance{inc, weights, d}, opts.sdp);
  rep.sdp_solves = 1;
  rep.iterations = sol.iterations;
  rep.converged = sol.converged;
  rep.capped = !sol.converged;
  PointCheck chk = check_point(sol.x, inc, d, opts);
  chk.inscribed = chk.inscribed && sol.converged;
  detail::apply_check(rep, std::move(chk));
  rep.final_x = sol.x;
  rep.weights = weights;
  rep.wall_time_s = detail::seconds_since(t0);
  return rep;
}

inline PipelineReport sdp_constant_lambda(const FacetIncidence& inc, int d, const PipelineOptions& opts = {}) {
  return sdp_with_weights(inc, d, uniform_weights(inc, 2.0 * d / static_cast<double>(inc.n())), opts, method::kSdpConst);
}

struct LambdaStarRun {
  PipelineReport report;
  LambdaStarResult tuning;
};

/// SDP with weights tuned on a known inscription of the same type. The known
/// vertices are normalized first; the reported time includes the tuning.
inline LambdaStarRun sdp_lambda_star(const PolytopeVRep& known, const FacetIncidence& inc, const PipelineOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const PolytopeVRep nv = normalize_inscription(known);
  const VerifyReport fit = verify_inscription(nv, inc, 1e-8, 1e-12);
  if (!fit.origin_interior)
    throw Error(ErrorCode::InvalidArgument, "sdp_lambda_star: normalized inscription does not match the incidence");
  LambdaStarRun run;
  run.tuning = tune_lambda_star(Inscription{nv, fit.facet_normals}, inc, opts.sdp);
  run.report = sdp_with_weights(inc, known.dim, run.tuning.weights, opts, method::kSdpStar);
  run.report.wall_time_s = detail::seconds_since(t0);
  return run;
}

/// Reweighting loop: start from lambda = 2d/n, solve, check, and multiply the
/// weights of every mismatched facet by n/d. At most `heuristic_rounds` solves.
inline PipelineReport tune_lambda_heuristic(const FacetIncidence& inc, int d, const PipelineOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const double n = static_cast<double>(inc.n());
  if (d < 1 || inc.n() < d + 1) throw Error(ErrorCode::InvalidArgument, "tune_lambda_heuristic: need n >= d+1");
  const double init = 2.0 * d / n;
  const double rate = n / d;
  const double cap = init * std::pow(rate, 10);
  PipelineReport rep;
  rep.method = method::kSdpHeur;
  WeightMatrix weights = uniform_weights(inc, init);
  for (int round = 0; round < opts.heuristic_rounds; ++round) {
    const SdpSolution sol = solve_sdp(SdpInstance{inc, weights, d}, opts.sdp);
    ++rep.sdp_solves;
    rep.iterations += sol.iterations;
    rep.converged = sol.converged;
    rep.final_x = sol.x;
    rep.weights = weights;
    rep.capped = !sol.converged;
    if (!sol.converged) {
      // solver failure ends the loop as an undetermined result
      PointCheck chk = check_point(sol.x, inc, d, opts);
      chk.inscribed = false;
      detail::apply_check(rep, std::move(chk));
      break;
    }
    PointCheck chk = check_point(sol.x, inc, d, opts);
    const bool found = chk.inscribed;
    const auto bad = chk.bad_facets;
    detail::apply_check(rep, std::move(chk));
    if (found) break;
    for (auto j : bad)
      for (Eigen::Index i = 0; i < inc.n(); ++i)
        if (!inc(i, j)) weights.lambda(i, j) = std::min(weights.lambda(i, j) * rate, cap);
  }
  rep.wall_time_s = detail::seconds_since(t0);
  return rep;
}

/// Three-step procedure: SDP with heuristic weights, then SAP and AP from the
/// SDP solution. A negative answer is never a proof of non-inscribability.
inline PipelineReport run_procedure(const FacetIncidence& inc, int d, const PipelineOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<StepRecord> steps;
  PipelineReport sdp = tune_lambda_heuristic(inc, d, opts);
  steps.push_back({sdp.method, sdp.inscribed, sdp.iterations});
  auto finish = [&](PipelineReport r) {
    r.steps = steps;
    r.wall_time_s = detail::seconds_since(t0);
    return r;
  };
  if (sdp.inscribed) return finish(std::move(sdp));

  PipelineReport sap = simplified_ap(sdp.final_x, inc, d, opts);
  sap.method = method::kSapHeur;
  steps.push_back({sap.method, sap.inscribed, sap.iterations});
  if (sap.inscribed) return finish(std::move(sap));

  PipelineReport ap = alternating_projection(sdp.final_x, inc, d, opts);
  ap.method = method::kApHeur;
  steps.push_back({ap.method, ap.inscribed, ap.iterations});
  return finish(std::move(ap));
}

inline PipelineReport run_procedure(const PolytopeVRep& poly, const PipelineOptions& opts = {}) {
  return run_procedure(facet_enumeration(poly), poly.dim, opts);
}

}  // namespace inscribe
