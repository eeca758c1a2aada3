#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "inscribe/error.hpp"

namespace inscribe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric inputs whose antisymmetric part exceeds this (relative to
// 1 + max|X|) are rejected instead of being averaged away.
inline constexpr double kAsymmetryTol = 1e-8;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted in descending order.
struct SymEig {
  Vector values;
  Matrix vectors;  // column k pairs with values(k)
};

namespace detail {

inline void require_finite(const Matrix& x, const char* who) {
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, std::string(who) + ": matrix has NaN/Inf entries");
}

inline Matrix symmetrized(const Matrix& x, const char* who) {
  if (x.rows() != x.cols())
    throw Error(ErrorCode::DimensionMismatch, std::string(who) + ": matrix is not square");
  require_finite(x, who);
  const double scale = 1.0 + (x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
  const double skew = x.size() ? (x - x.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (skew > kAsymmetryTol * scale)
    throw Error(ErrorCode::Asymmetric, std::string(who) + ": asymmetry " + std::to_string(skew));
  return 0.5 * (x + x.transpose());
}

}  // namespace detail

inline SymEig sym_eig(const Matrix& x) {
  const Matrix xs = detail::symmetrized(x, "sym_eig");
  SymEig out;
  if (xs.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(xs);
  // Eigen sorts ascending.
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

inline Matrix psd_project(const Matrix& x) {
  const SymEig eig = sym_eig(x);
  if (eig.values.size() == 0) return x;
  const Vector clamped = eig.values.cwiseMax(0.0);
  Matrix out = eig.vectors * clamped.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

/// Best rank-r approximation of a symmetric matrix. Keeps the r eigenpairs of
/// largest |value| with their signs, which for symmetric input is exactly the
/// truncated SVD.
inline Matrix rank_truncate(const Matrix& x, Eigen::Index r) {
  if (r < 1 || r > x.rows())
    throw Error(ErrorCode::InvalidArgument, "rank_truncate: rank " + std::to_string(r) + " outside [1, size]");
  const SymEig eig = sym_eig(x);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(eig.values.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(eig.values(a)) > std::abs(eig.values(b));
  });
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < r; ++k) {
    const auto idx = order[static_cast<std::size_t>(k)];
    out.noalias() += eig.values(idx) * eig.vectors.col(idx) * eig.vectors.col(idx).transpose();
  }
  return 0.5 * (out + out.transpose());
}

/// Number of singular values above tol * sigma_max.
inline int numeric_rank(const Matrix& x, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "numeric_rank: tol must be positive");
  detail::require_finite(x, "numeric_rank");
  if (x.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(x);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = tol * s(0);
  return static_cast<int>((s.array() > cut).count());
}

inline double min_eigenvalue(const Matrix& x) {
  const SymEig eig = sym_eig(x);
  return eig.values.size() ? eig.values(eig.values.size() - 1) : 0.0;
}

inline double max_eigenvalue(const Matrix& x) {
  const SymEig eig = sym_eig(x);
  return eig.values.size() ? eig.values(0) : 0.0;
}

}  // namespace inscribe
