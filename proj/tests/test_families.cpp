#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "inscribe/families.hpp"

using namespace inscribe;

namespace {

struct Case {
  FamilyKind kind;
  int param;
};

std::vector<Case> all_cases() {
  std::vector<Case> out;
  for (int n = 3; n <= 12; ++n) out.push_back({FamilyKind::NGon, n});
  for (auto k : {FamilyKind::Simplex, FamilyKind::Cube, FamilyKind::CrossPolytope})
    for (int d = 2; d <= 6; ++d) out.push_back({k, d});
  return out;
}

std::string name_of(const Case& c) { return std::string(to_string(c.kind)) + std::to_string(c.param); }

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Largest eigenvalue of a PSD matrix by plain power iteration.
double power_lambda_max(const Matrix& a) {
  Vector v = Vector::Ones(a.rows());
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) += 0.01 * static_cast<double>(k % 7);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 20000; ++it) {
    Vector w = a * v;
    const double next = v.dot(w);
    v = w.normalized();
    if (std::abs(next - lam) <= 1e-15 * std::abs(next)) return next;
    lam = next;
  }
  return lam;
}

}  // namespace

TEST(BuildFamily, TriangleValues) {
  const auto c = build_family({FamilyKind::NGon, 3});
  EXPECT_NEAR(c.lambda_bar, 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(c.u_bar, 3.0, 1e-12);
  EXPECT_NEAR(c.w_bar, 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(c.lambda_max_closed_form, 16.0, 1e-12);
}

TEST(BuildFamily, CubeThreeValues) {
  const auto c = build_family({FamilyKind::Cube, 3});
  EXPECT_NEAR(c.lambda_bar, 0.75, 1e-15);
  EXPECT_NEAR(c.u_bar, 1.25, 1e-15);
  EXPECT_NEAR(c.w_bar, 0.75, 1e-15);
  EXPECT_NEAR(c.lambda_max_closed_form, 9.0, 1e-12);
}

TEST(BuildFamily, CubeFourValues) {
  const auto c = build_family({FamilyKind::Cube, 4});
  EXPECT_NEAR(c.lambda_bar, 0.5, 1e-15);
  EXPECT_NEAR(c.lambda_max_closed_form, 8.0, 1e-12);
}

TEST(BuildFamily, SquareCrossCheck) {
  const auto a = build_family({FamilyKind::NGon, 4});
  const auto b = build_family({FamilyKind::CrossPolytope, 2});
  const auto c = build_family({FamilyKind::Cube, 2});
  for (const auto* x : {&a, &b, &c}) {
    EXPECT_NEAR(x->lambda_bar, 1.0, 1e-12);
    EXPECT_NEAR(x->u_bar, 1.0, 1e-12);
    EXPECT_NEAR(x->w_bar, 1.0, 1e-12);
    EXPECT_NEAR(x->lambda_max_closed_form, 8.0, 1e-12);
    EXPECT_NEAR(family_lambda_max_numeric(*x), 8.0, 1e-12);
    EXPECT_NEAR(x->h_norm_sq, 2.0, 1e-12);
  }
}

TEST(BuildFamily, InvalidParameters) {
  for (Case c : {Case{FamilyKind::NGon, 2}, Case{FamilyKind::Simplex, 1}, Case{FamilyKind::Cube, 1}, Case{FamilyKind::CrossPolytope, 1}}) {
    try {
      build_family({c.kind, c.param});
      ADD_FAILURE() << name_of(c);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidParam);
    }
  }
}

TEST(ParseFamilyKind, Names) {
  EXPECT_EQ(parse_family_kind("ngon"), FamilyKind::NGon);
  EXPECT_EQ(parse_family_kind("cross"), FamilyKind::CrossPolytope);
  EXPECT_EQ(parse_family_kind("cross_polytope"), FamilyKind::CrossPolytope);
  EXPECT_FALSE(parse_family_kind("prism").has_value());
}

TEST(LambdaMaxNumeric, Examples) {
  EXPECT_NEAR(family_lambda_max_numeric(build_family({FamilyKind::NGon, 5})), 4.0 / std::pow(std::cos(std::numbers::pi / 5), 2), 1e-9);
  EXPECT_NEAR(family_lambda_max_numeric(build_family({FamilyKind::NGon, 5})), 6.1115, 1e-4);
  EXPECT_NEAR(family_lambda_max_numeric(build_family({FamilyKind::Simplex, 4})), 64.0, 1e-9);
  EXPECT_NEAR(family_lambda_max_numeric(build_family({FamilyKind::CrossPolytope, 3})), 16.0, 1e-9);
}

// ---------------------------------------------------------------------------
// independent spectral oracles

// M is circulant for the n-gon, so the spectrum of M M^T is |DFT(first row)|^2.
TEST(Oracle, NgonCirculantSpectrum) {
  for (int n = 3; n <= 12; ++n) {
    const auto c = build_family({FamilyKind::NGon, n});
    const Matrix m = dual_matrix(c.certificate(), c.incidence);
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < n; ++j) ASSERT_NEAR(m(i, j), m(0, (j - i + n) % n), 1e-12);
    double top = 0.0;
    for (int k = 0; k < n; ++k) {
      std::complex<double> s = 0.0;
      for (int j = 0; j < n; ++j) s += m(0, j) * std::polar(1.0, 2.0 * std::numbers::pi * j * k / n);
      top = std::max(top, std::norm(s));
    }
    EXPECT_LE(rel_err(top, c.lambda_max_closed_form), 1e-9) << n;
    EXPECT_LE(rel_err(top, family_lambda_max_numeric(c)), 1e-9) << n;
  }
}

// M = w J - (w + lambda) I for the simplex; J has eigenvalues d+1 and 0.
TEST(Oracle, SimplexAllOnesSpectrum) {
  for (int d = 2; d <= 6; ++d) {
    const auto c = build_family({FamilyKind::Simplex, d});
    const Matrix m = dual_matrix(c.certificate(), c.incidence);
    const Matrix want = c.w_bar * Matrix::Ones(d + 1, d + 1) - (c.w_bar + c.lambda_bar) * Matrix::Identity(d + 1, d + 1);
    EXPECT_LE((m - want).cwiseAbs().maxCoeff(), 1e-12);
    const double e1 = c.w_bar * (d + 1) - (c.w_bar + c.lambda_bar), e0 = -(c.w_bar + c.lambda_bar);
    const double top = std::max(e1 * e1, e0 * e0);
    EXPECT_LE(rel_err(top, 4.0 * d * d), 1e-12);
    EXPECT_LE(rel_err(family_lambda_max_numeric(c), top), 1e-9);
  }
}

// For the +-1 families M M^T and M^T M share their nonzero spectrum.
TEST(Oracle, SignMatrixFamiliesSharedSpectrum) {
  for (auto kind : {FamilyKind::Cube, FamilyKind::CrossPolytope})
    for (int d = 2; d <= 6; ++d) {
      const auto c = build_family({kind, d});
      const Matrix m = dual_matrix(c.certificate(), c.incidence);
      const double a = power_lambda_max(m * m.transpose());
      const double b = power_lambda_max(m.transpose() * m);
      EXPECT_LE(rel_err(a, b), 1e-9);
      EXPECT_LE(rel_err(a, c.lambda_max_closed_form), 1e-9) << to_string(kind) << d;
      // |M_ij| is constant, so every entry of M is +-lambda_bar
      EXPECT_LE((m.cwiseAbs().array() - c.lambda_bar).abs().maxCoeff(), 1e-12);
    }
}

// ---------------------------------------------------------------------------
// properties over the full ranges

class FamilyRange : public ::testing::TestWithParam<Case> {};

TEST_P(FamilyRange, CertificateProperties) {
  const auto c = build_family({GetParam().kind, GetParam().param});
  const DualCertificate cert = c.certificate();
  EXPECT_GE(dual_feasibility_margin(cert, c.incidence), -1e-9);
  const PrimalPoint p = family_primal_point(c);
  const double fp = primal_objective(p, c.weights());
  EXPECT_LE(std::abs(duality_gap(p, cert, c.incidence)), 1e-8 * (1.0 + std::abs(fp)));

  const auto cond = check_simplified_conditions(c.incidence, c.h_norm_sq, c.u_bar, c.w_bar, c.lambda_bar);
  EXPECT_TRUE(cond.feasible);
  EXPECT_TRUE(cond.zero_gap);

  const double num = family_lambda_max_numeric(c);
  EXPECT_LE(rel_err(num, c.lambda_max_closed_form), 1e-9);
  EXPECT_LE(std::abs(num - (4.0 + 4.0 * c.u_bar)), 1e-8);
  const double n = static_cast<double>(c.incidence.n()), m = static_cast<double>(c.incidence.m());
  const double lhs_balance = n * (1.0 + c.u_bar) + m * c.h_norm_sq, rhs_balance = (c.lambda_bar + c.w_bar) * c.vertices_per_facet * m;
  EXPECT_LE(std::abs(lhs_balance - rhs_balance), 1e-9 * (1.0 + std::abs(lhs_balance)));
}

TEST_P(FamilyRange, InscriptionInvariants) {
  const auto c = build_family({GetParam().kind, GetParam().param});
  const auto& poly = c.inscription.polytope;
  for (Eigen::Index i = 0; i < poly.n(); ++i) EXPECT_NEAR(poly.vertices.col(i).norm(), 1.0, 1e-12);
  for (Eigen::Index j = 0; j < c.incidence.m(); ++j) {
    EXPECT_NEAR(c.inscription.facet_normals.col(j).squaredNorm(), c.h_norm_sq, 1e-9);
    EXPECT_EQ(c.incidence.on_facet.col(j).count(), c.vertices_per_facet);
  }
  const SlackMatrix s = slack_from_reps(poly, c.inscription.facet_normals);
  EXPECT_EQ(s.zero_set, c.incidence);
  validate_incidence(c.incidence, c.dim());
  EXPECT_NEAR(s.entries.sum(), static_cast<double>(c.incidence.n() * c.incidence.m()), 1e-9);
  EXPECT_EQ(c.incidence.zero_count(), c.vertices_per_facet * c.incidence.m());
  EXPECT_TRUE(verify_inscription(poly, c.incidence).ok);
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, FamilyRange, ::testing::ValuesIn(all_cases()),
                         [](const ::testing::TestParamInfo<Case>& info) { return name_of(info.param); });

// ---------------------------------------------------------------------------

TEST(FamilySdp, SmallMembersRecoverRankDPlusOne) {
  for (Case c : {Case{FamilyKind::NGon, 3}, Case{FamilyKind::NGon, 6}, Case{FamilyKind::Simplex, 3}, Case{FamilyKind::Cube, 3},
                 Case{FamilyKind::CrossPolytope, 3}}) {
    const auto f = build_family({c.kind, c.param});
    const SdpSolution sol = solve_sdp(SdpInstance{f.incidence, f.weights(), f.dim()});
    ASSERT_TRUE(sol.converged) << name_of(c);
    const PrimalPoint p = family_primal_point(f);
    EXPECT_NEAR(sol.objective, primal_objective(p, f.weights()), 1e-5) << name_of(c);
    const Vector ev = sym_eig(sol.x.data).values;
    EXPECT_LE(ev(f.dim() + 1), 1e-6 * ev(0)) << name_of(c);
    EXPECT_TRUE(verify_inscription(extract_vertices(sol.x, f.dim(), 1e-6), f.incidence).ok) << name_of(c);
  }
}
