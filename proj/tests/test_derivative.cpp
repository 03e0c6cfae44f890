#include "plap/derivative.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace plap;

namespace {

AnalyticProblem bumpy_2d(double p) {
  return AnalyticProblem{p, default_q(p, 2),
                         [](const Vec2& x) { return 1.0 + 0.5 * std::exp(-(x - Vec2(0.35, 0.6)).squaredNorm() / 0.05); },
                         [](const Vec2& x) { return 3.0 + 2.0 * std::sin(2 * M_PI * x.x()) * x.y(); }};
}

AnalyticProblem bumpy_1d(double p) {
  return AnalyticProblem{p, default_q(p, 1),
                         [](const Vec2& x) { return 1.0 + 0.5 * std::exp(-std::pow(x.x() - 0.35, 2) / 0.02); },
                         [](const Vec2& x) { return 5.0 * x.x() * x.x(); }};
}

struct Solved {
  Mesh mesh;
  ProblemData data;
  EigenResult eig;
};

Solved solve(const Mesh& m, const AnalyticProblem& a) {
  ProblemData d = a.sample(m);
  EigenResult e = solve_principal(m, d, {});
  return {m, std::move(d), std::move(e)};
}

const auto kStream = DeformationField::stream_bump({0.45, 0.55}, {0.3, 0.35}, 1.0);
const auto kRotation = DeformationField::rotation({0.5, 0.5}, 0.15, 0.4);

}  // namespace

TEST(Derivative, ZeroField) {
  const Solved s = solve(unit_square(16), bumpy_2d(2.0));
  ASSERT_TRUE(s.eig.converged);
  const auto zero = DeformationField::zero(2);
  EXPECT_EQ(derivative_general(s.mesh, s.data, s.eig, zero), 0.0);
  EXPECT_EQ(derivative_divfree(s.mesh, s.data, s.eig, zero), 0.0);
  EXPECT_EQ(derivative_hadamard(s.mesh, s.data, s.eig, zero), 0.0);
  EXPECT_EQ(fd_derivative_oracle(s.mesh, bumpy_2d(2.0), zero, 1e-3, {}), 0.0);
  const auto rep = derivative_report(s.mesh, bumpy_2d(2.0), zero, {});
  EXPECT_EQ(rep.value_general, 0.0);
  EXPECT_EQ(rep.fd_value, 0.0);
  EXPECT_FALSE(rep.one_sided_mismatch);
}

TEST(Derivative, GeneralEqualsDivfreeExactly) {
  for (double p : {1.5, 2.0, 3.0}) {
    const Solved s = solve(unit_square(24), bumpy_2d(p));
    ASSERT_TRUE(s.eig.converged);
    for (const auto& f : {kStream, kRotation, kStream + kRotation})
      EXPECT_EQ(derivative_general(s.mesh, s.data, s.eig, f), derivative_divfree(s.mesh, s.data, s.eig, f));
  }
}

TEST(Derivative, LinearAndAntisymmetricInField) {
  const Solved s = solve(unit_square(24), bumpy_2d(1.5));
  const auto other = DeformationField::stream_bump({0.55, 0.45}, {0.25, 0.3}, -0.7);
  const double a = derivative_divfree(s.mesh, s.data, s.eig, kStream);
  const double b = derivative_divfree(s.mesh, s.data, s.eig, other);
  EXPECT_NEAR(derivative_divfree(s.mesh, s.data, s.eig, kStream + other), a + b, 1e-12 * (1 + std::abs(a) + std::abs(b)));
  EXPECT_EQ(derivative_divfree(s.mesh, s.data, s.eig, -kStream), -a);
  EXPECT_EQ(derivative_divfree(s.mesh, s.data, s.eig, -kRotation), -derivative_divfree(s.mesh, s.data, s.eig, kRotation));
}

TEST(Derivative, Preconditions) {
  const Solved s = solve(unit_square(16), bumpy_2d(2.0));
  const auto radial = DeformationField::radial_bump(2, {0.5, 0.5}, 0.3, 1.0);
  EXPECT_THROW(derivative_divfree(s.mesh, s.data, s.eig, radial), std::invalid_argument);
  EXPECT_THROW(derivative_hadamard(s.mesh, s.data, s.eig, radial), std::invalid_argument);
  EXPECT_NO_THROW(derivative_general(s.mesh, s.data, s.eig, radial));
  EigenResult bad = s.eig;
  bad.converged = false;
  EXPECT_THROW(derivative_general(s.mesh, s.data, bad, kStream), std::invalid_argument);
  const auto wide = DeformationField::stream_bump({0.5, 0.5}, {0.5, 0.3}, 1.0);
  EXPECT_THROW(derivative_general(s.mesh, s.data, s.eig, wide), std::invalid_argument);
  EXPECT_THROW(fd_derivative_oracle(s.mesh, bumpy_2d(2.0), kStream, 0.0, {}), std::invalid_argument);
}

TEST(Derivative, HadamardVanishesForConstantData) {
  const Mesh m = unit_square(32);
  const ProblemData d{2.0, 2.0, CellField(m.cell_count(), 2.0), CellField(m.cell_count(), 1.0)};
  const EigenResult e = solve_principal(m, d, {});
  ASSERT_TRUE(e.converged);
  for (const auto& f : {kStream, kRotation}) {
    const double h = derivative_hadamard(m, d, e, f);
    EXPECT_LE(std::abs(h), 1e-2 * hadamard_scale(m, d, e, f)) << f.name();
  }
}

TEST(Derivative, HadamardScaleBoundsValue) {
  const Solved s = solve(unit_square(24), bumpy_2d(3.0));
  for (const auto& f : {kStream, kRotation})
    EXPECT_LE(std::abs(derivative_hadamard(s.mesh, s.data, s.eig, f)), hadamard_scale(s.mesh, s.data, s.eig, f));
}

TEST(Derivative, ConstantData1DGivesZero) {
  // Transport leaves constant data unchanged, so lambda(t) is constant.
  const Mesh m = unit_interval(256);
  const AnalyticProblem a{2.0, 1.0, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return 0.0; }};
  const auto f = DeformationField::translation_bump(1, {0.5, 0.0}, {0.35, 0.35}, {1.0, 0.0});
  const auto rep = derivative_report(m, a, f, {});
  ASSERT_TRUE(rep.converged);
  EXPECT_EQ(rep.fd_value, 0.0);
  EXPECT_LE(std::abs(rep.value_general), 1e-3 * rep.lambda0);
}

TEST(Derivative, MatchesFiniteDifferences1D) {
  const Mesh m = unit_interval(256);
  for (const auto& f : {DeformationField::translation_bump(1, {0.5, 0.0}, {0.35, 0.35}, {1.0, 0.0}),
                        DeformationField::radial_bump(1, {0.45, 0.0}, 0.35, 1.0)}) {
    const auto rep = derivative_report(m, bumpy_1d(2.0), f, {});
    ASSERT_TRUE(rep.converged);
    EXPECT_NEAR(rep.value_general, rep.fd_value, 0.05 * std::abs(rep.fd_value)) << f.name();
  }
}

TEST(Derivative, MatchesFiniteDifferences2D) {
  const Mesh m = unit_square(32);
  for (const auto& f : {kStream, kRotation}) {
    const auto rep = derivative_report(m, bumpy_2d(2.0), f, {});
    ASSERT_TRUE(rep.converged);
    EXPECT_NEAR(rep.value_divfree, rep.fd_value, 0.05 * std::abs(rep.fd_value)) << f.name();
    EXPECT_EQ(rep.samples.size(), 3u);
    EXPECT_EQ(rep.samples[1].second, rep.lambda0);
  }
}

TEST(Derivative, RotationOfRadialDataIsStationary) {
  const Mesh m = unit_square(32);
  const Vec2 c(0.5, 0.5);
  const AnalyticProblem a{2.0, 2.0, [&](const Vec2& x) { return 1.0 + std::exp(-10 * (x - c).squaredNorm()); },
                          [&](const Vec2& x) { return 4.0 * (x - c).squaredNorm(); }};
  const auto rot = DeformationField::rotation(c, 0.15, 0.4);
  const auto rep = derivative_report(m, a, rot, {});
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(std::abs(rep.fd_value), 1e-4);
}

TEST(Derivative, CellFieldTransportPath) {
  const Mesh m = unit_square(32);
  const ProblemData d = bumpy_2d(2.0).sample(m);
  const FiniteDifference fd = fd_derivative(m, d, kStream, 0.05, {}, FlowConfig::for_mesh(m));
  EXPECT_TRUE(fd.converged);
  EXPECT_TRUE(std::isfinite(fd.central));
}

TEST(Derivative, OneSidedQuotientsAgreeAfterExtrapolation) {
  const Mesh m = unit_square(32);
  DerivativeOptions opts;
  opts.richardson = true;
  const auto rep = derivative_report(m, bumpy_2d(2.0), kStream, {}, {}, opts);
  ASSERT_TRUE(rep.converged);
  EXPECT_FALSE(rep.one_sided_mismatch);
  EXPECT_EQ(rep.samples.size(), 5u);
  for (std::size_t k = 1; k < rep.samples.size(); ++k) EXPECT_LT(rep.samples[k - 1].first, rep.samples[k].first);
  EXPECT_NEAR(rep.fd_richardson, rep.fd_value, 0.01 * std::abs(rep.fd_value));
}
