#include <gtest/gtest.h>

#include <numbers>

#include "isolab/fuchsian.hpp"
#include "isolab/sampling.hpp"

using namespace isolab;

namespace {

// Residual of w'' + p w' + q w for w the first component of a solution of
// the (shifted) system through the vector y at z: w' = (B y)_1 and
// w'' = ((B' + B^2) y)_1.
Complex scalar_defect(const FuchsianSystem& sys, std::span<const Complex> shifts, const ScalarEquation& eq,
                      Complex z, Complex y0, Complex y1) {
  CMatrix b(2), db(2);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    CMatrix r = sys.residues[i];
    if (!shifts.empty()) r += CMatrix::identity(2) * shifts[i];
    b += r * (1.0 / (z - sys.poles[i]));
    db -= r * (1.0 / ((z - sys.poles[i]) * (z - sys.poles[i])));
  }
  const CMatrix b2 = db + b * b;
  const Complex w = y0;
  const Complex dw = b(0, 0) * y0 + b(0, 1) * y1;
  const Complex d2w = b2(0, 0) * y0 + b2(0, 1) * y1;
  return d2w + eq.p(z) * dw + eq.q(z) * w;
}

FuchsianSystem pvi_family(sampling::Rng& rng) {
  return sampling::random_pvi_system(rng, Complex{0.3, 0.7}, sampling::random_exponent(rng));
}

}  // namespace

TEST(Exponents, ZeroResidue) {
  FuchsianSystem sys;
  sys.poles = {0.0};
  sys.residues = {CMatrix::zero(2)};
  const auto e = exponents(sys, 0);
  EXPECT_EQ(e[0], Complex(0.0));
  EXPECT_EQ(e[1], Complex(0.0));
}

TEST(Exponents, DiagonalResidue) {
  FuchsianSystem sys;
  sys.poles = {0.0};
  sys.residues = {CMatrix{{1.3, 0.0}, {0.0, -1.3}}};
  const auto e = exponents(sys, 0);
  EXPECT_NEAR(std::abs(e[0] - Complex(-1.3)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(e[1] - Complex(1.3)), 0.0, 1e-15);
}

TEST(Exponents, TraceFreeSumToZero) {
  sampling::Rng rng(31);
  const auto sys = sampling::random_sum_zero(rng, 4);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto e = exponents(sys, i);
    EXPECT_LE(std::abs(e[0] + e[1]), 1e-12);
  }
  EXPECT_THROW(exponents(sys, 7), Error);
}

TEST(ThetaData, FromSystemMatches) {
  sampling::Rng rng(32);
  const auto sys = pvi_family(rng);
  const auto theta = ThetaData::from_system(sys);
  EXPECT_TRUE(theta.matches(sys));
  for (const auto& r : theta.rho) {
    EXPECT_GE(r.real(), 0.0);
    EXPECT_LT(r.real(), 1.0);
  }
  auto wrong = theta;
  wrong.rho[0] += 0.1;
  EXPECT_FALSE(wrong.matches(sys));
}

TEST(ReduceToScalar, DiagonalResiduesAreReducible) {
  FuchsianSystem sys;
  sys.poles = {Complex{0.3, 0.7}, 0.0, 1.0};
  sys.residues = {CMatrix{{0.2, 0.0}, {0.0, -0.2}}, CMatrix{{0.1, 0.0}, {0.0, -0.1}},
                  CMatrix{{-0.6, 0.0}, {0.0, 0.6}}};
  try {
    reduce_to_scalar(sys);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ReducibleSystem);
  }
}

TEST(ReduceToScalar, FirstComponentSolvesScalarEquation) {
  sampling::Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sys = trial % 2 ? pvi_family(rng) : sampling::random_sum_zero(rng, 4);
    const auto shifts = trial % 3 == 0 ? std::vector<Complex>{} : ThetaData::from_system(sys).shifts();
    const auto eq = reduce_to_scalar(sys, shifts);
    for (int k = 0; k < 5; ++k) {
      const Complex z = rng.in_box(2.0);
      const Complex y0 = rng.in_box(1.0), y1 = rng.in_box(1.0);
      const Complex scale = 1.0 + std::abs(eq.q(z) * y0) + std::abs(eq.p(z)) * (std::abs(y0) + std::abs(y1));
      EXPECT_LE(std::abs(scalar_defect(sys, shifts, eq, z, y0, y1)), 1e-10 * std::abs(scale));
    }
  }
}

TEST(ReduceToScalar, ApparentPointsAndFuchsCriterion) {
  sampling::Rng rng(34);
  const auto sys = pvi_family(rng);
  const auto theta = ThetaData::from_system(sys);
  const auto eq = reduce_to_scalar(sys, theta.shifts());
  ASSERT_EQ(eq.apparent_points.size(), 1u);
  EXPECT_FALSE(eq.degenerate);
  const auto r = indicial_roots(eq, eq.apparent_points[0]);
  EXPECT_LE(std::abs(r[0]), 1e-8);
  EXPECT_LE(std::abs(r[1] - 2.0), 1e-8);
  EXPECT_LE(fuchs_criterion_defect(eq), 1e-10);
  EXPECT_LE(fuchs_relation_check(scalar_exponents(eq), 1), 1e-8);
}

TEST(ReduceToScalar, ExponentsAtPolesAfterShift) {
  sampling::Rng rng(35);
  const auto sys = pvi_family(rng);
  const auto theta = ThetaData::from_system(sys);
  const auto eq = reduce_to_scalar(sys, theta.shifts());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto r = indicial_roots(eq, sys.poles[i]);
    const Complex s = theta.shift(i);
    // Exponents {0, 2 s} up to order.
    const double d = std::min(std::abs(r[0]) + std::abs(r[1] - 2.0 * s), std::abs(r[1]) + std::abs(r[0] - 2.0 * s));
    EXPECT_LE(d, 1e-8);
  }
}

TEST(FuchsRelation, Examples) {
  const std::vector<Complex> zeros(3, 0.0);
  EXPECT_EQ(fuchs_relation_check(zeros, 1.0, 0.0, 1), 0.0);
  const std::vector<Complex> halves(3, 0.5);
  EXPECT_LE(fuchs_relation_check(halves, 0.5, fuchs_alpha(halves, 0.5), 1), 1e-15);
  sampling::Rng rng(36);
  for (int k = 0; k < 100; ++k) {
    std::vector<Complex> th;
    for (int i = 0; i < 4; ++i) th.push_back(rng.in_box(2.0));
    const Complex inf = rng.in_box(2.0);
    EXPECT_LE(fuchs_relation_check(th, inf, fuchs_alpha(th, inf), 2), 1e-14);
  }
}

TEST(ScalarMonodromy, ApparentPointIsTrivial) {
  sampling::Rng rng(37);
  const auto sys = sampling::random_diagonal_k(rng, {Complex{0.4, 0.8}, Complex{1.6, -0.5}, 0.0, 1.0},
                                               sampling::random_exponent(rng));
  const auto eq = reduce_to_scalar(sys, ThetaData::from_system(sys).shifts());
  ASSERT_EQ(eq.apparent_points.size(), 2u);
  for (const auto& u : eq.apparent_points)
    EXPECT_LE(norm(scalar_monodromy_at(eq, u) - CMatrix::identity(2)), 1e-6);
}

TEST(ScalarMonodromy, RegularSingularEigenvalues) {
  sampling::Rng rng(38);
  const auto sys = pvi_family(rng);
  const auto eq = reduce_to_scalar(sys);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const Complex s = exponents(sys, i)[1];
    const auto ev = eigenvalues(scalar_monodromy_at(eq, sys.poles[i]));
    const Complex e1 = std::exp(kTwoPiI * s), e2 = std::exp(-kTwoPiI * s);
    const double d = std::min(std::abs(ev[0] - e1) + std::abs(ev[1] - e2), std::abs(ev[0] - e2) + std::abs(ev[1] - e1));
    EXPECT_LE(d, 1e-6);
  }
}

TEST(ScalarMonodromy, FreeEquationIsTrivial) {
  ScalarEquation eq;
  eq.singular_points = {0.0};
  EXPECT_LE(norm(scalar_monodromy_at(eq, 0.0) - CMatrix::identity(2)), 1e-12);
}

TEST(ScalarMonodromy, LoopTooClose) {
  ScalarEquation eq;
  eq.singular_points = {0.0, 1.0};
  try {
    scalar_monodromy_at(eq, 0.0, {1e-10, 0.8});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LoopTooClose);
  }
}
