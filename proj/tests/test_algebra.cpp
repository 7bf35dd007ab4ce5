#include <gtest/gtest.h>

#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "isolab/algebra.hpp"
#include "isolab/sampling.hpp"

using namespace isolab;

namespace {

constexpr double kPi = std::numbers::pi;
const Complex I{0.0, 1.0};

Eigen::Matrix2cd to_eigen(const CMatrix& a) {
  Eigen::Matrix2cd m;
  m << a(0, 0), a(0, 1), a(1, 0), a(1, 1);
  return m;
}

double eigen_diff(const CMatrix& a, const Eigen::Matrix2cd& b) {
  return (to_eigen(a) - b).cwiseAbs().maxCoeff();
}

CMatrix reconstruct(const EigenData& d) { return d.S * d.J * inverse(d.S); }

}  // namespace

TEST(Eig, IdentityIsDiagonalizable) {
  const auto d = eig(CMatrix::identity(2));
  EXPECT_EQ(d.values[0], Complex(1.0));
  EXPECT_EQ(d.values[1], Complex(1.0));
  EXPECT_TRUE(d.diagonalizable);
}

TEST(Eig, NilpotentIsJordanBlock) {
  const CMatrix n{{0.0, 1.0}, {0.0, 0.0}};
  const auto d = eig(n);
  EXPECT_EQ(d.values[0], Complex(0.0));
  EXPECT_EQ(d.values[1], Complex(0.0));
  EXPECT_FALSE(d.diagonalizable);
  EXPECT_LE(norm(reconstruct(d) - n), 1e-14);
}

TEST(Eig, RandomReconstruction) {
  sampling::Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const CMatrix a = sampling::random_matrix(rng, 3.0);
    const auto d = eig(a);
    EXPECT_LE(norm(reconstruct(d) - a), 1e-12 * (1.0 + norm(a)));
    EXPECT_FALSE(detail::eigen_less(d.values[1], d.values[0]));
  }
}

TEST(Eig, GeneralDimensionsMatchEigen) {
  sampling::Rng rng(2);
  for (int p : {3, 4}) {
    CMatrix a(p);
    Eigen::MatrixXcd e(p, p);
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) e(r, c) = a(r, c) = rng.in_box(1.0);
    const auto d = eig(a);
    EXPECT_LE(norm(reconstruct(d) - a), 1e-12 * (1.0 + norm(a)));
    const auto ref = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(e).eigenvalues();
    for (const auto& mu : d.values) {
      double best = 1e300;
      for (int i = 0; i < p; ++i) best = std::min(best, std::abs(ref(i) - mu));
      EXPECT_LE(best, 1e-12);
    }
  }
}

TEST(Eig, RejectsLargeDimension) {
  EXPECT_THROW(CMatrix(5), Error);
  try {
    CMatrix(5);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionUnsupported);
  }
}

TEST(MatExp, TrivialCases) {
  EXPECT_LE(norm(mat_exp(CMatrix::zero(2)) - CMatrix::identity(2)), 1e-15);
  const CMatrix d{{I * kPi, 0.0}, {0.0, -I * kPi}};
  EXPECT_LE(norm(mat_exp(d) + CMatrix::identity(2)), 1e-15);
  const CMatrix n{{0.0, 1.0}, {0.0, 0.0}};
  EXPECT_LE(norm(mat_exp(n) - CMatrix{{1.0, 1.0}, {0.0, 1.0}}), 1e-15);
}

TEST(MatExp, MatchesEigenMatrixFunctions) {
  sampling::Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const CMatrix a = sampling::random_matrix(rng, 2.5);
    const Eigen::Matrix2cd ref = to_eigen(a).exp();
    EXPECT_LE(eigen_diff(mat_exp(a), ref), 1e-12 * (1.0 + ref.cwiseAbs().maxCoeff()));
  }
}

TEST(MatExp, InverseProperty) {
  sampling::Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const CMatrix a = sampling::random_matrix(rng, 5.0);
    EXPECT_LE(norm(mat_exp(a) * mat_exp(-a) - CMatrix::identity(2)), 1e-10);
  }
}

TEST(MatExp, CommutingSumProperty) {
  sampling::Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const CMatrix base = sampling::random_matrix(rng, 1.0);
    const CMatrix a = base * rng.in_box(1.0) + CMatrix::identity(2) * rng.in_box(1.0);
    const CMatrix b = base * rng.in_box(1.0);
    ASSERT_LE(norm(commutator(a, b)), 1e-14 * (1.0 + norm(a) * norm(b)) * 10);
    EXPECT_LE(norm(mat_exp(a + b) - mat_exp(a) * mat_exp(b)), 1e-10 * (1.0 + norm(mat_exp(a + b))));
  }
}

TEST(MatExp, NearlyDegenerateEigenvalues) {
  const CMatrix a{{0.3, 1.0}, {1e-14, 0.3}};
  const Eigen::Matrix2cd ref = to_eigen(a).exp();
  EXPECT_LE(eigen_diff(mat_exp(a), ref), 1e-13);
}

TEST(MatLog, TrivialCases) {
  EXPECT_LE(norm(mat_log_normalized(CMatrix::identity(2))), 1e-15);
  const CMatrix half = mat_log_normalized(-CMatrix::identity(2));
  EXPECT_LE(norm(half - CMatrix::identity(2) * 0.5), 1e-15);
  const CMatrix unipotent{{1.0, 1.0}, {0.0, 1.0}};
  const CMatrix expected = CMatrix{{0.0, 1.0}, {0.0, 0.0}} * (1.0 / kTwoPiI);
  EXPECT_LE(norm(mat_log_normalized(unipotent) - expected), 1e-15);
}

TEST(MatLog, SingularRejected) {
  try {
    mat_log_normalized(CMatrix{{1.0, 0.0}, {0.0, 1e-15}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularMatrix);
  }
}

TEST(MatLog, BranchStripAndReconstruction) {
  sampling::Rng rng(6);
  for (int k = 0; k < 1000; ++k) {
    const CMatrix g = sampling::random_matrix(rng, rng.uniform(0.1, 5.0));
    if (std::abs(det(g)) < 1e-6) continue;
    const CMatrix e = mat_log_normalized(g);
    const Eigen::Matrix2cd ref = (to_eigen(e) * kTwoPiI).exp();
    EXPECT_LE(eigen_diff(g, ref), 1e-9 * (1.0 + norm(g)));
    for (const auto& mu : eigenvalues(e)) {
      EXPECT_GE(mu.real(), 0.0);
      EXPECT_LT(mu.real(), 1.0);
    }
  }
}

TEST(MatLog, CloseEigenvaluesAcrossCut) {
  // Eigenvalues on either side of the negative real axis.
  const CMatrix g{{std::polar(1.0, kPi - 1e-9), 0.3}, {0.0, std::polar(1.0, -kPi + 1e-9)}};
  const CMatrix e = mat_log_normalized(g);
  EXPECT_LE(eigen_diff(g, (to_eigen(e) * kTwoPiI).exp()), 1e-9);
}

TEST(MatPower, TrivialCases) {
  const CMatrix e{{0.3, 0.1}, {0.2, -0.3}};
  EXPECT_LE(norm(mat_power({2.0, 1.0}, CMatrix::zero(2)) - CMatrix::identity(2)), 1e-15);
  EXPECT_LE(norm(mat_power(1.0, e) - CMatrix::identity(2)), 1e-15);
  try {
    mat_power(0.0, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::ZeroBase);
  }
}

TEST(MatPower, FullCircleMultipliesByExp) {
  const CMatrix e{{0.3, 0.1}, {0.2, -0.3}};
  const Complex z{0.7, 0.4};
  const CMatrix before = mat_power(z, e);
  const CMatrix after = mat_power(z, e, std::log(z) + kTwoPiI);
  EXPECT_LE(norm(after - before * mat_exp(e * kTwoPiI)), 1e-13);
}
