#include <gtest/gtest.h>

#include "isolab/ode.hpp"

using namespace isolab;
using ode::Complex;

TEST(Integrate, ComplexExponential) {
  const Complex lambda{-0.3, 2.0};
  ode::State y{1.0};
  ode::Options opt;
  opt.tol = 1e-12;
  ode::integrate([&](double, std::span<const Complex> in, std::span<Complex> out) { out[0] = lambda * in[0]; },
                 0.0, 3.0, y, opt);
  EXPECT_LE(std::abs(y[0] - std::exp(lambda * 3.0)), 1e-10);
}

TEST(Integrate, ErrorScalesWithTolerance) {
  // y'' = -y as a first-order pair; exact solution (cos s, -sin s).
  auto rhs = [](double, std::span<const Complex> in, std::span<Complex> out) {
    out[0] = in[1];
    out[1] = -in[0];
  };
  double prev = 1.0;
  for (double tol : {1e-6, 1e-9, 1e-12}) {
    ode::State y{1.0, 0.0};
    ode::Options opt;
    opt.tol = tol;
    ode::integrate(rhs, 0.0, 10.0, y, opt);
    const double err = std::abs(y[0] - std::cos(10.0)) + std::abs(y[1] + std::sin(10.0));
    EXPECT_LE(err, 100.0 * tol * 10.0);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Integrate, ObserverStopsEarly) {
  ode::State y{0.0};
  ode::Options opt;
  opt.max_step = 0.1;
  const double reached = ode::integrate(
      [](double, std::span<const Complex>, std::span<Complex> out) { out[0] = 1.0; }, 0.0, 10.0, y, opt,
      nullptr, [](double s, const ode::State&) { return s < 1.0; });
  EXPECT_GE(reached, 1.0);
  EXPECT_LT(reached, 1.2);
  EXPECT_NEAR(y[0].real(), reached, 1e-12);
}

TEST(Integrate, StatsCounted) {
  ode::State y{1.0};
  ode::Stats stats;
  ode::integrate([](double, std::span<const Complex> in, std::span<Complex> out) { out[0] = in[0]; }, 0.0,
                 1.0, y, ode::Options{}, &stats);
  EXPECT_GT(stats.accepted, 0u);
  EXPECT_GE(stats.rhs_calls, 6 * stats.accepted + 1);
}

TEST(Integrate, SingularRhsAborts) {
  ode::State y{1.0};
  ode::Options opt;
  try {
    ode::integrate([](double s, std::span<const Complex> in, std::span<Complex> out) { out[0] = in[0] * in[0] / (1.0 - s) / (1.0 - s); },
                   0.0, 2.0, y, opt);
    FAIL() << "expected an abort";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StepUnderflow);
  }
}

TEST(Integrate, EmptyIntervalIsNoOp) {
  ode::State y{2.0};
  EXPECT_EQ(ode::integrate([](double, std::span<const Complex>, std::span<Complex> out) { out[0] = 1.0; }, 1.0,
                           1.0, y, ode::Options{}),
            1.0);
  EXPECT_EQ(y[0], Complex(2.0));
}
