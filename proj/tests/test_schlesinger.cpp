#include <gtest/gtest.h>

#include <numbers>

#include "isolab/sampling.hpp"
#include "isolab/schlesinger.hpp"
#include "isolab/transport.hpp"

using namespace isolab;

namespace {

constexpr double kPi = std::numbers::pi;
const Complex I{0.0, 1.0};

FuchsianSystem commuting_three(sampling::Rng& rng) {
  const CMatrix d = sampling::residue_with_exponent(rng, 1.0);
  FuchsianSystem sys;
  sys.poles = {{-0.8, 0.1}, {0.7, 0.4}, {0.1, -0.9}};
  sys.residues = {d * Complex(0.2, 0.05), d * Complex(-0.35, 0.1), d * Complex(0.15, -0.15)};
  sys.validate();
  return sys;
}

double max_diff(const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, norm(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(SchlesingerRhs, HandEvaluatedCommutator) {
  FuchsianSystem sys;
  sys.poles = {0.0, 1.0};
  sys.residues = {CMatrix{{0.0, 1.0}, {0.0, 0.0}}, CMatrix{{0.0, 0.0}, {1.0, 0.0}}};
  const std::vector<Complex> da{1.0, 0.0};
  const auto d = schlesinger_rhs(sys, da);
  // -[B1, B2] / (a1 - a2) * (da1 - da2) with a1 - a2 = -1.
  EXPECT_LE(norm(d[0] - CMatrix{{1.0, 0.0}, {0.0, -1.0}}), 1e-15);
  EXPECT_LE(norm(d[0] + d[1]), 1e-15);
}

TEST(SchlesingerRhs, SignPreservesMonodromyToSecondOrder) {
  sampling::Rng rng(41);
  const auto sys = sampling::random_sum_zero(rng, 4);
  const std::vector<Complex> da{{0.3, 0.2}, {-0.1, 0.4}, {0.2, -0.3}, 0.0};
  const auto d = schlesinger_rhs(sys, da);
  const auto basis = LoopBasis::standard(sys.poles);
  const auto r0 = monodromy(sys, basis, 1e-12);
  auto drift = [&](double eps, double sign) {
    FuchsianSystem moved = sys;
    for (std::size_t i = 0; i < 4; ++i) {
      moved.poles[i] += eps * da[i];
      moved.residues[i] += d[i] * (sign * eps);
    }
    return rep_fingerprint_distance(r0, monodromy(moved, basis.transported(moved.poles), 1e-12));
  };
  // Halving eps divides the drift by ~4 with the implemented sign, by ~2 with the other.
  const double right = drift(1e-3, 1.0) / drift(5e-4, 1.0);
  const double wrong = drift(1e-3, -1.0) / drift(5e-4, -1.0);
  EXPECT_NEAR(right, 4.0, 0.5);
  EXPECT_NEAR(wrong, 2.0, 0.3);
}

TEST(SchlesingerRhs, CommutingAndZeroResidues) {
  sampling::Rng rng(42);
  const auto sys = commuting_three(rng);
  const std::vector<Complex> da{1.0, I, -1.0};
  for (const auto& m : schlesinger_rhs(sys, da)) EXPECT_LE(norm(m), 1e-15);
  FuchsianSystem zero = sys;
  for (auto& b : zero.residues) b = CMatrix::zero(2);
  for (const auto& m : schlesinger_rhs(zero, da)) EXPECT_EQ(norm(m), 0.0);
  EXPECT_EQ(tau_increment(zero, da), Complex(0.0));
}

TEST(SchlesingerRhs, PoleCollision) {
  FuchsianSystem sys;
  sys.poles = {0.0, 1e-13};
  sys.residues = {CMatrix::zero(2), CMatrix::zero(2)};
  const std::vector<Complex> da{1.0, 0.0};
  try {
    schlesinger_rhs(sys, da);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoleCollision);
  }
  EXPECT_THROW(tau_increment(sys, da), Error);
}

TEST(ParamPath, ValidationAndSeparation) {
  auto path = ParamPath::straight({-1.0, 1.0}, {1.0, -1.0});
  EXPECT_NEAR(path.min_pair_distance(), 0.0, 1e-15);
  try {
    path.validate(2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoleCollision);
  }
  path.blowup_probe = true;
  EXPECT_NO_THROW(path.validate(2));
  EXPECT_THROW(path.validate(3), Error);
  EXPECT_NEAR(ParamPath::straight({0.0, 1.0}, {I, 1.0}).length(), 1.0, 1e-15);
}

TEST(Flow, CommutingFamilyIsConstant) {
  sampling::Rng rng(43);
  const auto sys = commuting_three(rng);
  auto end = sys.poles;
  end[0] += Complex(0.3, 0.2);
  end[1] += Complex(-0.2, 0.5);
  const auto path = ParamPath::straight(sys.poles, end);
  const auto st = flow(SchlesingerState{sys}, path);
  EXPECT_LE(max_diff(st.system.residues, sys.residues), 1e-9);
  EXPECT_LE(std::abs(st.ln_tau - commuting_ln_tau_increment(sys.residues, path)), 1e-9);
  const auto oracle0 = commuting_oracle(sys.residues, sys.poles, 3.0);
  const auto oracle1 = commuting_oracle(sys.residues, end, 3.0);
  EXPECT_LE(std::abs(st.ln_tau - (oracle1.ln_tau - oracle0.ln_tau)), 1e-9);
}

TEST(Flow, ZeroResiduesUnchanged) {
  FuchsianSystem sys;
  sys.poles = {0.0, 1.0, I};
  sys.residues.assign(3, CMatrix::zero(2));
  const auto st = flow(SchlesingerState{sys}, ParamPath::straight(sys.poles, {0.2, 1.0, 2.0 * I}));
  EXPECT_EQ(max_diff(st.system.residues, sys.residues), 0.0);
  EXPECT_EQ(st.ln_tau, Complex(0.0));
}

TEST(Flow, GenericIsomonodromy) {
  sampling::Rng rng(44);
  const auto sys = sampling::random_sum_zero(rng, 4);
  auto end = sys.poles;
  end[0] += Complex(0.1, 0.05);
  end[2] += Complex(-0.05, 0.1);
  const auto st = flow(SchlesingerState{sys}, ParamPath::straight(sys.poles, end));
  const auto basis = LoopBasis::standard(sys.poles);
  const auto r0 = monodromy(sys, basis, 1e-10);
  const auto r1 = monodromy(st.system, basis.transported(end), 1e-10);
  EXPECT_LE(rep_fingerprint_distance(r0, r1), 1e-6);
  EXPECT_LE(norm(st.system.residue_sum() - sys.residue_sum()), 1e-9);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto e0 = eigenvalues(sys.residues[i]), e1 = eigenvalues(st.system.residues[i]);
    EXPECT_LE(std::abs(e0[0] - e1[0]) + std::abs(e0[1] - e1[1]), 1e-8);
  }
}

TEST(Flow, LnTauClosedOnContractibleLoop) {
  sampling::Rng rng(45);
  const auto sys = sampling::random_sum_zero(rng, 4);
  auto p1 = sys.poles, p2 = sys.poles;
  p1[0] += Complex(0.2, 0.0);
  p1[1] += Complex(0.0, 0.15);
  p2[0] += Complex(0.1, 0.2);
  p2[3] += Complex(-0.15, 0.1);
  ParamPath loop{{sys.poles, p1, p2, sys.poles}};
  FlowOptions opt;
  opt.tol = 1e-12;
  const auto st = flow(SchlesingerState{sys}, loop, opt);
  EXPECT_LE(std::abs(st.ln_tau), 1e-7);
  EXPECT_LE(max_diff(st.system.residues, sys.residues), 1e-8);
}

TEST(Flow, BlowupCeiling) {
  sampling::Rng rng(46);
  const auto sys = sampling::random_sum_zero(rng, 3);
  FlowOptions opt;
  opt.ceiling = 0.5 * SchlesingerState{sys}.max_residue_norm();
  auto end = sys.poles;
  end[0] += 0.1;
  try {
    flow(SchlesingerState{sys}, ParamPath::straight(sys.poles, end), opt);
    FAIL();
  } catch (const BlowupError& e) {
    EXPECT_EQ(e.code(), ErrorCode::BlowupDetected);
    EXPECT_GT(e.last_state().max_residue_norm(), opt.ceiling);
    EXPECT_GT(e.arclength(), 0.0);
  }
}

TEST(Flow, RejectsPathFromElsewhere) {
  sampling::Rng rng(47);
  const auto sys = sampling::random_sum_zero(rng, 3);
  auto from = sys.poles;
  from[0] += 0.5;
  EXPECT_THROW(flow(SchlesingerState{sys}, ParamPath::straight(from, sys.poles)), Error);
}

TEST(Lemma1, ZeroResidues) {
  FuchsianSystem sys;
  sys.poles = {0.3 + 0.5 * I, 0.0, 1.0};
  sys.residues.assign(3, CMatrix::zero(2));
  sys.normalization = Normalization::DiagonalK;
  EXPECT_EQ(lemma1_residual(SchlesingerState{sys}, 1e-3).residual, 0.0);
}

TEST(Lemma1, HalfCaseDerivativeVanishes) {
  sampling::Rng rng(48);
  const auto sys = sampling::random_diagonal_k(rng, {0.3 + 0.5 * I, 0.0, 1.0, -0.7 + 0.4 * I}, 0.5);
  const SchlesingerState st{sys};
  EXPECT_LE(lemma1_residual(st, 1e-3).residual, 1e-6 + 1e-7);
  auto moved = sys.poles;
  moved[0] += 0.2;
  EXPECT_LE(std::abs(weighted_upper_right(flow_to(st, moved).system) - weighted_upper_right(sys)), 1e-8);
}

TEST(Lemma1, SecondOrderConvergence) {
  sampling::Rng rng(49);
  const auto sys = sampling::random_diagonal_k(rng, sampling::random_poles(rng, 4, 1.0, 0.5),
                                               sampling::random_exponent(rng));
  const SchlesingerState st{sys};
  const double r3 = lemma1_residual(st, 1e-3).residual;
  const double r4 = lemma1_residual(st, 1e-4).residual;
  EXPECT_GE(r3 / r4, 80.0);
  EXPECT_LE(r3 / r4, 120.0);
  EXPECT_LE(r4, 1e-7);
}

TEST(Lemma1, RequiresDiagonalK) {
  sampling::Rng rng(50);
  EXPECT_THROW(lemma1_residual(SchlesingerState{sampling::random_sum_zero(rng, 3)}, 1e-3), Error);
}

TEST(CommutingOracle, DiagonalTauOnRecordedBranch) {
  const CMatrix b{{0.25, 0.0}, {0.0, -0.25}};
  const std::vector<CMatrix> res{b, -b};
  const std::vector<Complex> poles{0.0, 1.0};
  const auto o = commuting_oracle(res, poles, 2.0 * I);
  // (a1 - a2)^{tr B1 B2} = (-1)^{-1/8} with the principal log.
  EXPECT_LE(std::abs(o.tau - std::exp(-I * kPi / 8.0)), 1e-15);
  const Complex z = 2.0 * I;
  const CMatrix expected{{std::pow(z, 0.25) * std::pow(z - 1.0, -0.25), 0.0},
                         {0.0, std::pow(z, -0.25) * std::pow(z - 1.0, 0.25)}};
  EXPECT_LE(norm(o.fundamental - expected), 1e-14);
}

TEST(CommutingOracle, SolvesTheSystem) {
  sampling::Rng rng(51);
  const auto sys = commuting_three(rng);
  const Complex z0{2.0, 2.0}, z1{2.5, 1.0};
  const auto y0 = commuting_oracle(sys.residues, sys.poles, z0).fundamental;
  const auto y1 = continue_solution(sys, PathSpec::polyline({z0, z1}), y0, 1e-12);
  EXPECT_LE(norm(y1 - commuting_oracle(sys.residues, sys.poles, z1).fundamental), 1e-9);
}

TEST(CommutingOracle, RejectsNonCommuting) {
  sampling::Rng rng(52);
  const auto sys = sampling::random_sum_zero(rng, 3);
  try {
    commuting_oracle(sys.residues, sys.poles, 3.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotCommuting);
  }
}

TEST(ProbeBlowup, RegularPathReportsNoBlowup) {
  sampling::Rng rng(53);
  const auto sys = sampling::random_sum_zero(rng, 3);
  auto end = sys.poles;
  end[0] += 0.1;
  const auto p = probe_blowup(SchlesingerState{sys}, ParamPath::straight(sys.poles, end));
  EXPECT_FALSE(p.blew_up);
}
