#include <gtest/gtest.h>

#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "isolab/sampling.hpp"
#include "isolab/transport.hpp"

using namespace isolab;

namespace {

const Complex I{0.0, 1.0};

CMatrix eigen_exp(const CMatrix& a) {
  Eigen::Matrix2cd m;
  m << a(0, 0), a(0, 1), a(1, 0), a(1, 1);
  const Eigen::Matrix2cd e = m.exp();
  return CMatrix{{e(0, 0), e(0, 1)}, {e(1, 0), e(1, 1)}};
}

FuchsianSystem single_pole(const CMatrix& b) {
  FuchsianSystem sys;
  sys.poles = {0.0};
  sys.residues = {b};
  return sys;
}

MonodromyRep fake_rep(std::vector<CMatrix> g) {
  MonodromyRep r;
  r.generators = std::move(g);
  for (std::size_t i = 0; i < r.generators.size(); ++i) r.order.push_back(i);
  return r;
}

}  // namespace

TEST(ContinueSolution, ZeroCoefficientKeepsInitialValue) {
  const CMatrix y0{{1.0, 2.0}, {0.5, 3.0}};
  const auto path = PathSpec::polyline({0.0, {1.0, 1.0}, {2.0, -1.0}});
  const auto y = continue_solution([](Complex) { return CMatrix::zero(2); }, path, y0, TransportOptions{});
  EXPECT_LE(norm(y - y0), 1e-15);
}

TEST(ContinueSolution, DiagonalPoleAroundUnitCircle) {
  const CMatrix b{{0.25, 0.0}, {0.0, -0.25}};
  const auto y = continue_solution(single_pole(b), PathSpec::circle(0.0, 1.0), CMatrix::identity(2), 1e-10);
  EXPECT_LE(norm(y - CMatrix{{I, 0.0}, {0.0, -I}}), 1e-8);
}

TEST(ContinueSolution, LiouvilleOnClosedLoops) {
  sampling::Rng rng(21);
  for (int k = 0; k < 10; ++k) {
    auto sys = sampling::random_sum_zero(rng, 3);
    for (auto& b : sys.residues) b += CMatrix::identity(2) * rng.in_box(0.3);
    const auto basis = LoopBasis::standard(sys.poles);
    for (const auto& loop : basis.loops) {
      const auto y = continue_solution(sys, loop, CMatrix::identity(2), 1e-10);
      EXPECT_LE(liouville_residual(sys, loop, CMatrix::identity(2), y), 1e-8);
    }
  }
}

TEST(ContinueSolution, ReversedPathInverts) {
  sampling::Rng rng(22);
  const auto sys = sampling::random_sum_zero(rng, 3);
  const auto basis = LoopBasis::standard(sys.poles);
  const auto& path = basis.loops[0];
  const auto forward = continue_solution(sys, path, CMatrix::identity(2), 1e-10);
  const auto back = continue_solution(sys, path.reversed(), CMatrix::identity(2), 1e-10);
  EXPECT_LE(norm(forward * back - CMatrix::identity(2)), 2e-10 * path.length() * (1.0 + norm(forward)));
}

TEST(ContinueSolution, ClearanceViolationReported) {
  const auto sys = single_pole(CMatrix{{0.25, 0.0}, {0.0, -0.25}});
  try {
    continue_solution(sys, PathSpec::polyline({{-1.0, 0.01}, {1.0, 0.01}}), CMatrix::identity(2), 1e-10, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClearanceViolation);
  }
}

TEST(ContinueSolution, HomotopicLoopsAgree) {
  sampling::Rng rng(23);
  const auto sys = sampling::random_sum_zero(rng, 3);
  const Complex a = sys.poles[0];
  const double r = 0.5 * LoopBasis::default_radius(sys.poles, 0);
  const auto circle = PathSpec::circle(a, r, -0.75 * std::numbers::pi);
  const Complex c = a + r * Complex(-1.0, -1.0) / std::sqrt(2.0);
  const double s = r * std::sqrt(2.0);
  const auto square = PathSpec::polyline({c, c + s, c + s + I * s, c + I * s, c});
  const auto g1 = continue_solution(sys, circle, CMatrix::identity(2), 1e-10);
  const auto g2 = continue_solution(sys, square, CMatrix::identity(2), 1e-10);
  EXPECT_LE(norm(g1 - g2), 1e-6);
}

TEST(LoopBasis, WindingNumbers) {
  sampling::Rng rng(24);
  const auto sys = sampling::random_sum_zero(rng, 4);
  const auto basis = LoopBasis::standard(sys.poles);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(basis.loops[i].winding_number(sys.poles[j]), i == j ? 1 : 0);
  EXPECT_GT(basis.clearance, 0.0);
}

TEST(Monodromy, CommutingResiduesGiveExponentials) {
  sampling::Rng rng(25);
  const CMatrix d = sampling::residue_with_exponent(rng, 1.0);
  FuchsianSystem sys;
  sys.poles = {{-0.8, 0.1}, {0.7, 0.4}, {0.1, -0.9}};
  sys.residues = {d * Complex(0.2, 0.05), d * Complex(-0.35, 0.1), d * Complex(0.15, -0.15)};
  sys.validate();
  const auto rep = monodromy(sys, LoopBasis::standard(sys.poles), 1e-10);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(norm(rep.generators[k] - eigen_exp(sys.residues[k] * kTwoPiI)), 1e-7);
}

TEST(Monodromy, SingleFinitePole) {
  const CMatrix b{{0.1, 0.3}, {0.2, -0.1}};
  const auto sys = single_pole(b);
  const auto rep = monodromy(sys, LoopBasis::standard(sys.poles), 1e-10);
  EXPECT_LE(norm(rep.generators[0] - eigen_exp(b * kTwoPiI)), 1e-7);
}

TEST(Monodromy, RelationHolds) {
  sampling::Rng rng(26);
  for (int k = 0; k < 10; ++k) {
    const auto sys = sampling::random_sum_zero(rng, 3 + k % 2);
    const auto rep = monodromy(sys, LoopBasis::standard(sys.poles), 1e-10);
    EXPECT_LE(rep.relation_residual(), 1e-7);
    for (double l : rep.liouville) EXPECT_LE(l, 1e-8);
  }
}

TEST(Monodromy, ExplicitBasePointAndShapeMismatch) {
  sampling::Rng rng(27);
  const auto sys = sampling::random_sum_zero(rng, 3);
  const auto basis = LoopBasis::standard(sys.poles, Complex{0.0, -3.0});
  EXPECT_LE(monodromy(sys, basis, 1e-10).relation_residual(), 1e-7);
  auto small = sys;
  small.poles.pop_back();
  small.residues.pop_back();
  EXPECT_THROW(monodromy(small, basis, 1e-10), Error);
}

TEST(Fingerprint, SelfAndConjugate) {
  sampling::Rng rng(28);
  std::vector<CMatrix> g;
  for (int k = 0; k < 3; ++k) g.push_back(sampling::random_matrix(rng, 1.0));
  const auto r = fake_rep(g);
  EXPECT_EQ(rep_fingerprint_distance(r, r), 0.0);
  const CMatrix c = sampling::residue_with_exponent(rng, 0.7) + CMatrix::identity(2);
  std::vector<CMatrix> h;
  for (const auto& x : g) h.push_back(inverse(c) * x * c);
  EXPECT_LE(rep_fingerprint_distance(r, fake_rep(h)), 1e-10);
  EXPECT_THROW(rep_fingerprint_distance(r, fake_rep({g[0]})), Error);
}

TEST(IsSmaller, Counts) {
  sampling::Rng rng(29);
  const auto id = CMatrix::identity(2);
  EXPECT_EQ(is_smaller(fake_rep({id, id, id})), 3u);
  std::vector<CMatrix> generic;
  for (int k = 0; k < 3; ++k) generic.push_back(sampling::random_matrix(rng, 1.0));
  EXPECT_EQ(is_smaller(fake_rep(generic)), 0u);
  generic[1] = -id;
  EXPECT_EQ(is_smaller(fake_rep(generic)), 1u);
}
