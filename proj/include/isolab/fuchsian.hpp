#pragma once

// Exponents of Fuchsian systems and the reduction of a 2x2 system to a scalar
// second-order equation w'' + p w' + q w = 0 through the gauge
// y' = Gamma y, Gamma = [[1, 0], [b11, b12]].

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "isolab/algebra.hpp"
#include "isolab/rational.hpp"
#include "isolab/system.hpp"
#include "isolab/transport.hpp"

namespace isolab {

/// Sorted eigenvalues of B_i.
inline std::array<Complex, 2> exponents(const FuchsianSystem& sys, std::size_t i) {
  if (i >= sys.size()) throw Error(ErrorCode::InvalidArgument, "pole index out of range");
  if (sys.dim() != 2) throw Error(ErrorCode::DimensionUnsupported, "exponents for p = 2");
  const auto ev = eigenvalues(sys.residues[i]);
  return {ev[0], ev[1]};
}

/// Numerator of the (0,1) entry of the coefficient matrix over prod (z - a_i):
/// sum_i b_i prod_{j != i} (z - a_j). Optional shifts do not affect it.
inline Polynomial upper_right_numerator(const FuchsianSystem& sys) {
  Polynomial total({0.0});
  for (std::size_t i = 0; i < sys.size(); ++i) {
    Polynomial term({sys.residues[i](0, 1)});
    for (std::size_t j = 0; j < sys.size(); ++j)
      if (j != i) term = term * Polynomial({-sys.poles[j], 1.0});
    total = total + term;
  }
  return total;
}

/// Numerical degree: highest coefficient above rel_tol * max |c|.
inline int numerical_degree(const Polynomial& p, double rel_tol = 1e-12) {
  const double scale = p.max_abs_coeff();
  for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k)
    if (std::abs(p.coeff(k)) > rel_tol * scale) return k;
  return -1;
}

struct ScalarEquation {
  RationalFunction p;
  RationalFunction q;
  std::vector<Complex> singular_points;  // poles of the system
  std::vector<Complex> apparent_points;  // zeros of the upper-right numerator
  std::vector<Complex> shifts;           // scalar gauge B_i -> B_i + s_i I applied
  bool degenerate = false;               // apparent points collide with each other or a pole

  /// Companion matrix [[0, 1], [-q, -p]] at z.
  CMatrix companion(Complex z) const { return CMatrix{{0.0, 1.0}, {-q(z), -p(z)}}; }

  std::vector<Complex> all_singular_points() const {
    std::vector<Complex> s = singular_points;
    s.insert(s.end(), apparent_points.begin(), apparent_points.end());
    return s;
  }
};

inline constexpr double kApparentCollision = 1e-6;

/// Reduce a 2x2 Fuchsian system to the scalar equation satisfied by the first
/// solution component. `shifts` (one per pole, or empty) apply the scalar gauge
/// y -> prod (z - a_i)^{s_i} y first, i.e. B_i -> B_i + s_i I.
inline ScalarEquation reduce_to_scalar(const FuchsianSystem& sys,
                                       std::span<const Complex> shifts = {}) {
  if (sys.dim() != 2) throw Error(ErrorCode::DimensionUnsupported, "scalar reduction for p = 2");
  if (!shifts.empty() && shifts.size() != sys.size()) {
    throw Error(ErrorCode::ShapeMismatch, "one shift per pole expected");
  }
  ScalarEquation eq;
  eq.singular_points = sys.poles;
  eq.shifts.assign(shifts.begin(), shifts.end());

  const Polynomial numer = upper_right_numerator(sys);
  double scale = 1.0;
  for (const auto& b : sys.residues) scale = std::max(scale, norm(b));
  if (numer.max_abs_coeff() <= 1e-12 * scale) {
    throw Error(ErrorCode::ReducibleSystem, "upper-right entry vanishes identically");
  }
  const int degree = numerical_degree(numer);
  eq.apparent_points = polynomial_roots(numer, degree);

  for (std::size_t j = 0; j < eq.apparent_points.size(); ++j) {
    for (std::size_t k = j + 1; k < eq.apparent_points.size(); ++k)
      if (std::abs(eq.apparent_points[j] - eq.apparent_points[k]) < kApparentCollision)
        eq.degenerate = true;
    for (const auto& a : sys.poles)
      if (std::abs(eq.apparent_points[j] - a) < kApparentCollision) eq.degenerate = true;
  }

  const std::size_t n = sys.size();
  std::vector<Complex> c11(n), c12(n), c21(n), c22(n), ctr(n), ones(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex s = shifts.empty() ? Complex{} : shifts[i];
    const CMatrix& b = sys.residues[i];
    c11[i] = b(0, 0) + s;
    c12[i] = b(0, 1);
    c21[i] = b(1, 0);
    c22[i] = b(1, 1) + s;
    ctr[i] = c11[i] + c22[i];
  }
  const auto b11 = RationalFunction::simple_fractions(sys.poles, c11);
  const auto b12 = RationalFunction::simple_fractions(sys.poles, c12);
  const auto b21 = RationalFunction::simple_fractions(sys.poles, c21);
  const auto tr = RationalFunction::simple_fractions(sys.poles, ctr);
  // b12'/b12 = sum_j 1/(z - u_j) - sum_i 1/(z - a_i)
  std::vector<Complex> ones_u(eq.apparent_points.size(), 1.0);
  const auto log_deriv = RationalFunction::simple_fractions(eq.apparent_points, ones_u) -
                         RationalFunction::simple_fractions(sys.poles, ones);

  eq.p = -(log_deriv + tr);
  eq.q = -b11.derivative() - b11 * b11 - b12 * b21 + b11 * log_deriv + b11 * tr;
  return eq;
}

/// Roots of rho^2 + (p_{-1} - 1) rho + q_{-2} = 0 at a finite point, sorted.
inline std::array<Complex, 2> indicial_roots(const ScalarEquation& eq, Complex point) {
  const Complex p1 = eq.p.coefficient(point, 1);
  const Complex q2 = eq.q.coefficient(point, 2);
  auto r = detail::quadratic_eigenvalues(1.0 - p1, q2);
  if (detail::eigen_less(r[1], r[0])) std::swap(r[0], r[1]);
  return r;
}

/// Roots at infinity for w ~ z^{-rho}: rho^2 + (1 - p_inf) rho + q_inf = 0
/// with p ~ p_inf / z and q ~ q_inf / z^2.
inline std::array<Complex, 2> indicial_roots_at_infinity(const ScalarEquation& eq) {
  const Complex pinf = eq.p.coefficient_at_infinity(1);
  const Complex qinf = eq.q.coefficient_at_infinity(2);
  auto r = detail::quadratic_eigenvalues(pinf - 1.0, qinf);
  if (detail::eigen_less(r[1], r[0])) std::swap(r[0], r[1]);
  return r;
}

/// Largest violation of the Fuchs criterion: coefficients beyond pole order 1
/// in p and 2 in q at every stored pole, plus the polynomial tails and the
/// 1/z term of q at infinity.
inline double fuchs_criterion_defect(const ScalarEquation& eq) {
  double d = 0.0;
  for (const auto& part : eq.p.parts())
    for (int k = 2; k <= static_cast<int>(part.coeffs.size()); ++k) d = std::max(d, std::abs(part.coeff(k)));
  for (const auto& part : eq.q.parts())
    for (int k = 3; k <= static_cast<int>(part.coeffs.size()); ++k) d = std::max(d, std::abs(part.coeff(k)));
  d = std::max(d, eq.p.tail().max_abs_coeff());
  d = std::max(d, eq.q.tail().max_abs_coeff());
  d = std::max(d, std::abs(eq.q.coefficient_at_infinity(1)));
  return d;
}

/// Exponent data in Riemann-scheme form: pole i carries (0, theta_i) up to a
/// common shift, infinity carries (alpha, alpha + theta_inf).
struct FuchsExponents {
  std::vector<Complex> theta;
  Complex theta_inf{};
  Complex alpha{};
};

/// |sum theta_i + theta_inf + 2 alpha + 2n - (2n + 1)|.
inline double fuchs_relation_check(std::span<const Complex> theta, Complex theta_inf,
                                   Complex alpha, int n) {
  Complex lhs = theta_inf + 2.0 * alpha + 2.0 * n;
  for (const auto& t : theta) lhs += t;
  return std::abs(lhs - (2.0 * n + 1.0));
}

inline double fuchs_relation_check(const FuchsExponents& e, int n) {
  return fuchs_relation_check(e.theta, e.theta_inf, e.alpha, n);
}

/// theta_i = 2(m_i + rho_i), theta_inf = 2(m_inf + rho_inf) - 1.
inline FuchsExponents exponents_from_theta(const ThetaData& t) {
  FuchsExponents e;
  for (std::size_t k = 0; k < t.m.size(); ++k) e.theta.push_back(2.0 * t.shift(k));
  e.theta_inf = 2.0 * t.infinity_shift() - 1.0;
  return e;
}

/// alpha solving the Fuchs relation for the given theta values.
inline Complex fuchs_alpha(std::span<const Complex> theta, Complex theta_inf) {
  Complex s = theta_inf;
  for (const auto& t : theta) s += t;
  return 0.5 * (1.0 - s);
}

inline double fuchs_relation_check(const ThetaData& t, Complex alpha, int n) {
  const auto e = exponents_from_theta(t);
  return fuchs_relation_check(e.theta, e.theta_inf, alpha, n);
}

/// Exponent data read off the scalar equation: theta_i is the sum of the
/// indicial roots at a_i; at infinity alpha is the smaller root.
inline FuchsExponents scalar_exponents(const ScalarEquation& eq) {
  FuchsExponents e;
  for (const auto& a : eq.singular_points) {
    const auto r = indicial_roots(eq, a);
    e.theta.push_back(r[0] + r[1]);
  }
  const auto r = indicial_roots_at_infinity(eq);
  e.alpha = r[0];
  e.theta_inf = r[1] - r[0];
  return e;
}

struct ScalarMonodromyOptions {
  double tol = 1e-10;
  std::optional<double> radius;
};

/// 2x2 monodromy of the companion system around `point` (counterclockwise
/// circle starting at point + r, Y(start) = I).
inline CMatrix scalar_monodromy_at(const ScalarEquation& eq, Complex point,
                                   const ScalarMonodromyOptions& opt = {}) {
  std::vector<Complex> others;
  for (const auto& s : eq.all_singular_points())
    if (std::abs(s - point) > 1e-12) others.push_back(s);
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& s : others) nearest = std::min(nearest, std::abs(s - point));
  double radius = std::min(0.4 * nearest, 0.25);
  if (opt.radius) {
    radius = *opt.radius;
    if (nearest - radius < 0.5 * radius) {
      throw Error(ErrorCode::LoopTooClose, "loop of radius " + std::to_string(radius) +
                                               " comes within " + std::to_string(nearest - radius) +
                                               " of another singular point");
    }
  }
  const PathSpec loop = PathSpec::circle(point, radius);
  TransportOptions topt{opt.tol, others, 0.5 * radius};
  return continue_solution([&](Complex z) { return eq.companion(z); }, loop,
                           CMatrix::identity(2), topt);
}

}  // namespace isolab
