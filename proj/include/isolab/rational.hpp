#pragma once

// Dense univariate polynomials and rational functions stored in pole-centered
// form: a list of poles with principal-part coefficients plus a polynomial
// tail. Products are expanded exactly by partial fractions, so no common
// denominators are ever formed.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "isolab/algebra.hpp"

namespace isolab {

/// Coefficients in ascending order: c[0] + c[1] z + ...
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {}

  static Polynomial constant(Complex v) { return Polynomial({v}); }
  /// prod (z - r_i)
  static Polynomial from_roots(std::span<const Complex> roots) {
    Polynomial p({1.0});
    for (const auto& r : roots) p = p * Polynomial({-r, 1.0});
    return p;
  }

  const std::vector<Complex>& coeffs() const noexcept { return c_; }
  std::size_t size() const noexcept { return c_.size(); }
  Complex coeff(std::size_t k) const noexcept { return k < c_.size() ? c_[k] : Complex{}; }

  /// Index of the highest non-zero coefficient, -1 for the zero polynomial.
  int degree() const noexcept {
    for (int k = static_cast<int>(c_.size()) - 1; k >= 0; --k)
      if (c_[k] != 0.0) return k;
    return -1;
  }

  double max_abs_coeff() const noexcept {
    double m = 0.0;
    for (const auto& v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  Complex operator()(Complex z) const noexcept {
    Complex acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
    return acc;
  }

  Polynomial derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<Complex> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Polynomial(std::move(d));
  }

  /// Coefficients of p(center + w) as a polynomial in w.
  Polynomial shifted(Complex center) const {
    std::vector<Complex> a = c_;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = n - 1; j > i; --j) a[j - 1] += center * a[j];
    return Polynomial(std::move(a));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<Complex> r(std::max(a.size(), b.size()));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = a.coeff(k) + b.coeff(k);
    return Polynomial(std::move(r));
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    std::vector<Complex> r(std::max(a.size(), b.size()));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = a.coeff(k) - b.coeff(k);
    return Polynomial(std::move(r));
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.size() == 0 || b.size() == 0) return {};
    std::vector<Complex> r(a.size() + b.size() - 1);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(r));
  }
  friend Polynomial operator*(Complex s, Polynomial p) {
    for (auto& v : p.c_) v *= s;
    return p;
  }

 private:
  std::vector<Complex> c_;
};

/// Roots of a polynomial of exact degree `degree` (leading coefficient c[degree]
/// must be non-zero). Companion-matrix eigenvalues polished by Newton.
inline std::vector<Complex> polynomial_roots(const Polynomial& p, int degree) {
  if (degree <= 0) return {};
  const Complex lead = p.coeff(degree);
  if (lead == 0.0) throw Error(ErrorCode::DegenerateLeading, "zero leading coefficient");
  std::vector<Complex> roots;
  if (degree == 1) {
    roots.push_back(-p.coeff(0) / lead);
    return roots;
  }
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(degree, degree);
  for (int i = 1; i < degree; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < degree; ++i) comp(i, degree - 1) = -p.coeff(i) / lead;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(comp, false);

  std::vector<Complex> trimmed(degree + 1);
  for (int k = 0; k <= degree; ++k) trimmed[k] = p.coeff(k);
  const Polynomial q(trimmed);
  const Polynomial dq = q.derivative();
  for (int i = 0; i < degree; ++i) {
    Complex r = solver.eigenvalues()(i);
    for (int it = 0; it < 8; ++it) {
      const Complex f = q(r);
      const Complex df = dq(r);
      if (df == 0.0) break;
      const Complex next = r - f / df;
      if (!(std::abs(q(next)) < std::abs(f))) break;
      r = next;
    }
    roots.push_back(r);
  }
  std::sort(roots.begin(), roots.end(), detail::eigen_less);
  return roots;
}

/// e_1..e_k of the given values (e_0 = 1 omitted).
inline std::vector<Complex> elementary_symmetric(std::span<const Complex> xs) {
  std::vector<Complex> e(xs.size() + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t k = i + 1; k >= 1; --k) e[k] += e[k - 1] * xs[i];
  return {e.begin() + 1, e.end()};
}

struct PrincipalPart {
  Complex pole;
  std::vector<Complex> coeffs;  // coeffs[k-1] multiplies (z - pole)^{-k}

  int order(double threshold = 0.0) const {
    for (int k = static_cast<int>(coeffs.size()); k >= 1; --k)
      if (std::abs(coeffs[k - 1]) > threshold) return k;
    return 0;
  }
  Complex coeff(int k) const { return k >= 1 && k <= static_cast<int>(coeffs.size()) ? coeffs[k - 1] : Complex{}; }
};

class RationalFunction {
 public:
  RationalFunction() = default;

  static RationalFunction pole_term(Complex pole, Complex coeff, int order = 1) {
    RationalFunction r;
    PrincipalPart part{pole, std::vector<Complex>(order, 0.0)};
    part.coeffs[order - 1] = coeff;
    r.parts_.push_back(std::move(part));
    return r;
  }

  static RationalFunction from_polynomial(Polynomial p) {
    RationalFunction r;
    r.tail_ = std::move(p);
    return r;
  }

  /// sum_i c_i / (z - a_i)
  static RationalFunction simple_fractions(std::span<const Complex> poles,
                                           std::span<const Complex> residues) {
    RationalFunction r;
    for (std::size_t i = 0; i < poles.size(); ++i) r.add_term(poles[i], 1, residues[i]);
    return r;
  }

  const std::vector<PrincipalPart>& parts() const noexcept { return parts_; }
  const Polynomial& tail() const noexcept { return tail_; }

  /// Principal part at `pole`, or nullptr when it is not a stored pole.
  const PrincipalPart* part_at(Complex pole) const {
    for (const auto& p : parts_)
      if (same_pole(p.pole, pole)) return &p;
    return nullptr;
  }

  Complex residue(Complex pole) const {
    const auto* p = part_at(pole);
    return p ? p->coeff(1) : Complex{};
  }

  /// Coefficient of (z - pole)^{-k}.
  Complex coefficient(Complex pole, int k) const {
    const auto* p = part_at(pole);
    return p ? p->coeff(k) : Complex{};
  }

  /// Coefficient of z^{-k}, k >= 1, in the expansion at infinity.
  Complex coefficient_at_infinity(int k) const {
    Complex acc = 0.0;
    for (const auto& p : parts_) {
      for (int m = 1; m <= std::min<int>(k, static_cast<int>(p.coeffs.size())); ++m) {
        acc += p.coeffs[m - 1] * binomial(k - 1, k - m) * std::pow(p.pole, k - m);
      }
    }
    return acc;
  }

  Complex operator()(Complex z) const {
    Complex acc = tail_(z);
    for (const auto& p : parts_) {
      const Complex w = 1.0 / (z - p.pole);
      Complex wk = w;
      for (const auto& c : p.coeffs) {
        acc += c * wk;
        wk *= w;
      }
    }
    return acc;
  }

  RationalFunction derivative() const {
    RationalFunction r;
    r.tail_ = tail_.derivative();
    for (const auto& p : parts_) {
      for (int k = 1; k <= static_cast<int>(p.coeffs.size()); ++k) {
        r.add_term(p.pole, k + 1, -static_cast<double>(k) * p.coeffs[k - 1]);
      }
    }
    return r;
  }

  RationalFunction& operator+=(const RationalFunction& o) {
    tail_ = tail_ + o.tail_;
    for (const auto& p : o.parts_)
      for (int k = 1; k <= static_cast<int>(p.coeffs.size()); ++k) add_term(p.pole, k, p.coeffs[k - 1]);
    return *this;
  }
  RationalFunction& operator*=(Complex s) {
    tail_ = s * tail_;
    for (auto& p : parts_)
      for (auto& c : p.coeffs) c *= s;
    return *this;
  }

  friend RationalFunction operator+(RationalFunction a, const RationalFunction& b) { return a += b; }
  friend RationalFunction operator-(RationalFunction a, RationalFunction b) {
    b *= -1.0;
    return a += b;
  }
  friend RationalFunction operator*(Complex s, RationalFunction a) { return a *= s; }
  friend RationalFunction operator-(RationalFunction a) { return a *= -1.0; }

  friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
    RationalFunction r;
    r.tail_ = a.tail_ * b.tail_;
    for (const auto& pa : a.parts_) {
      for (int m = 1; m <= static_cast<int>(pa.coeffs.size()); ++m) {
        const Complex ca = pa.coeffs[m - 1];
        if (ca == 0.0) continue;
        r.add_pole_times_polynomial(pa.pole, m, ca, b.tail_);
        for (const auto& pb : b.parts_) {
          for (int n = 1; n <= static_cast<int>(pb.coeffs.size()); ++n) {
            const Complex cb = pb.coeffs[n - 1];
            if (cb == 0.0) continue;
            r.add_pole_product(pa.pole, m, pb.pole, n, ca * cb);
          }
        }
      }
    }
    for (const auto& pb : b.parts_)
      for (int n = 1; n <= static_cast<int>(pb.coeffs.size()); ++n)
        if (pb.coeffs[n - 1] != 0.0) r.add_pole_times_polynomial(pb.pole, n, pb.coeffs[n - 1], a.tail_);
    return r;
  }

 private:
  static bool same_pole(Complex a, Complex b) {
    return std::abs(a - b) <= 1e-13 * (1.0 + std::abs(a));
  }

  static double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  }

  void add_term(Complex pole, int order, Complex coeff) {
    for (auto& p : parts_) {
      if (same_pole(p.pole, pole)) {
        if (static_cast<int>(p.coeffs.size()) < order) p.coeffs.resize(order, 0.0);
        p.coeffs[order - 1] += coeff;
        return;
      }
    }
    PrincipalPart part{pole, std::vector<Complex>(order, 0.0)};
    part.coeffs[order - 1] = coeff;
    parts_.push_back(std::move(part));
  }

  // c / ((z-a)^m (z-b)^n)
  void add_pole_product(Complex a, int m, Complex b, int n, Complex c) {
    if (same_pole(a, b)) {
      add_term(a, m + n, c);
      return;
    }
    // (z-b)^{-n} = sum_j binom(-n, j) (a-b)^{-n-j} (z-a)^j around a.
    auto expand = [&](Complex at, int mo, Complex other, int no) {
      const Complex d = at - other;
      for (int k = 1; k <= mo; ++k) {
        const int j = mo - k;
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        add_term(at, k, c * sign * binomial(no + j - 1, j) * std::pow(d, -no - j));
      }
    };
    expand(a, m, b, n);
    expand(b, n, a, m);
  }

  // c (z-a)^{-m} P(z)
  void add_pole_times_polynomial(Complex a, int m, Complex c, const Polynomial& p) {
    if (p.size() == 0) return;
    const Polynomial local = p.shifted(a);  // P(a + w)
    std::vector<Complex> rest;
    for (std::size_t j = 0; j < local.size(); ++j) {
      const int power = static_cast<int>(j) - m;
      const Complex v = c * local.coeff(j);
      if (power < 0) {
        add_term(a, -power, v);
      } else {
        if (static_cast<int>(rest.size()) <= power) rest.resize(power + 1, 0.0);
        rest[power] += v;
      }
    }
    if (!rest.empty()) tail_ = tail_ + Polynomial(rest).shifted(-a);
  }

  std::vector<PrincipalPart> parts_;
  Polynomial tail_;
};

}  // namespace isolab
