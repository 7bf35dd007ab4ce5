#pragma once

// Small dense complex matrices (p <= 4) with the closed-form 2x2 paths used
// throughout the library: eigendata, exponential, normalized logarithm and
// branch-aware complex powers.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "isolab/errors.hpp"

namespace isolab {

using Complex = std::complex<double>;

inline constexpr Complex kTwoPiI{0.0, 2.0 * std::numbers::pi};

class CMatrix {
 public:
  static constexpr int kMaxDim = 4;

  CMatrix() = default;

  explicit CMatrix(int p) : p_(p) {
    if (p < 1 || p > kMaxDim) {
      throw Error(ErrorCode::DimensionUnsupported, "matrix dimension " + std::to_string(p));
    }
  }

  CMatrix(std::initializer_list<std::initializer_list<Complex>> rows)
      : CMatrix(static_cast<int>(rows.size())) {
    int r = 0;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != p_) {
        throw Error(ErrorCode::ShapeMismatch, "ragged matrix initializer");
      }
      int c = 0;
      for (const auto& v : row) (*this)(r, c++) = v;
      ++r;
    }
  }

  static CMatrix zero(int p) { return CMatrix(p); }

  static CMatrix identity(int p) {
    CMatrix m(p);
    for (int i = 0; i < p; ++i) m(i, i) = 1.0;
    return m;
  }

  static CMatrix diagonal(std::span<const Complex> d) {
    CMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.p_; ++i) m(i, i) = d[i];
    return m;
  }

  static CMatrix from_row_major(int p, std::span<const Complex> entries) {
    if (static_cast<int>(entries.size()) != p * p) {
      throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(p * p) + " entries");
    }
    CMatrix m(p);
    std::copy(entries.begin(), entries.end(), m.a_.begin());
    return m;
  }

  int dim() const noexcept { return p_; }

  Complex& operator()(int r, int c) noexcept { return a_[r * p_ + c]; }
  const Complex& operator()(int r, int c) const noexcept { return a_[r * p_ + c]; }

  std::span<const Complex> entries() const noexcept {
    return {a_.data(), static_cast<std::size_t>(p_ * p_)};
  }
  std::span<Complex> entries() noexcept { return {a_.data(), static_cast<std::size_t>(p_ * p_)}; }

  CMatrix& operator+=(const CMatrix& o) {
    check_same(o);
    for (int i = 0; i < p_ * p_; ++i) a_[i] += o.a_[i];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    check_same(o);
    for (int i = 0; i < p_ * p_; ++i) a_[i] -= o.a_[i];
    return *this;
  }
  CMatrix& operator*=(Complex s) noexcept {
    for (int i = 0; i < p_ * p_; ++i) a_[i] *= s;
    return *this;
  }

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, Complex s) { return a *= s; }
  friend CMatrix operator*(Complex s, CMatrix a) { return a *= s; }
  friend CMatrix operator/(CMatrix a, Complex s) { return a *= (1.0 / s); }
  friend CMatrix operator-(CMatrix a) { return a *= -1.0; }

  friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    a.check_same(b);
    CMatrix r(a.p_);
    for (int i = 0; i < a.p_; ++i)
      for (int k = 0; k < a.p_; ++k) {
        const Complex aik = a(i, k);
        for (int j = 0; j < a.p_; ++j) r(i, j) += aik * b(k, j);
      }
    return r;
  }

  friend bool operator==(const CMatrix&, const CMatrix&) = default;

 private:
  void check_same(const CMatrix& o) const {
    if (o.p_ != p_) throw Error(ErrorCode::ShapeMismatch, "matrix dimensions differ");
  }

  int p_ = 0;
  std::array<Complex, kMaxDim * kMaxDim> a_{};
};

/// Max absolute entry.
inline double norm(const CMatrix& a) {
  double m = 0.0;
  for (const auto& v : a.entries()) m = std::max(m, std::abs(v));
  return m;
}

inline bool is_finite(const CMatrix& a) {
  return std::all_of(a.entries().begin(), a.entries().end(),
                     [](Complex v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

inline Complex trace(const CMatrix& a) {
  Complex t = 0.0;
  for (int i = 0; i < a.dim(); ++i) t += a(i, i);
  return t;
}

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

namespace detail {

// Gaussian elimination with partial pivoting; returns det and optionally the
// inverse.
inline Complex lu_solve(const CMatrix& a, CMatrix* inverse) {
  const int p = a.dim();
  CMatrix m = a;
  CMatrix inv = CMatrix::identity(p);
  Complex det = 1.0;
  for (int col = 0; col < p; ++col) {
    int piv = col;
    for (int r = col + 1; r < p; ++r)
      if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
    if (m(piv, col) == 0.0) return 0.0;
    if (piv != col) {
      for (int c = 0; c < p; ++c) {
        std::swap(m(piv, c), m(col, c));
        std::swap(inv(piv, c), inv(col, c));
      }
      det = -det;
    }
    const Complex d = m(col, col);
    det *= d;
    for (int c = 0; c < p; ++c) {
      m(col, c) /= d;
      inv(col, c) /= d;
    }
    for (int r = 0; r < p; ++r) {
      if (r == col) continue;
      const Complex f = m(r, col);
      if (f == 0.0) continue;
      for (int c = 0; c < p; ++c) {
        m(r, c) -= f * m(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  if (inverse) *inverse = inv;
  return det;
}

inline bool eigen_less(Complex a, Complex b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

}  // namespace detail

inline Complex det(const CMatrix& a) {
  if (a.dim() == 1) return a(0, 0);
  if (a.dim() == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return detail::lu_solve(a, nullptr);
}

inline CMatrix inverse(const CMatrix& a) {
  if (a.dim() == 2) {
    const Complex d = det(a);
    if (d == 0.0) throw Error(ErrorCode::SingularMatrix, "inverse of singular matrix");
    return CMatrix{{a(1, 1) / d, -a(0, 1) / d}, {-a(1, 0) / d, a(0, 0) / d}};
  }
  CMatrix inv(a.dim());
  if (detail::lu_solve(a, &inv) == 0.0) {
    throw Error(ErrorCode::SingularMatrix, "inverse of singular matrix");
  }
  return inv;
}

/// Relative eigenvalue gap below which two eigenvalues are treated as equal.
inline constexpr double kJordanThreshold = 1e-10;

struct EigenData {
  std::vector<Complex> values;  // sorted by (Re, Im)
  bool diagonalizable = true;
  CMatrix S;  // A = S J S^{-1}
  CMatrix J;  // diagonal, or a single 2x2 Jordan block when !diagonalizable
};

namespace detail {

// Roots of x^2 - tr x + det = 0 without cancellation.
inline std::array<Complex, 2> quadratic_eigenvalues(Complex tr, Complex dt) {
  const Complex disc = std::sqrt(tr * tr - 4.0 * dt);
  Complex big = 0.5 * (tr + disc);
  Complex other = 0.5 * (tr - disc);
  if (std::abs(other) > std::abs(big)) std::swap(big, other);
  if (big != 0.0) other = dt / big;
  return {big, other};
}

inline Complex normalize_column(CMatrix& s, int col) {
  double n = 0.0;
  for (int r = 0; r < s.dim(); ++r) n += std::norm(s(r, col));
  n = std::sqrt(n);
  for (int r = 0; r < s.dim(); ++r) s(r, col) /= n;
  return n;
}

inline EigenData eig2(const CMatrix& a) {
  EigenData out;
  const double scale = norm(a);
  auto lam = quadratic_eigenvalues(trace(a), det(a));
  if (detail::eigen_less(lam[1], lam[0])) std::swap(lam[0], lam[1]);
  out.values = {lam[0], lam[1]};

  if (std::abs(lam[0] - lam[1]) <= kJordanThreshold * scale) {
    const Complex mu = 0.5 * trace(a);
    out.values = {mu, mu};
    const CMatrix nil = a - CMatrix::identity(2) * mu;
    if (norm(nil) <= kJordanThreshold * scale) {
      out.S = CMatrix::identity(2);
      out.J = CMatrix::identity(2) * mu;
      return out;
    }
    // Chain v = N e_k, w = e_k with k the column of largest norm.
    const int k = (std::abs(nil(0, 0)) + std::abs(nil(1, 0)) >=
                   std::abs(nil(0, 1)) + std::abs(nil(1, 1)))
                      ? 0
                      : 1;
    out.diagonalizable = false;
    out.S = CMatrix{{nil(0, k), k == 0 ? 1.0 : 0.0}, {nil(1, k), k == 1 ? 1.0 : 0.0}};
    out.J = CMatrix{{mu, 1.0}, {0.0, mu}};
    return out;
  }

  out.S = CMatrix(2);
  for (int c = 0; c < 2; ++c) {
    const Complex l = lam[c];
    // Two candidate null vectors of A - l; keep the better conditioned one.
    const Complex v1a = a(0, 1), v1b = l - a(0, 0);
    const Complex v2a = l - a(1, 1), v2b = a(1, 0);
    if (std::abs(v1a) + std::abs(v1b) >= std::abs(v2a) + std::abs(v2b)) {
      out.S(0, c) = v1a;
      out.S(1, c) = v1b;
    } else {
      out.S(0, c) = v2a;
      out.S(1, c) = v2b;
    }
    normalize_column(out.S, c);
  }
  out.J = CMatrix::diagonal(lam);
  return out;
}

inline EigenData eig_general(const CMatrix& a) {
  const int p = a.dim();
  Eigen::MatrixXcd m(p, p);
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) m(r, c) = a(r, c);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, true);
  std::vector<int> idx(p);
  for (int i = 0; i < p; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int x, int y) {
    return eigen_less(solver.eigenvalues()(x), solver.eigenvalues()(y));
  });
  EigenData out;
  out.S = CMatrix(p);
  std::vector<Complex> vals;
  for (int c = 0; c < p; ++c) {
    vals.push_back(solver.eigenvalues()(idx[c]));
    for (int r = 0; r < p; ++r) out.S(r, c) = solver.eigenvectors()(r, idx[c]);
    normalize_column(out.S, c);
  }
  out.values = vals;
  out.J = CMatrix::diagonal(vals);
  // Columns are unit vectors, so |det S| measures their independence.
  out.diagonalizable = std::abs(det(out.S)) > 1e-8;
  return out;
}

}  // namespace detail

/// Eigenvalues and a similarity transform for p <= 4. For p = 2 the closed
/// form is used and a 2x2 Jordan block is detected when the eigenvalue gap
/// falls below kJordanThreshold * norm(A). For p > 2 only the diagonal case
/// carries a faithful S; `diagonalizable` is false when it is ill-conditioned.
inline EigenData eig(const CMatrix& a) {
  switch (a.dim()) {
    case 1: {
      EigenData out;
      out.values = {a(0, 0)};
      out.S = CMatrix::identity(1);
      out.J = a;
      return out;
    }
    case 2: return detail::eig2(a);
    case 3:
    case 4: return detail::eig_general(a);
    default:
      throw Error(ErrorCode::DimensionUnsupported, "eig supports p <= 4");
  }
}

inline std::vector<Complex> eigenvalues(const CMatrix& a) { return eig(a).values; }

namespace detail {

// sinh(x)/x, accurate near 0.
inline Complex sinhc(Complex x) {
  if (std::abs(x) < 1e-4) {
    const Complex x2 = x * x;
    return 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sinh(x) / x;
}

inline CMatrix exp_taylor(const CMatrix& a) {
  // Scaling and squaring with a truncated Taylor series.
  const int p = a.dim();
  int squarings = 0;
  double n = norm(a) * p;
  while (n > 0.5) {
    n *= 0.5;
    ++squarings;
  }
  const CMatrix x = a * std::ldexp(1.0, -squarings);
  CMatrix term = CMatrix::identity(p);
  CMatrix sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = term * x * (1.0 / k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace detail

/// Matrix exponential. The 2x2 case uses the spectral closed form
/// e^mu (cosh(d) I + sinh(d)/d (A - mu I)) with mu = tr/2, d^2 = mu^2 - det,
/// which reduces to e^mu (I + N) on a Jordan block.
inline CMatrix mat_exp(const CMatrix& a) {
  if (a.dim() == 1) return CMatrix{{std::exp(a(0, 0))}};
  if (a.dim() == 2) {
    const Complex mu = 0.5 * trace(a);
    const Complex d = std::sqrt(mu * mu - det(a));
    const CMatrix shifted = a - CMatrix::identity(2) * mu;
    return std::exp(mu) * (CMatrix::identity(2) * std::cosh(d) + shifted * detail::sinhc(d));
  }
  return detail::exp_taylor(a);
}

/// Shift a branch eigenvalue by an integer so that 0 <= Re < 1.
inline Complex normalize_branch(Complex mu) {
  Complex r = mu - std::floor(mu.real());
  if (r.real() >= 1.0) r -= 1.0;
  if (r.real() < 0.0) r += 1.0;
  if (r.real() >= 1.0) r = Complex(0.0, r.imag());
  return r;
}

/// Branch eigenvalues of (1/2 pi i) log G, each normalized into 0 <= Re < 1.
inline std::vector<Complex> normalized_log_eigenvalues(const CMatrix& g) {
  std::vector<Complex> out;
  for (const auto& l : eigenvalues(g)) out.push_back(normalize_branch(std::log(l) / kTwoPiI));
  return out;
}

/// E = (1/2 pi i) ln G with every eigenvalue of E in the strip 0 <= Re < 1.
/// Implemented for p <= 2; the Jordan structure of G carries over to E.
inline CMatrix mat_log_normalized(const CMatrix& g) {
  if (g.dim() > 2) throw Error(ErrorCode::DimensionUnsupported, "normalized log for p <= 2");
  const Complex dg = det(g);
  if (std::abs(dg) < 1e-14) throw Error(ErrorCode::SingularMatrix, "|det G| < 1e-14");
  if (g.dim() == 1) return CMatrix{{normalize_branch(std::log(g(0, 0)) / kTwoPiI)}};

  auto lam = detail::quadratic_eigenvalues(trace(g), dg);
  const double scale = norm(g);
  const Complex m1 = normalize_branch(std::log(lam[0]) / kTwoPiI);
  const Complex m2 = normalize_branch(std::log(lam[1]) / kTwoPiI);
  const CMatrix id = CMatrix::identity(2);

  if (std::abs(lam[0] - lam[1]) <= kJordanThreshold * scale) {
    const Complex l = 0.5 * (lam[0] + lam[1]);
    const Complex mu = normalize_branch(std::log(l) / kTwoPiI);
    return id * mu + (g - id * l) * (1.0 / (kTwoPiI * l));
  }

  // Divided difference (m1 - m2)/(l1 - l2), formed through atanh when the
  // eigenvalues are close so that the principal-log difference does not cancel.
  const Complex dl = lam[0] - lam[1];
  Complex dd;
  if (std::abs(dl) > 0.25 * std::max(std::abs(lam[0]), std::abs(lam[1]))) {
    dd = (m1 - m2) / dl;
  } else {
    const Complex small = 2.0 * std::atanh(dl / (lam[0] + lam[1]));
    const Complex full = (m1 - m2) * kTwoPiI;
    const double wraps = std::round((full - small).imag() / (2.0 * std::numbers::pi));
    dd = (small + kTwoPiI * wraps) / (kTwoPiI * dl);
  }
  const Complex lbar = 0.5 * (lam[0] + lam[1]);
  return id * (0.5 * (m1 + m2)) + (g - id * lbar) * dd;
}

/// (z - a)^E = exp(E log(z - a)). `log_base`, when given, selects the branch
/// (it must be a logarithm of `base`); otherwise the principal branch is used.
inline CMatrix mat_power(Complex base, const CMatrix& e, std::optional<Complex> log_base = {}) {
  if (base == 0.0) throw Error(ErrorCode::ZeroBase, "power of zero base");
  const Complex lg = log_base.value_or(std::log(base));
  return mat_exp(e * lg);
}

}  // namespace isolab
