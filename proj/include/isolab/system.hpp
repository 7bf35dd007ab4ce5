#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "isolab/algebra.hpp"

namespace isolab {

enum class Normalization {
  SumZero,    // infinity is not singular: sum B_i = 0
  DiagonalK,  // sum B_i = diag(-theta, theta)
};

inline constexpr double kMinPoleDistance = 1e-8;

/// dy/dz = sum_i B_i / (z - a_i) y
struct FuchsianSystem {
  std::vector<Complex> poles;
  std::vector<CMatrix> residues;
  Normalization normalization = Normalization::SumZero;
  Complex infinity_exponent{};  // theta for DiagonalK

  int dim() const { return residues.empty() ? 0 : residues.front().dim(); }
  std::size_t size() const { return poles.size(); }

  CMatrix residue_sum() const {
    CMatrix s(dim());
    for (const auto& b : residues) s += b;
    return s;
  }

  CMatrix coefficient(Complex z) const {
    CMatrix s(dim());
    for (std::size_t i = 0; i < poles.size(); ++i) s += residues[i] * (1.0 / (z - poles[i]));
    return s;
  }

  Complex trace_coefficient(Complex z) const {
    Complex s = 0.0;
    for (std::size_t i = 0; i < poles.size(); ++i) s += trace(residues[i]) / (z - poles[i]);
    return s;
  }

  /// Throws PoleCollision / InvalidConfig when an invariant fails.
  void validate() const {
    if (poles.size() != residues.size() || poles.empty()) {
      throw Error(ErrorCode::InvalidConfig, "poles and residues must be non-empty and match");
    }
    const int p = dim();
    for (const auto& b : residues) {
      if (b.dim() != p) throw Error(ErrorCode::ShapeMismatch, "residue dimensions differ");
      if (!is_finite(b)) throw Error(ErrorCode::InvalidConfig, "non-finite residue entry");
    }
    for (std::size_t i = 0; i < poles.size(); ++i)
      for (std::size_t j = i + 1; j < poles.size(); ++j)
        if (std::abs(poles[i] - poles[j]) < kMinPoleDistance) {
          throw Error(ErrorCode::PoleCollision,
                      "poles " + std::to_string(i) + " and " + std::to_string(j) + " collide");
        }
    double scale = 0.0;
    for (const auto& b : residues) scale = std::max(scale, norm(b));
    const double bound = 1e-10 * std::max(scale, 1.0);
    const CMatrix sum = residue_sum();
    if (normalization == Normalization::SumZero) {
      if (norm(sum) > bound) throw Error(ErrorCode::InvalidConfig, "sum of residues is not zero");
    } else {
      for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c)
          if (r != c && std::abs(sum(r, c)) > bound) {
            throw Error(ErrorCode::InvalidConfig, "sum of residues is not diagonal");
          }
      if (p == 2 && (std::abs(sum(0, 0) + infinity_exponent) > bound ||
                     std::abs(sum(1, 1) - infinity_exponent) > bound)) {
        throw Error(ErrorCode::InvalidConfig, "sum of residues differs from diag(-theta, theta)");
      }
    }
  }
};

/// Integer shifts and branch eigenvalues: the exponents at pole k are
/// +-(m_k + rho_k), at infinity the normalization is m_inf + rho_inf.
struct ThetaData {
  std::vector<int> m;
  std::vector<Complex> rho;
  int m_inf = 0;
  Complex rho_inf{};

  Complex shift(std::size_t k) const { return static_cast<double>(m.at(k)) + rho.at(k); }
  Complex infinity_shift() const { return static_cast<double>(m_inf) + rho_inf; }
  std::vector<Complex> shifts() const {
    std::vector<Complex> s;
    for (std::size_t k = 0; k < m.size(); ++k) s.push_back(shift(k));
    return s;
  }

  /// Split s = m + rho with m = floor(Re s) >= 0 and Re rho in [0, 1). The
  /// representative with Re s >= 0 is used.
  static void split(Complex s, int& m_out, Complex& rho_out) {
    if (s.real() < 0.0 || (s.real() == 0.0 && s.imag() < 0.0)) s = -s;
    m_out = static_cast<int>(std::floor(s.real()));
    rho_out = s - static_cast<double>(m_out);
  }

  /// Derive theta data from the residues of a 2x2 system (eigenvalues +-s).
  static ThetaData from_system(const FuchsianSystem& sys) {
    ThetaData t;
    for (const auto& b : sys.residues) {
      const Complex s = std::sqrt(-det(b));
      int m = 0;
      Complex rho;
      split(s, m, rho);
      t.m.push_back(m);
      t.rho.push_back(rho);
    }
    split(sys.infinity_exponent, t.m_inf, t.rho_inf);
    return t;
  }

  /// Exponents must match eigenvalues of the residues within `tol`.
  bool matches(const FuchsianSystem& sys, double tol = 1e-8) const {
    if (m.size() != sys.size() || rho.size() != sys.size()) return false;
    for (std::size_t k = 0; k < sys.size(); ++k) {
      const auto ev = eigenvalues(sys.residues[k]);
      const Complex s = shift(k);
      const bool direct = std::abs(ev[0] + s) <= tol && std::abs(ev[1] - s) <= tol;
      const bool swapped = std::abs(ev[0] - s) <= tol && std::abs(ev[1] + s) <= tol;
      if (!direct && !swapped) return false;
    }
    return true;
  }
};

}  // namespace isolab
