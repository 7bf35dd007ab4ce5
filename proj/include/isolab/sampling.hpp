#pragma once

// Seeded random Fuchsian systems for self-checks and tests.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "isolab/algebra.hpp"
#include "isolab/system.hpp"

namespace isolab::sampling {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) {
    // Built from raw bits so the stream is identical across standard libraries.
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  Complex in_box(double r) { return {uniform(-r, r), uniform(-r, r)}; }
  Complex in_disk(double r) {
    for (;;) {
      const Complex z = in_box(r);
      if (std::abs(z) <= r) return z;
    }
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline CMatrix random_matrix(Rng& rng, double scale) {
  return CMatrix{{rng.in_box(scale), rng.in_box(scale)}, {rng.in_box(scale), rng.in_box(scale)}};
}

/// S diag(s, -s) S^{-1} with a well-conditioned random S.
inline CMatrix residue_with_exponent(Rng& rng, Complex s) {
  for (;;) {
    const CMatrix S = random_matrix(rng, 1.0);
    const double d = std::abs(det(S));
    if (d < 0.3) continue;
    return S * CMatrix{{s, 0.0}, {0.0, -s}} * inverse(S);
  }
}

inline Complex random_exponent(Rng& rng) {
  return {rng.uniform(0.05, 0.4), rng.uniform(-0.15, 0.15)};
}

/// n poles in the disk of radius `r`, pairwise at least `sep` apart.
inline std::vector<Complex> random_poles(Rng& rng, std::size_t n, double r = 1.5, double sep = 0.6) {
  std::vector<Complex> a;
  while (a.size() < n) {
    const Complex z = rng.in_disk(r);
    bool ok = true;
    for (const auto& b : a) ok = ok && std::abs(z - b) >= sep;
    if (ok) a.push_back(z);
  }
  return a;
}

inline constexpr double kMaxExponentImag = 0.25;

/// Trace-free residues summing to zero; the last residue closes the sum and
/// is redrawn until its exponent also satisfies |Im s| <= kMaxExponentImag,
/// which keeps every generator norm moderate.
inline FuchsianSystem random_sum_zero(Rng& rng, std::size_t n) {
  FuchsianSystem sys;
  sys.poles = random_poles(rng, n);
  sys.normalization = Normalization::SumZero;
  for (;;) {
    sys.residues.clear();
    CMatrix sum(2);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      sys.residues.push_back(residue_with_exponent(rng, random_exponent(rng)));
      sum += sys.residues.back();
    }
    if (std::abs(std::sqrt(-det(sum)).imag()) <= kMaxExponentImag) {
      sys.residues.push_back(sum * -1.0);
      break;
    }
  }
  sys.validate();
  return sys;
}

/// sum B_i = diag(-kappa, kappa) at the given poles, with the closing residue
/// filtered like random_sum_zero.
inline FuchsianSystem random_diagonal_k(Rng& rng, std::vector<Complex> poles, Complex kappa,
                                        double scale = 1.0) {
  FuchsianSystem sys;
  sys.poles = std::move(poles);
  sys.normalization = Normalization::DiagonalK;
  sys.infinity_exponent = kappa;
  for (;;) {
    sys.residues.clear();
    CMatrix sum(2);
    for (std::size_t i = 0; i + 1 < sys.poles.size(); ++i) {
      sys.residues.push_back(residue_with_exponent(rng, scale * random_exponent(rng)));
      sum += sys.residues.back();
    }
    const CMatrix last = CMatrix{{-kappa, 0.0}, {0.0, kappa}} - sum;
    if (std::abs(std::sqrt(-det(last)).imag()) <= kMaxExponentImag * std::max(scale, 1.0)) {
      sys.residues.push_back(last);
      break;
    }
  }
  sys.validate();
  return sys;
}

/// n = 1 family at poles (t, 0, 1).
inline FuchsianSystem random_pvi_system(Rng& rng, Complex t, Complex kappa, double scale = 1.0) {
  return random_diagonal_k(rng, {t, 0.0, 1.0}, kappa, scale);
}

}  // namespace isolab::sampling
