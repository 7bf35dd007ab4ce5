#pragma once

// Painleve VI and Garnier data extracted from a 2x2 Schlesinger family in the
// DIAGONAL_K normalization: the apparent polynomial, u and v coordinates,
// symmetric polynomials of the apparent points, the PVI residual and
// movable-pole probes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isolab/algebra.hpp"
#include "isolab/fuchsian.hpp"
#include "isolab/probe.hpp"
#include "isolab/rational.hpp"
#include "isolab/schlesinger.hpp"
#include "isolab/system.hpp"

namespace isolab {

struct PviParameters {
  Complex alpha, beta, gamma, delta;
};

/// Parameters for poles ordered (t, 0, 1).
inline PviParameters theorem2_params(const ThetaData& theta) {
  if (theta.m.size() != 3 || theta.rho.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, "three finite poles expected");
  }
  const Complex k = theta.infinity_shift();
  const Complex s1 = theta.shift(0), s2 = theta.shift(1), s3 = theta.shift(2);
  return {(2.0 * k - 1.0) * (2.0 * k - 1.0) / 2.0, -2.0 * s2 * s2, 2.0 * s3 * s3,
          0.5 - 2.0 * s1 * s1};
}

/// True for (m_inf, rho_inf) = (0, 1/2).
inline bool is_half_case(const ThetaData& theta, double tol = 1e-12) {
  return theta.m_inf == 0 && std::abs(theta.rho_inf - 0.5) <= tol;
}

/// b_m z^n + f_1 z^{n-1} + ... + f_n, the numerator of the upper-right
/// coefficient entry.
struct ApparentPolynomial {
  Complex leading{};
  std::vector<Complex> f;
  std::vector<Complex> roots;
  std::vector<bool> multiple;
  std::vector<Complex> expanded;  // same coefficients from the product expansion
  double expansion_mismatch = 0.0;

  int degree() const { return static_cast<int>(f.size()); }

  Polynomial polynomial() const {
    const int n = degree();
    std::vector<Complex> c(n + 1);
    c[n] = leading;
    for (int k = 1; k <= n; ++k) c[n - k] = f[k - 1];
    return Polynomial(c);
  }
};

inline constexpr double kLeadingThreshold = 1e-12;
inline constexpr double kRootSeparation = 1e-6;

inline ApparentPolynomial apparent_polynomial(const FuchsianSystem& sys) {
  if (sys.dim() != 2) throw Error(ErrorCode::DimensionUnsupported, "apparent polynomial for p = 2");
  if (sys.normalization != Normalization::DiagonalK) {
    throw Error(ErrorCode::InvalidArgument, "DIAGONAL_K normalization required");
  }
  const std::size_t N = sys.size();
  if (N < 3 || N > 20) throw Error(ErrorCode::InvalidArgument, "between 3 and 20 poles expected");
  const int n = static_cast<int>(N) - 2;

  std::vector<Complex> b(N);
  double bscale = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    b[i] = sys.residues[i](0, 1);
    bscale = std::max(bscale, std::abs(b[i]));
  }
  if (bscale == 0.0) throw Error(ErrorCode::ReducibleSystem, "all upper-right residue entries vanish");

  ApparentPolynomial ap;
  for (std::size_t i = 0; i < N; ++i) ap.leading += b[i] * sys.poles[i];
  ap.f.assign(n, Complex{});
  for (unsigned mask = 1; mask < (1u << N); ++mask) {
    const int size = std::popcount(mask);
    if (size < 2 || size > n + 1) continue;
    Complex bsum = 0.0, prod = 1.0;
    for (std::size_t i = 0; i < N; ++i)
      if (mask & (1u << i)) {
        bsum += b[i];
        prod *= sys.poles[i];
      }
    ap.f[size - 2] += bsum * prod;
  }
  for (int k = 1; k <= n; ++k)
    if (k % 2 == 1) ap.f[k - 1] = -ap.f[k - 1];

  const Polynomial numer = upper_right_numerator(sys);
  ap.expanded.resize(n + 1);
  ap.expanded[0] = numer.coeff(n);
  for (int k = 1; k <= n; ++k) ap.expanded[k] = numer.coeff(n - k);
  double cscale = std::abs(ap.leading), diff = std::abs(ap.leading - ap.expanded[0]);
  for (int k = 1; k <= n; ++k) {
    cscale = std::max(cscale, std::abs(ap.f[k - 1]));
    diff = std::max(diff, std::abs(ap.f[k - 1] - ap.expanded[k]));
  }
  ap.expansion_mismatch = cscale > 0.0 ? diff / cscale : diff;

  double fmax = 0.0;
  for (const auto& v : ap.f) fmax = std::max(fmax, std::abs(v));
  if (std::abs(ap.leading) <= kLeadingThreshold * fmax) {
    throw Error(ErrorCode::DegenerateLeading, "leading coefficient " +
                                                  std::to_string(std::abs(ap.leading)) +
                                                  " below threshold");
  }
  ap.roots = polynomial_roots(ap.polynomial(), n);
  ap.multiple.assign(n, false);
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k)
      if (std::abs(ap.roots[j] - ap.roots[k]) <= kRootSeparation) ap.multiple[j] = ap.multiple[k] = true;
  return ap;
}

namespace detail {

inline void check_pvi_poles(const FuchsianSystem& sys) {
  if (sys.size() != 3 || std::abs(sys.poles[1]) > 1e-14 || std::abs(sys.poles[2] - 1.0) > 1e-14) {
    throw Error(ErrorCode::InvalidArgument, "poles must be ordered (t, 0, 1)");
  }
}

}  // namespace detail

/// u = -t b_2 / (t b_1 + b_3) for poles (t, 0, 1); nullopt when u is infinite.
inline std::optional<Complex> pvi_u(const FuchsianSystem& sys) {
  detail::check_pvi_poles(sys);
  const Complex t = sys.poles[0];
  const Complex b1 = sys.residues[0](0, 1), b2 = sys.residues[1](0, 1), b3 = sys.residues[2](0, 1);
  const Complex num = -t * b2;
  const Complex den = t * b1 + b3;
  const double scale = std::max({std::abs(b1), std::abs(b2), std::abs(b3)}) * (1.0 + std::abs(t));
  if (std::abs(num) <= 1e-14 * scale && std::abs(den) <= 1e-14 * scale) {
    throw Error(ErrorCode::Ambiguous, "numerator and denominator of u both vanish");
  }
  if (std::abs(den) < 1e-12 * std::abs(t * b2)) return std::nullopt;
  return num / den;
}

struct GarnierUV {
  std::vector<Complex> u;
  std::vector<Complex> v;
};

/// Apparent points u_j and v_j = sum_i (c_i + s_i) / (u_j - a_i), c_i the
/// upper-left entry of B_i and s_i = m_i + rho_i.
inline GarnierUV garnier_uv(const FuchsianSystem& sys, std::span<const Complex> shifts) {
  if (shifts.size() != sys.size()) throw Error(ErrorCode::ShapeMismatch, "one shift per pole expected");
  const auto ap = apparent_polynomial(sys);
  GarnierUV out;
  out.u = ap.roots;
  for (std::size_t j = 0; j < out.u.size(); ++j) {
    for (std::size_t k = j + 1; k < out.u.size(); ++k)
      if (std::abs(out.u[j] - out.u[k]) <= kRootSeparation) {
        throw Error(ErrorCode::RootCollision, "apparent points " + std::to_string(j) + " and " +
                                                  std::to_string(k) + " collide");
      }
    for (std::size_t i = 0; i < sys.size(); ++i)
      if (std::abs(out.u[j] - sys.poles[i]) <= kRootSeparation) {
        throw Error(ErrorCode::RootOnPole, "apparent point " + std::to_string(j) + " meets pole " +
                                               std::to_string(i));
      }
  }
  for (const auto& u : out.u) {
    Complex v = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i)
      v += (sys.residues[i](0, 0) + shifts[i]) / (u - sys.poles[i]);
    out.v.push_back(v);
  }
  return out;
}

struct SymmetricPolys {
  std::vector<Complex> ratio;       // (-1)^k f_k / b_m
  std::vector<Complex> from_roots;  // elementary symmetric polynomials of the roots
  double mismatch = 0.0;
};

inline SymmetricPolys symmetric_polys(const ApparentPolynomial& ap) {
  double fmax = 0.0;
  for (const auto& v : ap.f) fmax = std::max(fmax, std::abs(v));
  if (std::abs(ap.leading) <= kLeadingThreshold * fmax) {
    throw Error(ErrorCode::DegenerateLeading, "leading coefficient below threshold");
  }
  SymmetricPolys s;
  for (int k = 1; k <= ap.degree(); ++k)
    s.ratio.push_back((k % 2 == 0 ? 1.0 : -1.0) * ap.f[k - 1] / ap.leading);
  s.from_roots = elementary_symmetric(ap.roots);
  for (std::size_t k = 0; k < s.ratio.size(); ++k)
    s.mismatch = std::max(s.mismatch, std::abs(s.ratio[k] - s.from_roots[k]) / (1.0 + std::abs(s.ratio[k])));
  return s;
}

// ---------------------------------------------------------------------------
// Deformation tracks

struct TrackSample {
  std::vector<Complex> params;  // pole vector
  std::vector<Complex> u, v, sigma;
  bool u_infinite = false;
  Complex ln_tau{};
  double max_residue_norm = 0.0;
  std::string note;  // error code name when u or v could not be formed
};

struct DeformationTrack {
  std::vector<TrackSample> samples;
  std::vector<std::size_t> swaps;  // sample indices where the root labels were permuted
  int degree = 0;
};

/// u, v and sigma at one state. Undefined quantities are NaN and the reason
/// is recorded in `note`.
inline TrackSample sample_state(const SchlesingerState& st, std::span<const Complex> shifts) {
  const Complex nan{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const int n = static_cast<int>(st.system.size()) - 2;
  TrackSample s;
  s.params = st.system.poles;
  s.ln_tau = st.ln_tau;
  s.max_residue_norm = st.max_residue_norm();
  s.u.assign(n, nan);
  s.v.assign(n, nan);
  s.sigma.assign(n, nan);
  try {
    const auto ap = apparent_polynomial(st.system);
    s.sigma = symmetric_polys(ap).ratio;
    s.u = ap.roots;
    try {
      s.v = garnier_uv(st.system, shifts).v;
    } catch (const Error& e) {
      s.note = to_string(e.code());
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateLeading) throw;
    s.u_infinite = true;
    s.note = to_string(e.code());
  }
  return s;
}

namespace detail {

// Relabel the roots of `cur` to follow `prev` by the permutation of least
// total displacement. Returns true when the labels were permuted.
inline bool match_roots(const TrackSample& prev, TrackSample& cur) {
  const std::size_t n = cur.u.size();
  if (n < 2 || prev.u_infinite || cur.u_infinite) return false;
  std::vector<std::size_t> perm(n), best;
  std::iota(perm.begin(), perm.end(), 0);
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t j = 0; j < n; ++j) cost += std::abs(cur.u[perm[j]] - prev.u[j]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (!std::is_sorted(best.begin(), best.end())) {
    auto u = cur.u, v = cur.v;
    for (std::size_t j = 0; j < n; ++j) {
      cur.u[j] = u[best[j]];
      cur.v[j] = v[best[j]];
    }
    return true;
  }
  return false;
}

}  // namespace detail

/// Flow through the pole vectors `points` (the first must be the current
/// poles), sampling at each.
inline DeformationTrack track_through(SchlesingerState state,
                                      const std::vector<std::vector<Complex>>& points,
                                      std::span<const Complex> shifts, const FlowOptions& opt = {}) {
  DeformationTrack track;
  track.degree = static_cast<int>(state.system.size()) - 2;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (k > 0) state = flow_to(state, points[k], opt);
    auto s = sample_state(state, shifts);
    if (!track.samples.empty() && detail::match_roots(track.samples.back(), s)) track.swaps.push_back(k);
    track.samples.push_back(std::move(s));
  }
  return track;
}

/// Uniform grid in one pole coordinate: a_index = a_index(0) + k * step.
inline std::vector<std::vector<Complex>> coordinate_grid(const std::vector<Complex>& start,
                                                         std::size_t index, Complex step,
                                                         std::size_t steps) {
  std::vector<std::vector<Complex>> pts;
  for (std::size_t k = 0; k <= steps; ++k) {
    auto p = start;
    p[index] += static_cast<double>(k) * step;
    pts.push_back(std::move(p));
  }
  return pts;
}

/// n = 1 track over t_k = t_0 + k * step.
inline DeformationTrack pvi_track(const SchlesingerState& state, Complex step, std::size_t steps,
                                  const FlowOptions& opt = {}) {
  detail::check_pvi_poles(state.system);
  const auto shifts = ThetaData::from_system(state.system).shifts();
  return track_through(state, coordinate_grid(state.system.poles, 0, step, steps), shifts, opt);
}

// ---------------------------------------------------------------------------
// PVI residual

/// Right-hand side of PVI for u'' given (t, u, u').
inline Complex pvi_rhs(const PviParameters& P, Complex t, Complex u, Complex du) {
  const Complex a = 0.5 * (1.0 / u + 1.0 / (u - 1.0) + 1.0 / (u - t)) * du * du;
  const Complex b = (1.0 / t + 1.0 / (t - 1.0) + 1.0 / (u - t)) * du;
  const Complex c = u * (u - 1.0) * (u - t) / (t * t * (t - 1.0) * (t - 1.0)) *
                    (P.alpha + P.beta * t / (u * u) + P.gamma * (t - 1.0) / ((u - 1.0) * (u - 1.0)) +
                     P.delta * t * (t - 1.0) / ((u - t) * (u - t)));
  return a - b + c;
}

struct PviResidual {
  std::vector<std::size_t> index;  // sample index of each residual
  std::vector<double> residual;
  std::vector<std::size_t> excluded;
  double max = 0.0;
};

inline constexpr double kPviSampleClearance = 1e-3;

/// |u'' - rhs| at interior samples of a uniform grid, derivatives by
/// five-point central differences. Missing values of u are nullopt.
inline PviResidual pvi_residual(std::span<const Complex> t, std::span<const std::optional<Complex>> u,
                                const PviParameters& P) {
  const std::size_t N = t.size();
  if (N < 5 || u.size() != N) throw Error(ErrorCode::InvalidArgument, "at least 5 matching samples required");
  const Complex h = t[1] - t[0];
  if (std::abs(h) == 0.0) throw Error(ErrorCode::InvalidArgument, "zero grid step");
  for (std::size_t k = 1; k < N; ++k)
    if (std::abs(t[k] - t[k - 1] - h) > 1e-9 * std::abs(h)) {
      throw Error(ErrorCode::InvalidArgument, "grid is not uniform");
    }
  auto usable = [&](std::size_t k) {
    if (!u[k]) return false;
    const Complex v = *u[k];
    return std::isfinite(v.real()) && std::isfinite(v.imag()) && std::abs(v) >= kPviSampleClearance &&
           std::abs(v - 1.0) >= kPviSampleClearance && std::abs(v - t[k]) >= kPviSampleClearance;
  };
  PviResidual r;
  for (std::size_t k = 2; k + 2 < N; ++k) {
    bool ok = true;
    for (std::size_t j = k - 2; j <= k + 2; ++j) ok = ok && usable(j);
    if (!ok) {
      r.excluded.push_back(k);
      continue;
    }
    const Complex um2 = *u[k - 2], um1 = *u[k - 1], u0 = *u[k], up1 = *u[k + 1], up2 = *u[k + 2];
    const Complex du = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) / (12.0 * h);
    const Complex d2u = (-up2 + 16.0 * up1 - 30.0 * u0 + 16.0 * um1 - um2) / (12.0 * h * h);
    const double res = std::abs(d2u - pvi_rhs(P, t[k], u0, du));
    r.index.push_back(k);
    r.residual.push_back(res);
    r.max = std::max(r.max, res);
  }
  return r;
}

inline PviResidual pvi_residual(const DeformationTrack& track, const PviParameters& P) {
  std::vector<Complex> t;
  std::vector<std::optional<Complex>> u;
  for (const auto& s : track.samples) {
    t.push_back(s.params.at(0));
    if (s.u_infinite || s.u.empty()) u.emplace_back();
    else u.emplace_back(s.u[0]);
  }
  return pvi_residual(t, u, P);
}

// ---------------------------------------------------------------------------
// Movable-pole probes

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

inline constexpr double kBlowupThreshold = 1e3;

struct PoleProbe {
  PoleFit fit;
  Verdict verdict = Verdict::Inconclusive;
  double max_abs = 0.0;
  std::string diagnostics;
};

/// Fit the order of |u| ~ |t - t*|^{-k} from samples approaching t*; the
/// verdict is PASS when k lies in [lo, hi].
inline PoleProbe pole_probe(std::span<const Complex> t, std::span<const Complex> u,
                            Complex center_guess, double lo = 0.8, double hi = 1.2) {
  std::vector<double> mag;
  PoleProbe p;
  for (const auto& v : u) {
    mag.push_back(std::abs(v));
    p.max_abs = std::max(p.max_abs, mag.back());
  }
  if (!(p.max_abs > kBlowupThreshold)) {
    throw Error(ErrorCode::NoBlowup, "|u| stays below " + std::to_string(kBlowupThreshold));
  }
  p.fit = fit_pole_order(t, mag, center_guess, true);
  p.verdict = (p.fit.order >= lo && p.fit.order <= hi) ? Verdict::Pass : Verdict::Inconclusive;
  p.diagnostics = "order " + std::to_string(p.fit.order) + " +- " + std::to_string(p.fit.half_width) +
                  " from " + std::to_string(p.fit.samples_used) + " samples";
  return p;
}

struct Theorem5Probe {
  std::vector<double> orders;         // signed: sigma_k ~ |a - a*|^{order}
  std::vector<double> half_widths;
  std::vector<bool> blew_up;
  double bound = 0.0;                 // -n - 1 or -n
  Verdict verdict = Verdict::Inconclusive;
};

/// Fitted orders of each sigma_k along samples `a` of the moving coordinate,
/// compared with the lower bound -n - 1 (theta_inf = 0) or -n.
inline Theorem5Probe theorem5_probe(std::span<const Complex> a,
                                    const std::vector<std::vector<Complex>>& sigma,
                                    Complex center_guess, int n, bool theta_inf_zero,
                                    double slack = 0.05) {
  Theorem5Probe out;
  out.bound = theta_inf_zero ? -n - 1.0 : -static_cast<double>(n);
  bool any = false, all_ok = true;
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    std::vector<double> mag;
    double mx = 0.0;
    for (const auto& v : sigma[k]) {
      mag.push_back(std::abs(v));
      mx = std::max(mx, mag.back());
    }
    const bool blown = mx > kBlowupThreshold;
    out.blew_up.push_back(blown);
    if (!blown) {
      out.orders.push_back(0.0);
      out.half_widths.push_back(0.0);
      continue;
    }
    any = true;
    const auto f = fit_pole_order(a, mag, center_guess, true);
    out.orders.push_back(-f.order);
    out.half_widths.push_back(f.half_width);
    all_ok = all_ok && (-f.order >= out.bound - slack);
  }
  if (!any) throw Error(ErrorCode::NoBlowup, "no sigma_k exceeds the blow-up threshold");
  out.verdict = all_ok ? Verdict::Pass : Verdict::Inconclusive;
  return out;
}

/// Newton iteration for a zero of b_m as a function of pole `index`, using
/// d b_m / d a_index = (1 - 2 kappa) b_index.
inline std::optional<SchlesingerState> locate_leading_zero(SchlesingerState state, std::size_t index,
                                                           double tol = 1e-12, int max_iter = 40) {
  FlowOptions opt;
  opt.tol = tol;
  const Complex factor = 1.0 - 2.0 * state.system.infinity_exponent;
  if (std::abs(factor) < 1e-12) return std::nullopt;
  for (int it = 0; it < max_iter; ++it) {
    const Complex bm = weighted_upper_right(state.system);
    const Complex d = factor * state.system.residues[index](0, 1);
    if (std::abs(d) == 0.0) return std::nullopt;
    Complex step = -bm / d;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < state.system.size(); ++j)
      if (j != index) nearest = std::min(nearest, std::abs(state.system.poles[j] - state.system.poles[index]));
    if (std::abs(step) > 0.25 * nearest) step *= 0.25 * nearest / std::abs(step);
    auto target = state.system.poles;
    target[index] += step;
    try {
      state = flow_to(state, target, opt);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (std::abs(step) <= 1e-13 * (1.0 + std::abs(state.system.poles[index]))) return state;
  }
  return std::nullopt;
}

/// Samples approaching `target` along a straight line in pole `index`, at
/// distances d0 * 10^{-k / per_decade} down to d_end.
inline DeformationTrack approach(const SchlesingerState& state, std::size_t index, Complex target,
                                 double d_end, int per_decade = 8, double tol = 1e-12) {
  const Complex start = state.system.poles[index];
  const double d0 = std::abs(start - target);
  if (!(d0 > d_end)) throw Error(ErrorCode::InvalidArgument, "start is already within d_end");
  const Complex dir = (start - target) / d0;
  std::vector<std::vector<Complex>> pts{state.system.poles};
  for (int k = 1;; ++k) {
    const double d = d0 * std::pow(10.0, -static_cast<double>(k) / per_decade);
    if (d < d_end) break;
    auto p = state.system.poles;
    p[index] = target + d * dir;
    pts.push_back(std::move(p));
  }
  const auto shifts = ThetaData::from_system(state.system).shifts();
  FlowOptions opt;
  opt.tol = tol;
  return track_through(state, pts, shifts, opt);
}

}  // namespace isolab
