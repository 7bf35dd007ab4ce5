#pragma once

// Dormand-Prince 5(4) with PI step control on complex state vectors.
// Error is controlled per unit of the independent variable: a step of length
// h is accepted when the embedded error estimate is below tol * h (scaled by
// 1 + |y|), so the accumulated error over an interval of length L stays of
// order tol * L.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "isolab/errors.hpp"

namespace isolab::ode {

using Complex = std::complex<double>;
using State = std::vector<Complex>;

struct Options {
  double tol = 1e-10;
  double initial_step = 0.0;  // 0 picks 1/64 of the interval
  double max_step = 0.0;      // 0 means unbounded
  double min_step_fraction = 1e-13;
  std::size_t max_steps = 1'000'000;
};

struct Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_calls = 0;
  std::size_t noise_floor = 0;  // steps accepted at the roundoff floor
};

namespace detail {

struct Tableau {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrate y' = f(s, y) from s0 to s1 (s1 > s0). `rhs(s, y, dy)` writes the
/// derivative; `observer(s, y)` is called after each accepted step and may
/// return false to stop early. Returns the value of s reached.
inline constexpr double kRoundoffAllowance = 64.0 * std::numeric_limits<double>::epsilon();

template <class Rhs, class Observer>
double integrate(Rhs&& rhs, double s0, double s1, State& y, const Options& opt, Stats* stats,
                 Observer&& observer) {
  using T = detail::Tableau;
  const std::size_t n = y.size();
  const double span = s1 - s0;
  if (span <= 0.0) return s0;
  if (n == 0) return s1;

  std::array<State, 7> k;
  for (auto& v : k) v.assign(n, Complex{});
  State tmp(n), ynew(n);
  Stats local;

  auto call = [&](double s, const State& in, State& out) {
    rhs(s, std::span<const Complex>(in), std::span<Complex>(out));
    ++local.rhs_calls;
  };

  double h = opt.initial_step > 0.0 ? opt.initial_step : span / 64.0;
  if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
  const double h_min = opt.min_step_fraction * std::max(span, 1e-300);
  double s = s0;
  double err_prev = 1.0;
  double reject_h = 0.0, reject_ratio = 0.0;
  call(s, y, k[0]);

  while (s < s1) {
    if (local.accepted + local.rejected >= opt.max_steps) {
      throw Error(ErrorCode::StepUnderflow, "step budget exhausted");
    }
    bool last = false;
    if (s + h >= s1) {
      h = s1 - s;
      last = true;
    }
    auto stage = [&](int out, double c, std::initializer_list<std::pair<int, double>> terms) {
      for (std::size_t i = 0; i < n; ++i) {
        Complex acc = y[i];
        for (const auto& [idx, coef] : terms) acc += h * coef * k[idx][i];
        tmp[i] = acc;
      }
      call(s + c * h, tmp, k[out]);
    };
    stage(1, T::c2, {{0, T::a21}});
    stage(2, T::c3, {{0, T::a31}, {1, T::a32}});
    stage(3, T::c4, {{0, T::a41}, {1, T::a42}, {2, T::a43}});
    stage(4, T::c5, {{0, T::a51}, {1, T::a52}, {2, T::a53}, {3, T::a54}});
    stage(5, 1.0, {{0, T::a61}, {1, T::a62}, {2, T::a63}, {3, T::a64}, {4, T::a65}});
    for (std::size_t i = 0; i < n; ++i) {
      ynew[i] = y[i] + h * (T::b1 * k[0][i] + T::b3 * k[2][i] + T::b4 * k[3][i] +
                            T::b5 * k[4][i] + T::b6 * k[5][i]);
    }
    call(s + h, ynew, k[6]);

    // Error per unit step, with an allowance for roundoff in the estimate
    // itself so that large derivatives cannot force h to zero.
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope = std::max({slope, std::abs(k[0][i]), std::abs(k[6][i])});
    double ratio = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Complex e = h * (T::e1 * k[0][i] + T::e3 * k[2][i] + T::e4 * k[3][i] +
                             T::e5 * k[4][i] + T::e6 * k[5][i] + T::e7 * k[6][i]);
      const double scale = 1.0 + std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double r = std::abs(e) / (h * (opt.tol * scale + kRoundoffAllowance * slope));
      // std::max drops NaN, so non-finite values are propagated explicitly.
      if (!std::isfinite(r) || !std::isfinite(std::abs(ynew[i]))) {
        ratio = std::numeric_limits<double>::infinity();
        break;
      }
      ratio = std::max(ratio, r);
    }
    if (!std::isfinite(ratio)) {
      h *= 0.2;
      ++local.rejected;
      if (h < h_min) throw Error(ErrorCode::StepUnderflow, "non-finite state");
      continue;
    }

    // Truncation error per unit step falls like h^4; when halving h leaves
    // the ratio unchanged the estimate is rhs roundoff and the step is taken.
    const bool noise_floor =
        reject_h > 0.0 && h <= 0.5 * reject_h && ratio > 0.5 * reject_ratio && ratio < 100.0;
    if (noise_floor) ++local.noise_floor;
    if (ratio <= 1.0 || noise_floor) {
      reject_h = 0.0;
      s = last ? s1 : s + h;
      y.swap(ynew);
      k[0].swap(k[6]);
      ++local.accepted;
      double fac = 0.9 * std::pow(std::max(ratio, 1e-10), -0.7 / 5.0) *
                   std::pow(err_prev, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(ratio, 1e-4);
      h *= fac;
      if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
      if (!observer(s, std::as_const(y))) break;
    } else {
      ++local.rejected;
      if (reject_h == 0.0) {
        reject_h = h;
        reject_ratio = ratio;
      }
      h *= std::clamp(0.9 * std::pow(ratio, -1.0 / 5.0), 0.1, 0.9);
      if (h < h_min) {
        throw Error(ErrorCode::StepUnderflow,
                    "step " + std::to_string(h) + " below " + std::to_string(h_min));
      }
    }
  }
  if (stats) {
    stats->accepted += local.accepted;
    stats->rejected += local.rejected;
    stats->rhs_calls += local.rhs_calls;
    stats->noise_floor += local.noise_floor;
  }
  return s;
}

template <class Rhs>
double integrate(Rhs&& rhs, double s0, double s1, State& y, const Options& opt,
                 Stats* stats = nullptr) {
  return integrate(std::forward<Rhs>(rhs), s0, s1, y, opt, stats,
                   [](double, const State&) { return true; });
}

}  // namespace isolab::ode
