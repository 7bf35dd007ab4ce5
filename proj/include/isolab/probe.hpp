#pragma once

// Least-squares estimation of pole orders from samples approaching a
// suspected singularity: log|f| ~ c + k * (-log|t - t*|), with t* refined by
// a compass search that minimizes the residual sum of squares.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "isolab/errors.hpp"

namespace isolab {

struct PoleFit {
  double order = 0.0;       // k in |f| ~ |t - t*|^{-k}
  double half_width = 0.0;  // 95% confidence half-width of k
  std::complex<double> center;
  std::size_t samples_used = 0;
  double rss = 0.0;
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
  double slope_se = 0.0;
  std::size_t n = 0;
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  LineFit f;
  f.n = x.size();
  if (f.n < 2) return f;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= f.n;
  my /= f.n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    f.rss += r * r;
  }
  if (f.n > 2 && sxx > 0.0) f.slope_se = std::sqrt(f.rss / (f.n - 2) / sxx);
  return f;
}

// Fit over the samples whose distance to `center` lies within one decade of
// the closest sample.
inline LineFit decade_fit(std::span<const std::complex<double>> t, std::span<const double> mag,
                          std::complex<double> center) {
  double dmin = std::numeric_limits<double>::infinity();
  for (const auto& ti : t) dmin = std::min(dmin, std::abs(ti - center));
  std::vector<double> xs, ys;
  if (!(dmin > 0.0)) return {};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = std::abs(t[i] - center);
    if (d <= 10.0 * dmin * (1.0 + 1e-9) && mag[i] > 0.0) {
      xs.push_back(-std::log(d));
      ys.push_back(std::log(mag[i]));
    }
  }
  return least_squares(xs, ys);
}

}  // namespace detail

/// Fit the pole order of |f| at samples t approaching `center_guess`. With
/// `refine`, t* is moved to minimize the fit residual.
inline PoleFit fit_pole_order(std::span<const std::complex<double>> t, std::span<const double> mag,
                              std::complex<double> center_guess, bool refine = true) {
  if (t.size() != mag.size() || t.size() < 4) {
    throw Error(ErrorCode::InvalidArgument, "pole fit needs at least 4 samples");
  }
  std::complex<double> center = center_guess;
  double dmin = std::numeric_limits<double>::infinity();
  for (const auto& ti : t) dmin = std::min(dmin, std::abs(ti - center));
  auto score = [&](std::complex<double> c) {
    const auto f = detail::decade_fit(t, mag, c);
    return f.n >= 3 ? f.rss / f.n : std::numeric_limits<double>::infinity();
  };
  if (refine) {
    double best = score(center);
    double step = 0.25 * dmin;
    const std::complex<double> dirs[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (int moves = 0; step > 1e-9 * dmin && moves < 2000; ++moves) {
      bool improved = false;
      for (const auto& d : dirs) {
        const auto trial = center + step * d;
        const double s = score(trial);
        if (s < best) {
          best = s;
          center = trial;
          improved = true;
          break;
        }
      }
      if (!improved) step *= 0.5;
    }
  }
  const auto f = detail::decade_fit(t, mag, center);
  PoleFit out;
  out.order = f.slope;
  out.center = center;
  out.samples_used = f.n;
  out.rss = f.rss;
  if (f.n > 2) {
    boost::math::students_t dist(static_cast<double>(f.n - 2));
    out.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * f.slope_se;
  }
  return out;
}

}  // namespace isolab
