#pragma once

// Schlesinger isomonodromic flow in the pole positions,
//   dB_i = -sum_{j != i} [B_i, B_j] / (a_i - a_j) d(a_i - a_j),
// with simultaneous quadrature of
//   d ln tau = sum_{i < j} tr(B_i B_j) / (a_i - a_j) d(a_i - a_j).

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "isolab/algebra.hpp"
#include "isolab/ode.hpp"
#include "isolab/probe.hpp"
#include "isolab/system.hpp"

namespace isolab {

struct SchlesingerState {
  FuchsianSystem system;
  Complex ln_tau{};

  const std::vector<Complex>& poles() const { return system.poles; }
  const std::vector<CMatrix>& residues() const { return system.residues; }

  double max_residue_norm() const {
    double m = 0.0;
    for (const auto& b : system.residues) m = std::max(m, norm(b));
    return m;
  }
};

/// Piecewise-linear path in the space of pole vectors.
struct ParamPath {
  std::vector<std::vector<Complex>> waypoints;
  double min_separation = 1e-3;
  bool blowup_probe = false;  // skip the separation floor

  static ParamPath straight(std::vector<Complex> from, std::vector<Complex> to) {
    return ParamPath{{std::move(from), std::move(to)}};
  }

  double length() const {
    double l = 0.0;
    for (std::size_t k = 1; k < waypoints.size(); ++k) l += segment_length(k);
    return l;
  }

  double segment_length(std::size_t k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < waypoints[k].size(); ++i)
      s += std::norm(waypoints[k][i] - waypoints[k - 1][i]);
    return std::sqrt(s);
  }

  /// Smallest |a_i(s) - a_j(s)| along the path (exact on linear segments).
  double min_pair_distance() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < waypoints.size(); ++k) {
      const auto& p0 = waypoints[k - 1];
      const auto& p1 = waypoints[k];
      for (std::size_t i = 0; i < p0.size(); ++i)
        for (std::size_t j = i + 1; j < p0.size(); ++j) {
          const Complex d0 = p0[i] - p0[j];
          const Complex dd = (p1[i] - p1[j]) - d0;
          double t = std::norm(dd) > 0.0 ? -std::real(d0 * std::conj(dd)) / std::norm(dd) : 0.0;
          t = std::clamp(t, 0.0, 1.0);
          m = std::min(m, std::abs(d0 + t * dd));
        }
    }
    return m;
  }

  void validate(std::size_t n) const {
    if (waypoints.size() < 2) throw Error(ErrorCode::InvalidArgument, "path needs two waypoints");
    for (const auto& w : waypoints)
      if (w.size() != n) throw Error(ErrorCode::ShapeMismatch, "waypoint size differs from pole count");
    if (!blowup_probe && min_pair_distance() < min_separation) {
      throw Error(ErrorCode::PoleCollision, "path brings two poles within " +
                                                std::to_string(min_pair_distance()));
    }
  }
};

namespace detail {

inline void check_poles(std::span<const Complex> a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if (std::abs(a[i] - a[j]) < 1e-12) {
        throw Error(ErrorCode::PoleCollision,
                    "poles " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
}

}  // namespace detail

/// Residue derivatives contracted with the tangent vector da.
inline std::vector<CMatrix> schlesinger_rhs(const FuchsianSystem& sys, std::span<const Complex> da) {
  detail::check_poles(sys.poles);
  const std::size_t n = sys.size();
  std::vector<CMatrix> d(n, CMatrix(sys.dim()));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Complex w = (da[i] - da[j]) / (sys.poles[i] - sys.poles[j]);
      if (w == 0.0) continue;
      const CMatrix c = commutator(sys.residues[i], sys.residues[j]) * w;
      d[i] -= c;
      d[j] += c;
    }
  return d;
}

inline Complex tau_increment(const FuchsianSystem& sys, std::span<const Complex> da) {
  detail::check_poles(sys.poles);
  Complex acc = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i)
    for (std::size_t j = i + 1; j < sys.size(); ++j) {
      const Complex w = da[i] - da[j];
      if (w == 0.0) continue;
      acc += trace(sys.residues[i] * sys.residues[j]) * w / (sys.poles[i] - sys.poles[j]);
    }
  return acc;
}

class BlowupError : public Error {
 public:
  BlowupError(SchlesingerState last, double arclength, const std::string& what)
      : Error(ErrorCode::BlowupDetected, what), last_(std::move(last)), arclength_(arclength) {}
  const SchlesingerState& last_state() const noexcept { return last_; }
  double arclength() const noexcept { return arclength_; }

 private:
  SchlesingerState last_;
  double arclength_;
};

struct FlowOptions {
  double tol = 1e-10;
  double ceiling = 1e8;
  /// Called after each accepted step with the arclength travelled so far.
  std::function<void(double, const SchlesingerState&)> observer;
};

namespace detail {

inline ode::State pack(const SchlesingerState& st) {
  ode::State y;
  for (const auto& b : st.system.residues) y.insert(y.end(), b.entries().begin(), b.entries().end());
  y.push_back(st.ln_tau);
  return y;
}

inline void unpack(std::span<const Complex> y, SchlesingerState& st) {
  const int p = st.system.dim();
  const std::size_t block = static_cast<std::size_t>(p * p);
  for (std::size_t i = 0; i < st.system.size(); ++i)
    st.system.residues[i] = CMatrix::from_row_major(p, y.subspan(i * block, block));
  st.ln_tau = y[st.system.size() * block];
}

}  // namespace detail

/// Integrate the Schlesinger equation along `path`, accumulating ln tau.
/// Throws BlowupError when max ||B_i|| exceeds the ceiling.
inline SchlesingerState flow(SchlesingerState state, const ParamPath& path,
                             const FlowOptions& opt = {}, ode::Stats* stats = nullptr) {
  const std::size_t n = state.system.size();
  path.validate(n);
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(path.waypoints.front()[i] - state.system.poles[i]) > 1e-12 * (1.0 + std::abs(state.system.poles[i]))) {
      throw Error(ErrorCode::InvalidArgument, "path does not start at the current poles");
    }
  const int p = state.system.dim();
  const std::size_t block = static_cast<std::size_t>(p * p);
  double travelled = 0.0;

  for (std::size_t k = 1; k < path.waypoints.size(); ++k) {
    const auto& from = path.waypoints[k - 1];
    const auto& to = path.waypoints[k];
    const double len = path.segment_length(k);
    if (len == 0.0) continue;
    std::vector<Complex> dir(n);
    for (std::size_t i = 0; i < n; ++i) dir[i] = (to[i] - from[i]) / len;

    SchlesingerState work = state;
    auto rhs = [&](double s, std::span<const Complex> y, std::span<Complex> dy) {
      for (std::size_t i = 0; i < n; ++i) work.system.poles[i] = from[i] + dir[i] * s;
      detail::unpack(y, work);
      const auto d = schlesinger_rhs(work.system, dir);
      for (std::size_t i = 0; i < n; ++i)
        std::copy(d[i].entries().begin(), d[i].entries().end(), dy.begin() + i * block);
      dy[n * block] = tau_increment(work.system, dir);
    };
    bool blown = false;
    double blown_at = 0.0;
    auto observer = [&](double s, const ode::State& y) {
      SchlesingerState snap = state;
      for (std::size_t i = 0; i < n; ++i) snap.system.poles[i] = from[i] + dir[i] * s;
      detail::unpack(y, snap);
      if (opt.observer) opt.observer(travelled + s, snap);
      if (snap.max_residue_norm() > opt.ceiling || !std::isfinite(snap.max_residue_norm())) {
        blown = true;
        blown_at = s;
        state = snap;
        return false;
      }
      return true;
    };
    ode::State y = detail::pack(state);
    ode::Options o;
    o.tol = opt.tol;
    ode::integrate(rhs, 0.0, len, y, o, stats, observer);
    if (blown) {
      throw BlowupError(state, travelled + blown_at,
                        "max residue norm " + std::to_string(state.max_residue_norm()) +
                            " exceeds ceiling after arclength " +
                            std::to_string(travelled + blown_at));
    }
    state.system.poles = to;
    detail::unpack(y, state);
    travelled += len;
  }
  return state;
}

/// Straight flow to new pole positions.
inline SchlesingerState flow_to(const SchlesingerState& state, std::vector<Complex> target,
                                const FlowOptions& opt = {}) {
  ParamPath path = ParamPath::straight(state.system.poles, std::move(target));
  path.min_separation = 0.0;
  return flow(state, path, opt);
}

/// b(a) = sum_i b_i^{12}(a) a_i.
inline Complex weighted_upper_right(const FuchsianSystem& sys) {
  Complex b = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) b += sys.residues[i](0, 1) * sys.poles[i];
  return b;
}

struct Lemma1Result {
  double residual = 0.0;              // max over probed directions
  std::vector<double> per_direction;  // indexed like `directions`
};

/// Central-difference check of db = (2 theta + 1) sum_i b_i^{12} da_i for
/// sum B_i = diag(theta, -theta), probing coordinate directions `directions`
/// (all poles when empty) with step h.
inline Lemma1Result lemma1_residual(const SchlesingerState& state, double h,
                                    std::vector<std::size_t> directions = {}, double tol = 1e-13) {
  if (state.system.normalization != Normalization::DiagonalK || state.system.dim() != 2) {
    throw Error(ErrorCode::InvalidArgument, "identity requires a 2x2 DIAGONAL_K family");
  }
  const Complex theta = -state.system.infinity_exponent;
  if (directions.empty())
    for (std::size_t j = 0; j < state.system.size(); ++j) directions.push_back(j);
  FlowOptions opt;
  opt.tol = tol;
  Lemma1Result out;
  for (auto j : directions) {
    auto plus = state.system.poles;
    auto minus = state.system.poles;
    plus[j] += h;
    minus[j] -= h;
    const Complex bp = weighted_upper_right(flow_to(state, plus, opt).system);
    const Complex bm = weighted_upper_right(flow_to(state, minus, opt).system);
    const Complex fd = (bp - bm) / (2.0 * h);
    const Complex expected = (2.0 * theta + 1.0) * state.system.residues[j](0, 1);
    out.per_direction.push_back(std::abs(fd - expected));
    out.residual = std::max(out.residual, out.per_direction.back());
  }
  return out;
}

struct CommutingOracle {
  CMatrix fundamental;  // prod_i (z - a_i)^{B_i}, principal branches
  Complex tau;          // prod_{i<j} (a_i - a_j)^{tr B_i B_j}, principal branches
  Complex ln_tau;
};

/// Closed-form isomonodromic fundamental matrix and tau function of a family
/// with constant pairwise commuting residues.
inline CommutingOracle commuting_oracle(std::span<const CMatrix> residues,
                                        std::span<const Complex> poles, Complex z) {
  for (std::size_t i = 0; i < residues.size(); ++i)
    for (std::size_t j = i + 1; j < residues.size(); ++j)
      if (norm(commutator(residues[i], residues[j])) > 1e-12) {
        throw Error(ErrorCode::NotCommuting,
                    "residues " + std::to_string(i) + " and " + std::to_string(j) + " do not commute");
      }
  CommutingOracle out;
  out.fundamental = CMatrix::identity(residues.front().dim());
  for (std::size_t i = 0; i < residues.size(); ++i)
    out.fundamental = out.fundamental * mat_power(z - poles[i], residues[i]);
  out.ln_tau = 0.0;
  for (std::size_t i = 0; i < residues.size(); ++i)
    for (std::size_t j = i + 1; j < residues.size(); ++j)
      out.ln_tau += trace(residues[i] * residues[j]) * std::log(poles[i] - poles[j]);
  out.tau = std::exp(out.ln_tau);
  return out;
}

/// ln tau increment of a commuting family along a straight path between pole
/// vectors, with the branch of log(a_i - a_j) followed continuously.
inline Complex commuting_ln_tau_increment(std::span<const CMatrix> residues,
                                          const ParamPath& path) {
  Complex acc = 0.0;
  for (std::size_t k = 1; k < path.waypoints.size(); ++k)
    for (std::size_t i = 0; i < residues.size(); ++i)
      for (std::size_t j = i + 1; j < residues.size(); ++j) {
        const Complex d0 = path.waypoints[k - 1][i] - path.waypoints[k - 1][j];
        const Complex d1 = path.waypoints[k][i] - path.waypoints[k][j];
        acc += trace(residues[i] * residues[j]) * std::log(d1 / d0);
      }
  return acc;
}

struct BlowupProbe {
  bool blew_up = false;
  PoleFit fit;             // order of max ||B_i|| in the arclength parameter
  double arclength = 0.0;  // where the ceiling was crossed
  std::size_t samples = 0;
};

/// Follow `path` until the residues exceed `ceiling` and fit the growth
/// order of max ||B_i|| against the distance to the estimated blow-up point.
inline BlowupProbe probe_blowup(const SchlesingerState& state, ParamPath path,
                                double ceiling = 1e8, double tol = 1e-10) {
  path.blowup_probe = true;
  std::vector<std::complex<double>> s;
  std::vector<double> mags;
  FlowOptions opt;
  opt.tol = tol;
  opt.ceiling = ceiling;
  opt.observer = [&](double arclength, const SchlesingerState& st) {
    s.emplace_back(arclength, 0.0);
    mags.push_back(st.max_residue_norm());
  };
  BlowupProbe out;
  try {
    flow(state, path, opt);
    return out;
  } catch (const BlowupError& e) {
    out.blew_up = true;
    out.arclength = e.arclength();
  }
  out.samples = s.size();
  if (s.size() >= 4) {
    // The singular point lies just beyond the last accepted step.
    const double last = s.back().real();
    const double prev = s[s.size() - 2].real();
    out.fit = fit_pole_order(s, mags, {last + (last - prev), 0.0}, true);
  }
  return out;
}

}  // namespace isolab
