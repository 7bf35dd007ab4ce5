#pragma once

// Analytic continuation of fundamental matrices along piecewise paths made of
// straight segments and circular arcs, and monodromy generators of Fuchsian
// systems with respect to a basis of simple loops.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "isolab/algebra.hpp"
#include "isolab/ode.hpp"
#include "isolab/system.hpp"

namespace isolab {

struct LineSegment {
  Complex from;
  Complex to;
};

/// z = center + radius e^{i theta}, theta running from `start` to `end`
/// (end < start means clockwise).
struct ArcSegment {
  Complex center;
  double radius = 0.0;
  double start = 0.0;
  double end = 0.0;
};

using PathPiece = std::variant<LineSegment, ArcSegment>;

inline double piece_length(const PathPiece& p) {
  if (const auto* l = std::get_if<LineSegment>(&p)) return std::abs(l->to - l->from);
  const auto& a = std::get<ArcSegment>(p);
  return a.radius * std::abs(a.end - a.start);
}

/// Point and unit-speed derivative at arclength s along the piece.
inline std::pair<Complex, Complex> piece_point(const PathPiece& p, double s) {
  if (const auto* l = std::get_if<LineSegment>(&p)) {
    const double len = std::abs(l->to - l->from);
    const Complex dir = len > 0.0 ? (l->to - l->from) / len : Complex{};
    return {l->from + dir * s, dir};
  }
  const auto& a = std::get<ArcSegment>(p);
  const double sign = a.end >= a.start ? 1.0 : -1.0;
  const double th = a.start + sign * s / a.radius;
  const Complex e = std::polar(1.0, th);
  return {a.center + a.radius * e, Complex(0.0, sign) * e};
}

inline Complex piece_start(const PathPiece& p) { return piece_point(p, 0.0).first; }
inline Complex piece_end(const PathPiece& p) { return piece_point(p, piece_length(p)).first; }

/// Exact distance from a point to a piece.
inline double piece_distance(const PathPiece& p, Complex x) {
  if (const auto* l = std::get_if<LineSegment>(&p)) {
    const Complex d = l->to - l->from;
    const double len2 = std::norm(d);
    double t = len2 > 0.0 ? std::real((x - l->from) * std::conj(d)) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(l->from + t * d - x);
  }
  const auto& a = std::get<ArcSegment>(p);
  const double lo = std::min(a.start, a.end), hi = std::max(a.start, a.end);
  const Complex rel = x - a.center;
  if (hi - lo >= 2.0 * std::numbers::pi - 1e-15) return std::abs(std::abs(rel) - a.radius);
  double th = std::arg(rel);
  // Move th into [lo, lo + 2 pi).
  th = lo + std::fmod(std::fmod(th - lo, 2.0 * std::numbers::pi) + 2.0 * std::numbers::pi,
                      2.0 * std::numbers::pi);
  if (th <= hi) return std::abs(std::abs(rel) - a.radius);
  return std::min(std::abs(a.center + std::polar(a.radius, a.start) - x),
                  std::abs(a.center + std::polar(a.radius, a.end) - x));
}

/// Change of log(z - a) along the piece, with the argument followed
/// continuously. The piece must not pass through a.
inline Complex piece_log_increment(const PathPiece& p, Complex a) {
  if (const auto* l = std::get_if<LineSegment>(&p)) {
    return std::log((l->to - a) / (l->from - a));
  }
  const auto& arc = std::get<ArcSegment>(p);
  // Split into quarter turns so each principal log is unambiguous.
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(arc.end - arc.start) /
                                                            (0.5 * std::numbers::pi))));
  Complex acc = 0.0;
  Complex prev = arc.center + std::polar(arc.radius, arc.start) - a;
  for (int i = 1; i <= pieces; ++i) {
    const double th = arc.start + (arc.end - arc.start) * i / pieces;
    const Complex cur = arc.center + std::polar(arc.radius, th) - a;
    acc += std::log(cur / prev);
    prev = cur;
  }
  return acc;
}

class PathSpec {
 public:
  PathSpec() = default;
  explicit PathSpec(std::vector<PathPiece> pieces) : pieces_(std::move(pieces)) {}

  static PathSpec polyline(const std::vector<Complex>& waypoints) {
    std::vector<PathPiece> ps;
    for (std::size_t i = 1; i < waypoints.size(); ++i)
      ps.emplace_back(LineSegment{waypoints[i - 1], waypoints[i]});
    return PathSpec(std::move(ps));
  }

  /// Full counterclockwise circle starting at center + radius e^{i start}.
  static PathSpec circle(Complex center, double radius, double start = 0.0, int turns = 1) {
    return PathSpec({ArcSegment{center, radius, start, start + 2.0 * std::numbers::pi * turns}});
  }

  const std::vector<PathPiece>& pieces() const noexcept { return pieces_; }

  PathSpec& append(const PathPiece& p) {
    pieces_.push_back(p);
    return *this;
  }
  PathSpec& append(const PathSpec& o) {
    pieces_.insert(pieces_.end(), o.pieces_.begin(), o.pieces_.end());
    return *this;
  }

  Complex start() const { return piece_start(pieces_.front()); }
  Complex end() const { return piece_end(pieces_.back()); }

  double length() const {
    double s = 0.0;
    for (const auto& p : pieces_) s += piece_length(p);
    return s;
  }

  PathSpec reversed() const {
    std::vector<PathPiece> ps;
    for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it) {
      if (const auto* l = std::get_if<LineSegment>(&*it)) {
        ps.emplace_back(LineSegment{l->to, l->from});
      } else {
        const auto& a = std::get<ArcSegment>(*it);
        ps.emplace_back(ArcSegment{a.center, a.radius, a.end, a.start});
      }
    }
    return PathSpec(std::move(ps));
  }

  PathSpec translated(Complex shift) const {
    std::vector<PathPiece> ps;
    for (const auto& p : pieces_) {
      if (const auto* l = std::get_if<LineSegment>(&p)) {
        ps.emplace_back(LineSegment{l->from + shift, l->to + shift});
      } else {
        auto a = std::get<ArcSegment>(p);
        a.center += shift;
        ps.emplace_back(a);
      }
    }
    return PathSpec(std::move(ps));
  }

  double distance_to(Complex x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) d = std::min(d, piece_distance(p, x));
    return d;
  }

  /// Throws ClearanceViolation when the path comes closer than `clearance`
  /// to any excluded point.
  void check_clearance(const std::vector<Complex>& excluded, double clearance) const {
    for (std::size_t i = 0; i < excluded.size(); ++i) {
      const double d = distance_to(excluded[i]);
      if (d < clearance) {
        throw Error(ErrorCode::ClearanceViolation,
                    "path passes within " + std::to_string(d) + " of excluded point " +
                        std::to_string(i) + " (clearance " + std::to_string(clearance) + ")");
      }
    }
  }

  Complex log_increment(Complex a) const {
    Complex acc = 0.0;
    for (const auto& p : pieces_) acc += piece_log_increment(p, a);
    return acc;
  }

  /// Winding number around a from discrete argument accumulation over
  /// `samples_per_piece` points per piece (closed paths only).
  int winding_number(Complex a, int samples_per_piece = 256) const {
    double total = 0.0;
    Complex prev = start() - a;
    for (const auto& p : pieces_) {
      const double len = piece_length(p);
      for (int k = 1; k <= samples_per_piece; ++k) {
        const Complex cur = piece_point(p, len * k / samples_per_piece).first - a;
        total += std::arg(cur / prev);
        prev = cur;
      }
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
  }

 private:
  std::vector<PathPiece> pieces_;
};

struct TransportOptions {
  double tol = 1e-10;
  std::vector<Complex> excluded;  // singular points to keep clear of
  double clearance = 0.0;
};

/// Continue Y' = B(z) Y along `path` from Y(path.start()) = y0. `coefficient`
/// maps z to the p x p coefficient matrix.
template <class Coefficient>
CMatrix continue_solution(Coefficient&& coefficient, const PathSpec& path, const CMatrix& y0,
                          const TransportOptions& opt, ode::Stats* stats = nullptr) {
  if (opt.clearance > 0.0) path.check_clearance(opt.excluded, opt.clearance);
  if (std::abs(det(y0)) == 0.0) throw Error(ErrorCode::SingularMatrix, "det Y0 = 0");
  const int p = y0.dim();
  ode::State y(y0.entries().begin(), y0.entries().end());
  ode::Options o;
  o.tol = opt.tol;
  for (const auto& piece : path.pieces()) {
    const double len = piece_length(piece);
    if (len == 0.0) continue;
    auto rhs = [&](double s, std::span<const Complex> in, std::span<Complex> out) {
      const auto [z, dz] = piece_point(piece, s);
      const CMatrix b = coefficient(z);
      for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c) {
          Complex acc = 0.0;
          for (int k = 0; k < p; ++k) acc += b(r, k) * in[k * p + c];
          out[r * p + c] = acc * dz;
        }
    };
    ode::integrate(rhs, 0.0, len, y, o, stats);
  }
  return CMatrix::from_row_major(p, y);
}

inline CMatrix continue_solution(const FuchsianSystem& sys, const PathSpec& path,
                                 const CMatrix& y0, double tol, double clearance = 0.0,
                                 ode::Stats* stats = nullptr) {
  TransportOptions opt{tol, sys.poles, clearance};
  return continue_solution([&](Complex z) { return sys.coefficient(z); }, path, y0, opt, stats);
}

/// Relative defect of the Liouville identity
/// det Y_end = det Y0 exp(sum_i tr B_i * Delta log(z - a_i)).
inline double liouville_residual(const FuchsianSystem& sys, const PathSpec& path,
                                 const CMatrix& y0, const CMatrix& y_end) {
  Complex exponent = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i)
    exponent += trace(sys.residues[i]) * path.log_increment(sys.poles[i]);
  const Complex expected = det(y0) * std::exp(exponent);
  return std::abs(det(y_end) - expected) / std::abs(expected);
}

/// Base point plus one simple counterclockwise loop per pole. Loop i runs
/// along a straight spoke from the base point to a circle around a_i, once
/// around the circle, and back.
struct LoopBasis {
  Complex base_point;
  std::vector<Complex> poles;
  std::vector<double> radii;
  std::vector<PathSpec> loops;
  /// Pole indices in the order whose loop product is contractible:
  /// G[order[0]] G[order[1]] ... = monodromy of a large loop enclosing all poles.
  std::vector<std::size_t> order;
  double clearance = 0.0;
  bool homotopy_warning = false;

  static double default_radius(const std::vector<Complex>& poles, std::size_t i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < poles.size(); ++j)
      if (j != i) nearest = std::min(nearest, std::abs(poles[i] - poles[j]));
    return std::min(0.4 * nearest, 0.25);
  }

  static PathSpec make_loop(Complex base, Complex pole, double radius) {
    const double phi = std::arg(base - pole);
    const Complex touch = pole + std::polar(radius, phi);
    PathSpec loop = PathSpec::polyline({base, touch});
    loop.append(ArcSegment{pole, radius, phi, phi + 2.0 * std::numbers::pi});
    loop.append(LineSegment{touch, base});
    return loop;
  }

  /// Loops around `poles` from `base_point`, with fixed radii.
  static LoopBasis build(Complex base_point, const std::vector<Complex>& poles,
                         const std::vector<double>& radii) {
    LoopBasis b;
    b.base_point = base_point;
    b.poles = poles;
    b.radii = radii;
    for (std::size_t i = 0; i < poles.size(); ++i)
      b.loops.push_back(make_loop(base_point, poles[i], radii[i]));
    // Counterclockwise big loop from the base point meets the poles in order of
    // increasing argument; with the right action Y -> Y G this composes to
    // G_last ... G_first, so the contractible product lists decreasing argument.
    b.order.resize(poles.size());
    for (std::size_t i = 0; i < poles.size(); ++i) b.order[i] = i;
    const Complex centroid = [&] {
      Complex c = 0.0;
      for (const auto& a : poles) c += a;
      return c / static_cast<double>(poles.size());
    }();
    // Argument measured from the direction opposite to the centroid so the
    // cut of arg lies behind the base point.
    const Complex ref = (centroid - base_point) / std::abs(centroid - base_point);
    std::sort(b.order.begin(), b.order.end(), [&](std::size_t x, std::size_t y) {
      return std::arg((poles[x] - base_point) / ref) > std::arg((poles[y] - base_point) / ref);
    });
    double min_r = std::numeric_limits<double>::infinity();
    for (double r : radii) min_r = std::min(min_r, r);
    b.clearance = 0.5 * min_r;
    return b;
  }

  /// Default basis: radii min(0.4 * nearest distance, 0.25) and a base point
  /// chosen among candidates on a circle around the poles to maximize the
  /// clearance of all spokes.
  static LoopBasis standard(const std::vector<Complex>& poles,
                            std::optional<Complex> base_point = {}) {
    std::vector<double> radii;
    for (std::size_t i = 0; i < poles.size(); ++i) radii.push_back(default_radius(poles, i));
    if (base_point) {
      auto b = build(*base_point, poles, radii);
      b.validate();
      return b;
    }
    Complex centroid = 0.0;
    double spread = 0.0;
    for (const auto& a : poles) centroid += a;
    centroid /= static_cast<double>(poles.size());
    for (const auto& a : poles) spread = std::max(spread, std::abs(a - centroid));
    const double reach = spread + 1.0;
    double best = -1.0;
    Complex best_point;
    constexpr int kCandidates = 32;
    for (int k = 0; k < kCandidates; ++k) {
      // Start straight below the centroid and go around.
      const double th = -0.5 * std::numbers::pi + 2.0 * std::numbers::pi * k / kCandidates;
      const Complex z0 = centroid + std::polar(reach, th);
      const auto trial = build(z0, poles, radii);
      const double margin = trial.spoke_margin();
      if (margin > best + 1e-12) {
        best = margin;
        best_point = z0;
      }
    }
    auto b = build(best_point, poles, radii);
    b.validate();
    return b;
  }

  /// Minimum over loops of (distance to foreign poles) / clearance radius.
  double spoke_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < loops.size(); ++i)
      for (std::size_t j = 0; j < poles.size(); ++j)
        if (i != j) m = std::min(m, loops[i].distance_to(poles[j]) / radii[j]);
    return m;
  }

  /// Clearance and winding-number checks.
  void validate() const {
    for (std::size_t i = 0; i < loops.size(); ++i) {
      loops[i].check_clearance(poles, clearance);
      for (std::size_t j = 0; j < poles.size(); ++j) {
        const int w = loops[i].winding_number(poles[j]);
        if (w != (i == j ? 1 : 0)) {
          throw Error(ErrorCode::ClearanceViolation,
                      "loop " + std::to_string(i) + " winds " + std::to_string(w) +
                          " times around pole " + std::to_string(j));
        }
      }
    }
  }

  /// Same base point, radii and ordering with loops re-centered on moved poles.
  /// Flags a homotopy warning when a pole moved by at least its loop radius.
  LoopBasis transported(const std::vector<Complex>& new_poles) const {
    LoopBasis b = *this;
    b.poles = new_poles;
    b.loops.clear();
    for (std::size_t i = 0; i < new_poles.size(); ++i) {
      b.loops.push_back(make_loop(base_point, new_poles[i], radii[i]));
      if (std::abs(new_poles[i] - poles[i]) >= radii[i]) b.homotopy_warning = true;
    }
    return b;
  }
};

struct MonodromyRep {
  Complex base_point;
  std::vector<CMatrix> generators;     // indexed by pole
  std::vector<std::size_t> order;      // contractible product order
  std::vector<double> liouville;       // per-loop Liouville residuals

  CMatrix ordered_product() const {
    CMatrix prod = CMatrix::identity(generators.front().dim());
    for (auto i : order) prod = prod * generators[i];
    return prod;
  }

  /// ||G_order[0] ... G_order[n-1] - I||.
  double relation_residual() const {
    return norm(ordered_product() - CMatrix::identity(generators.front().dim()));
  }

  /// (tr G_i for all i, tr G_i G_j for i < j, det G_i for all i).
  std::vector<Complex> fingerprint() const {
    std::vector<Complex> f;
    for (const auto& g : generators) f.push_back(trace(g));
    for (std::size_t i = 0; i < generators.size(); ++i)
      for (std::size_t j = i + 1; j < generators.size(); ++j)
        f.push_back(trace(generators[i] * generators[j]));
    for (const auto& g : generators) f.push_back(det(g));
    return f;
  }
};

/// Generators G_i with Y continued along loop i equal to Y G_i, Y(z0) = I.
inline MonodromyRep monodromy(const FuchsianSystem& sys, const LoopBasis& basis, double tol,
                              ode::Stats* stats = nullptr) {
  if (basis.poles.size() != sys.size()) {
    throw Error(ErrorCode::ShapeMismatch, "loop basis does not match the system");
  }
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (std::abs(basis.poles[i] - sys.poles[i]) >= basis.radii[i]) {
      throw Error(ErrorCode::ClearanceViolation, "loop basis is centered away from pole " +
                                                     std::to_string(i));
    }
  }
  MonodromyRep rep;
  rep.base_point = basis.base_point;
  rep.order = basis.order;
  const CMatrix id = CMatrix::identity(sys.dim());
  for (const auto& loop : basis.loops) {
    CMatrix g = continue_solution(sys, loop, id, tol, basis.clearance, stats);
    rep.liouville.push_back(liouville_residual(sys, loop, id, g));
    rep.generators.push_back(std::move(g));
  }
  return rep;
}

inline double rep_fingerprint_distance(const MonodromyRep& r1, const MonodromyRep& r2) {
  if (r1.generators.size() != r2.generators.size()) {
    throw Error(ErrorCode::ShapeMismatch, "representations have different sizes");
  }
  const auto f1 = r1.fingerprint();
  const auto f2 = r2.fingerprint();
  double d = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) d = std::max(d, std::abs(f1[i] - f2[i]));
  return d;
}

/// Number of generators within 1e-8 of a scalar matrix.
inline std::size_t is_smaller(const MonodromyRep& rep, double tol = 1e-8) {
  std::size_t count = 0;
  for (const auto& g : rep.generators) {
    const Complex lam = trace(g) / static_cast<double>(g.dim());
    if (norm(g - CMatrix::identity(g.dim()) * lam) <= tol) ++count;
  }
  return count;
}

}  // namespace isolab
