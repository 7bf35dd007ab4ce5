#pragma once

// Self-verification suite run by `isolab verify`: every invariant family is
// exercised on seeded reference cases and recorded as a Check.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "isolab/algebra.hpp"
#include "isolab/cli/manifest.hpp"
#include "isolab/fuchsian.hpp"
#include "isolab/painleve.hpp"
#include "isolab/sampling.hpp"
#include "isolab/schlesinger.hpp"
#include "isolab/transport.hpp"

namespace isolab::cli {

struct SuiteOptions {
  std::uint64_t seed = 0;
  double threshold_scale = 1.0;  // multiplies every tolerance
  double tol = 1e-10;            // integrator tolerance
};

namespace suite {

inline sampling::Rng rng_for(const SuiteOptions& o, std::uint64_t salt) {
  return sampling::Rng(o.seed * 0x9E3779B97F4A7C15ull + salt);
}

inline CMatrix random_invertible(sampling::Rng& rng) {
  for (;;) {
    const CMatrix g = sampling::random_matrix(rng, rng.uniform(0.1, 7.0));
    if (norm(g) <= 10.0 && std::abs(det(g)) > 1e-3) return g;
  }
}

inline void log_branch(Manifest& m, const SuiteOptions& o, int count) {
  auto rng = rng_for(o, 1);
  double recon = 0.0, branch = 0.0;
  for (int k = 0; k < count; ++k) {
    const CMatrix g = random_invertible(rng);
    const CMatrix e = mat_log_normalized(g);
    recon = std::max(recon, norm(mat_exp(e * kTwoPiI) - g) / (1.0 + norm(g)));
    for (const auto& mu : eigenvalues(e)) {
      if (mu.real() < 0.0) branch = std::max(branch, -mu.real());
      if (mu.real() >= 1.0) branch = std::max(branch, mu.real() - 1.0 + 1e-300);
    }
  }
  m.add(Check::upper("log_branch.reconstruction", "exp(2 pi i E) = G relative to 1 + ||G||", recon,
                     1e-9 * o.threshold_scale));
  m.add(Check::upper("log_branch.eigenvalue_strip", "Re eig(E) in [0, 1)", branch, 0.0));
}

inline void monodromy_relation(Manifest& m, const SuiteOptions& o, int count) {
  auto rng = rng_for(o, 2);
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const auto sys = sampling::random_sum_zero(rng, 3 + k % 2);
    const auto rep = monodromy(sys, LoopBasis::standard(sys.poles), o.tol);
    worst = std::max(worst, rep.relation_residual());
  }
  m.add(Check::upper("monodromy.relation", "ordered generator product equals I", worst,
                     1e-7 * o.threshold_scale));
}

/// Commuting family: multiples of one trace-free matrix summing to zero.
inline FuchsianSystem commuting_system(sampling::Rng& rng, std::size_t n) {
  const CMatrix d = sampling::residue_with_exponent(rng, 1.0);
  FuchsianSystem sys;
  sys.poles = sampling::random_poles(rng, n);
  Complex total = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Complex x = rng.in_box(0.3);
    total += x;
    sys.residues.push_back(d * x);
  }
  sys.residues.push_back(d * (-total));
  sys.validate();
  return sys;
}

/// Straight path moving every pole by `length / sqrt(n)` in seeded directions.
inline ParamPath random_path(sampling::Rng& rng, const std::vector<Complex>& poles, double length) {
  auto end = poles;
  const double each = length / std::sqrt(static_cast<double>(poles.size()));
  for (auto& a : end) a += std::polar(each, rng.uniform(0.0, 2.0 * std::numbers::pi));
  return ParamPath::straight(poles, end);
}

inline void commuting(Manifest& m, const SuiteOptions& o) {
  auto rng = rng_for(o, 3);
  const auto sys = commuting_system(rng, 3);
  const auto rep = monodromy(sys, LoopBasis::standard(sys.poles), o.tol);
  double gen = 0.0;
  for (std::size_t k = 0; k < sys.size(); ++k)
    gen = std::max(gen, norm(rep.generators[k] - mat_exp(sys.residues[k] * kTwoPiI)));
  m.add(Check::upper("commuting.generators", "G_k = exp(2 pi i B_k)", gen, 1e-7 * o.threshold_scale));

  const auto path = random_path(rng, sys.poles, 1.0);
  FlowOptions fo;
  fo.tol = o.tol;
  const auto end = flow(SchlesingerState{sys}, path, fo);
  double drift = 0.0;
  for (std::size_t k = 0; k < sys.size(); ++k)
    drift = std::max(drift, norm(end.system.residues[k] - sys.residues[k]));
  m.add(Check::upper("commuting.flow_constancy", "B_i unchanged along the flow", drift,
                     1e-9 * o.threshold_scale));
  const Complex expected = commuting_ln_tau_increment(sys.residues, path);
  m.add(Check::upper("commuting.ln_tau", "ln tau equals ln prod (a_i - a_j)^{tr B_i B_j}",
                     std::abs(end.ln_tau - expected), 1e-7 * o.threshold_scale));
}

struct InvariantDrift {
  double fingerprint = 0.0;
  double eigen = 0.0;
  double sum = 0.0;
};

inline InvariantDrift isomonodromy_drift(const FuchsianSystem& sys, const ParamPath& path,
                                         double tol) {
  FlowOptions fo;
  fo.tol = tol;
  const auto end = flow(SchlesingerState{sys}, path, fo);
  InvariantDrift d;
  const auto basis = LoopBasis::standard(sys.poles);
  const auto r0 = monodromy(sys, basis, tol);
  const auto r1 = monodromy(end.system, basis.transported(end.system.poles), tol);
  d.fingerprint = rep_fingerprint_distance(r0, r1);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto e0 = eigenvalues(sys.residues[i]);
    const auto e1 = eigenvalues(end.system.residues[i]);
    for (std::size_t k = 0; k < e0.size(); ++k) d.eigen = std::max(d.eigen, std::abs(e0[k] - e1[k]));
  }
  d.sum = norm(end.system.residue_sum() - sys.residue_sum());
  return d;
}

inline void isomonodromy(Manifest& m, const SuiteOptions& o, int count) {
  auto rng = rng_for(o, 4);
  InvariantDrift worst;
  for (int k = 0; k < count; ++k) {
    const auto sys = sampling::random_sum_zero(rng, 4);
    InvariantDrift d;
    try {
      d = isomonodromy_drift(sys, random_path(rng, sys.poles, 0.3), o.tol);
    } catch (const Error& e) {
      // The transported loops came too close to a moved pole; draw again.
      if (e.code() != ErrorCode::ClearanceViolation) throw;
      --k;
      continue;
    }
    worst.fingerprint = std::max(worst.fingerprint, d.fingerprint);
    worst.eigen = std::max(worst.eigen, d.eigen);
    worst.sum = std::max(worst.sum, d.sum);
  }
  m.add(Check::upper("isomonodromy.fingerprint", "monodromy fingerprint constant along the flow",
                     worst.fingerprint, 1e-6 * o.threshold_scale));
  m.add(Check::upper("isomonodromy.exponents", "eigenvalues of each B_i constant", worst.eigen,
                     1e-8 * o.threshold_scale));
  m.add(Check::upper("isomonodromy.residue_sum", "sum of B_i constant", worst.sum,
                     1e-9 * o.threshold_scale));
}

inline void lemma1(Manifest& m, const SuiteOptions& o) {
  auto rng = rng_for(o, 5);
  const auto sys = sampling::random_diagonal_k(rng, sampling::random_poles(rng, 4, 1.0, 0.5),
                                               sampling::random_exponent(rng));
  const SchlesingerState st{sys};
  const double r3 = lemma1_residual(st, 1e-3).residual;
  const double r4 = lemma1_residual(st, 1e-4).residual;
  m.add(Check::range("lemma1.order", "finite-difference residual ratio h = 1e-3 vs 1e-4", r3 / r4, 80.0,
                     120.0));
  m.add(Check::upper("lemma1.floor", "finite-difference residual at h = 1e-4", r4,
                     1e-7 * o.threshold_scale));
}

/// Seeded n = 1 family whose track over [t0, t0 + 1] avoids singular samples.
inline SchlesingerState pvi_reference(sampling::Rng& rng, Complex kappa) {
  for (;;) {
    const Complex t0{rng.uniform(0.2, 0.4), rng.uniform(0.3, 0.6)};
    const auto sys = sampling::random_pvi_system(rng, t0, kappa);
    SchlesingerState st{sys};
    try {
      FlowOptions fo;
      fo.tol = 1e-12;
      const auto coarse = pvi_track(st, {0.05, 0.0}, 20, fo);
      bool clean = true;
      for (const auto& s : coarse.samples) {
        if (s.u_infinite || s.u.empty()) {
          clean = false;
          break;
        }
        const Complex u = s.u[0];
        const Complex t = s.params[0];
        clean = clean && std::abs(u) < 5.0 && std::abs(u) > 0.05 && std::abs(u - 1.0) > 0.05 &&
                std::abs(u - t) > 0.05;
      }
      if (clean) return st;
    } catch (const Error&) {
    }
  }
}

inline double pvi_midpoint_residual(const SchlesingerState& st, const PviParameters& P, double h,
                                    std::size_t steps) {
  FlowOptions fo;
  fo.tol = 1e-12;
  const auto track = pvi_track(st, {h, 0.0}, steps, fo);
  const auto r = pvi_residual(track, P);
  for (std::size_t k = 0; k < r.index.size(); ++k)
    if (r.index[k] == steps / 2) return r.residual[k];
  return std::numeric_limits<double>::quiet_NaN();
}

inline void pvi(Manifest& m, const SuiteOptions& o, std::size_t steps) {
  auto rng = rng_for(o, 6);
  const auto st = pvi_reference(rng, {rng.uniform(0.1, 0.4), rng.uniform(-0.2, 0.2)});
  const auto P = theorem2_params(ThetaData::from_system(st.system));
  FlowOptions fo;
  fo.tol = 1e-12;
  const auto track = pvi_track(st, {1.0 / static_cast<double>(steps), 0.0}, steps, fo);
  const auto r = pvi_residual(track, P);
  m.add(Check::upper("pvi.residual", "PVI residual on the flowed track", r.max, 1e-4 * o.threshold_scale));
  const double coarse = pvi_midpoint_residual(st, P, 0.1, 10);
  const double fine = pvi_midpoint_residual(st, P, 0.05, 20);
  m.add(Check::lower("pvi.convergence", "residual reduction factor under grid-step halving",
                     coarse / fine, 8.0));
  double root = 0.0;
  if (const auto u = pvi_u(st.system)) {
    root = std::abs(*u - apparent_polynomial(st.system).roots[0]) / (1.0 + std::abs(*u));
  }
  m.add(Check::upper("pvi.u_consistency", "u formula equals the apparent root", root,
                     1e-12 * o.threshold_scale));
}

inline void reduction(Manifest& m, const SuiteOptions& o, int count) {
  auto rng = rng_for(o, 7);
  double mono = 0.0, indicial = 0.0, fuchs = 0.0, vres = 0.0, alpha = 0.0;
  for (int k = 0; k < count; ++k) {
    auto poles = sampling::random_poles(rng, 3, 1.5, 0.6);
    poles.insert(poles.begin() + 1, {0.0, 1.0});
    bool ok = true;
    for (std::size_t i = 0; i < poles.size(); ++i)
      for (std::size_t j = i + 1; j < poles.size(); ++j) ok = ok && std::abs(poles[i] - poles[j]) > 0.4;
    if (!ok) {
      --k;
      continue;
    }
    const auto sys = sampling::random_diagonal_k(rng, poles, sampling::random_exponent(rng));
    const auto theta = ThetaData::from_system(sys);
    const auto shifts = theta.shifts();
    const auto eq = reduce_to_scalar(sys, shifts);
    if (eq.degenerate) {
      --k;
      continue;
    }
    for (const auto& u : eq.apparent_points) {
      const CMatrix g = scalar_monodromy_at(eq, u, {o.tol, std::nullopt});
      mono = std::max(mono, norm(g - CMatrix::identity(2)));
      const auto r = indicial_roots(eq, u);
      indicial = std::max({indicial, std::abs(r[0]), std::abs(r[1] - 2.0)});
    }
    const auto ex = scalar_exponents(eq);
    fuchs = std::max(fuchs, fuchs_relation_check(ex, static_cast<int>(eq.apparent_points.size())));
    const auto fe = exponents_from_theta(theta);
    const Complex a = fuchs_alpha(fe.theta, fe.theta_inf);
    const auto r = indicial_roots_at_infinity(eq);
    const double direct = std::max(std::abs(r[0] - a), std::abs(r[1] - a - fe.theta_inf));
    const double swapped = std::max(std::abs(r[1] - a), std::abs(r[0] - a - fe.theta_inf));
    alpha = std::max(alpha, std::min(direct, swapped));
    const auto uv = garnier_uv(sys, shifts);
    for (std::size_t j = 0; j < uv.u.size(); ++j) {
      // Residue of q at the apparent point that matches u_j.
      std::size_t best = 0;
      for (std::size_t l = 1; l < eq.apparent_points.size(); ++l)
        if (std::abs(eq.apparent_points[l] - uv.u[j]) < std::abs(eq.apparent_points[best] - uv.u[j])) best = l;
      vres = std::max(vres, std::abs(uv.v[j] - eq.q.residue(eq.apparent_points[best])) / (1.0 + std::abs(uv.v[j])));
    }
  }
  m.add(Check::upper("reduction.apparent_monodromy", "monodromy around apparent points is I", mono,
                     1e-6 * o.threshold_scale));
  m.add(Check::upper("reduction.apparent_indicial", "indicial roots {0, 2} at apparent points", indicial,
                     1e-8 * o.threshold_scale));
  m.add(Check::upper("reduction.fuchs_relation", "Fuchs relation on the scalar exponents", fuchs,
                     1e-8 * o.threshold_scale));
  m.add(Check::upper("reduction.alpha", "exponents at infinity equal {alpha, alpha + theta_inf}", alpha,
                     1e-8 * o.threshold_scale));
  m.add(Check::upper("reduction.v_residue", "v_j equals res q at u_j", vres, 1e-8 * o.threshold_scale));
}

inline void garnier(Manifest& m, const SuiteOptions& o, std::size_t steps) {
  auto rng = rng_for(o, 8);
  double viete = 0.0, sigma = 0.0, drift = 0.0;
  for (int half = 0; half < 2; ++half) {
    const Complex kappa = half ? Complex{0.5, 0.0} : sampling::random_exponent(rng);
    for (;;) {
      const Complex a1{rng.uniform(-1.0, -0.3), rng.uniform(0.3, 1.0)};
      const Complex a2{rng.uniform(1.3, 2.0), rng.uniform(-1.0, -0.3)};
      const auto sys = sampling::random_diagonal_k(rng, {a1, a2, 0.0, 1.0}, kappa);
      const auto grid = coordinate_grid(sys.poles, 0, {0.02, 0.0}, steps);
      const Complex b0 = weighted_upper_right(sys);
      FlowOptions fo;
      fo.tol = 1e-12;
      double v = 0.0, sg = 0.0, dr = 0.0;
      try {
        SchlesingerState st{sys};
        for (std::size_t k = 0; k <= steps; ++k) {
          if (k > 0) st = flow_to(st, grid[k], fo);
          const auto ap = apparent_polynomial(st.system);
          v = std::max(v, ap.expansion_mismatch);
          sg = std::max(sg, symmetric_polys(ap).mismatch);
          if (half) dr = std::max(dr, std::abs(ap.leading - b0));
        }
      } catch (const Error&) {
        continue;  // draw another system when a root degenerates on the grid
      }
      viete = std::max(viete, v);
      sigma = std::max(sigma, sg);
      drift = std::max(drift, dr);
      break;
    }
  }
  m.add(Check::upper("garnier.viete", "Viete coefficients equal the expansion (relative)", viete,
                     1e-10 * o.threshold_scale));
  m.add(Check::upper("garnier.sigma", "sigma_k ratio formula equals root recombination", sigma,
                     1e-8 * o.threshold_scale));
  m.add(Check::upper("garnier.leading_constancy", "b_m constant when (m_inf, rho_inf) = (0, 1/2)", drift,
                     1e-8 * o.threshold_scale));
}

inline std::vector<Complex> manufactured_points(Complex center, double d0, double d1, int per_decade) {
  std::vector<Complex> t;
  const Complex dir = std::polar(1.0, 0.3);
  for (int k = 0;; ++k) {
    const double d = d0 * std::pow(10.0, -static_cast<double>(k) / per_decade);
    if (d < d1) break;
    t.push_back(center + d * dir);
  }
  return t;
}

inline void probes(Manifest& m) {
  const Complex center{0.5, 0.25};
  const auto t = manufactured_points(center, 0.1, 1e-6, 8);
  for (int order : {1, 2}) {
    std::vector<Complex> u;
    for (const auto& x : t) u.push_back(std::pow(x - center, -order));
    const auto p = pole_probe(t, u, center + Complex{1e-8, 0.0}, order - 0.05, order + 0.05);
    m.add(Check::upper("probe.manufactured_order_" + std::to_string(order),
                       "recovered pole order of 1/(t - t*)^k", std::abs(p.fit.order - order), 0.05));
  }
}

}  // namespace suite

inline void run_suite(Manifest& m, const SuiteOptions& o) {
  suite::log_branch(m, o, 200);
  suite::monodromy_relation(m, o, 10);
  suite::commuting(m, o);
  suite::isomonodromy(m, o, 3);
  suite::lemma1(m, o);
  suite::pvi(m, o, 1000);
  suite::reduction(m, o, 5);
  suite::garnier(m, o, 20);
  suite::probes(m);
}

}  // namespace isolab::cli
