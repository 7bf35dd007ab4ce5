#pragma once

// Subcommand implementations. Each command fills a Manifest and writes its
// artifacts into the output directory; `run` maps failures to exit codes.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "isolab/cli/config.hpp"
#include "isolab/cli/json_out.hpp"
#include "isolab/cli/manifest.hpp"
#include "isolab/cli/suite.hpp"
#include "isolab/fuchsian.hpp"
#include "isolab/painleve.hpp"
#include "isolab/schlesinger.hpp"
#include "isolab/transport.hpp"

namespace isolab::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInvalidConfig = 2, kIoError = 3, kNumericalAbort = 4 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return kIoError;
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::PoleCollision:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::DimensionUnsupported:
      return kInvalidConfig;
    default: return kNumericalAbort;
  }
}

struct Overrides {
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<double> grid_step;
};

struct Context {
  RunConfig cfg;
  Overrides over;
  std::filesystem::path out;
  Manifest manifest;

  double tol() const { return over.tol.value_or(cfg.task.tol); }

  const FuchsianSystem& system() const {
    if (!cfg.system) throw Error(ErrorCode::InvalidConfig, "configuration has no system section");
    return *cfg.system;
  }

  ThetaData theta() const { return cfg.theta ? *cfg.theta : ThetaData::from_system(system()); }

  Complex grid_step() const {
    const Complex s = cfg.task.step;
    return over.grid_step ? s / std::abs(s) * *over.grid_step : s;
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = out / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    f << content;
    if (!f) throw Error(ErrorCode::Io, "write failed for " + path.string());
    manifest.artifacts.push_back(name);
  }
};

// ---------------------------------------------------------------------------
// Track tables

/// Columns: a_i (re, im) per pole, then u_j, v_j, sigma_k (re, im), ln tau
/// (re, im), max ||B_i||.
inline std::string track_csv(const std::vector<TrackSample>& samples, std::size_t poles, int degree) {
  std::ostringstream os;
  std::vector<std::string> head;
  for (std::size_t i = 1; i <= poles; ++i) {
    head.push_back("a" + std::to_string(i) + "_re");
    head.push_back("a" + std::to_string(i) + "_im");
  }
  for (const char* name : {"u", "v", "sigma"})
    for (int j = 1; j <= degree; ++j) {
      head.push_back(std::string(name) + std::to_string(j) + "_re");
      head.push_back(std::string(name) + std::to_string(j) + "_im");
    }
  for (const char* name : {"ln_tau_re", "ln_tau_im", "max_norm_B"}) head.emplace_back(name);
  for (std::size_t k = 0; k < head.size(); ++k) os << (k ? "," : "") << head[k];
  os << "\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : samples) {
    std::vector<double> row;
    for (const auto& a : s.params) {
      row.push_back(a.real());
      row.push_back(a.imag());
    }
    for (const auto* vec : {&s.u, &s.v, &s.sigma})
      for (int j = 0; j < degree; ++j) {
        const Complex z = j < static_cast<int>(vec->size()) ? (*vec)[j] : Complex{nan, nan};
        row.push_back(z.real());
        row.push_back(z.imag());
      }
    row.push_back(s.ln_tau.real());
    row.push_back(s.ln_tau.imag());
    row.push_back(s.max_residue_norm);
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << csv_number(row[k]);
    os << "\n";
  }
  return os.str();
}

inline bool has_garnier_shape(const FuchsianSystem& sys) {
  return sys.dim() == 2 && sys.normalization == Normalization::DiagonalK && sys.size() >= 3;
}

/// Sample without u/v data when the system has no apparent polynomial.
inline TrackSample plain_sample(const SchlesingerState& st) {
  TrackSample s;
  s.params = st.system.poles;
  s.ln_tau = st.ln_tau;
  s.max_residue_norm = st.max_residue_norm();
  return s;
}

inline bool residues_commute(const FuchsianSystem& sys) {
  for (std::size_t i = 0; i < sys.size(); ++i)
    for (std::size_t j = i + 1; j < sys.size(); ++j)
      if (norm(commutator(sys.residues[i], sys.residues[j])) > 1e-12) return false;
  return true;
}

// ---------------------------------------------------------------------------
// monodromy

inline int cmd_monodromy(Context& ctx) {
  const auto& sys = ctx.system();
  const auto basis = LoopBasis::standard(sys.poles, ctx.cfg.task.base_point);
  const auto rep = monodromy(sys, basis, ctx.tol());
  Json r;
  r["base_point"] = to_json(rep.base_point);
  r["order"] = rep.order;
  r["radii"] = basis.radii;
  r["generators"] = to_json(std::span<const CMatrix>(rep.generators));
  r["fingerprint"] = to_json(std::span<const Complex>(rep.fingerprint()));
  r["relation_residual"] = rep.relation_residual();
  r["liouville_residuals"] = rep.liouville;
  r["scalar_generators"] = is_smaller(rep);
  const CMatrix sum = sys.residue_sum();
  if (norm(sum) <= 1e-12) {
    ctx.manifest.add(Check::upper("monodromy.relation", "ordered generator product equals I",
                                  rep.relation_residual(), 1e-7));
  } else {
    // The product is the inverse loop around infinity, conjugate to exp(2 pi i sum B).
    const double d = std::abs(trace(rep.ordered_product()) - trace(mat_exp(sum * kTwoPiI)));
    r["infinity_trace_residual"] = d;
    ctx.manifest.add(Check::upper("monodromy.relation", "ordered product has the exponents at infinity", d, 1e-7));
  }
  if (residues_commute(sys)) {
    double d = 0.0;
    for (std::size_t k = 0; k < sys.size(); ++k)
      d = std::max(d, norm(rep.generators[k] - mat_exp(sys.residues[k] * kTwoPiI)));
    ctx.manifest.add(Check::upper("monodromy.commuting", "G_k = exp(2 pi i B_k)", d, 1e-7));
  }
  ctx.manifest.results = r;
  ctx.write("monodromy.json", dump(r));
  return kOk;
}

// ---------------------------------------------------------------------------
// flow and tau

inline ParamPath config_path(const Context& ctx) {
  const auto& sys = ctx.system();
  auto pts = ctx.cfg.task.path;
  if (pts.empty()) throw Error(ErrorCode::InvalidConfig, "task.path is required");
  for (const auto& w : pts)
    if (w.size() != sys.size()) throw Error(ErrorCode::InvalidConfig, "task.path waypoints must list every pole");
  bool starts_here = true;
  for (std::size_t i = 0; i < sys.size(); ++i)
    starts_here = starts_here && std::abs(pts.front()[i] - sys.poles[i]) <= 1e-12 * (1.0 + std::abs(sys.poles[i]));
  if (!starts_here) pts.insert(pts.begin(), sys.poles);
  ParamPath path{pts};
  path.validate(sys.size());
  return path;
}

/// Refine a path into `per_segment` pieces per segment.
inline std::vector<std::vector<Complex>> refine(const ParamPath& path, int per_segment) {
  std::vector<std::vector<Complex>> pts{path.waypoints.front()};
  for (std::size_t k = 1; k < path.waypoints.size(); ++k)
    for (int j = 1; j <= per_segment; ++j) {
      const double s = static_cast<double>(j) / per_segment;
      std::vector<Complex> p(path.waypoints[k].size());
      for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = path.waypoints[k - 1][i] + s * (path.waypoints[k][i] - path.waypoints[k - 1][i]);
      pts.push_back(std::move(p));
    }
  return pts;
}

struct FlowRun {
  SchlesingerState end;
  std::vector<TrackSample> samples;
  int degree = 0;
  bool blew_up = false;
  std::string blowup_message;
};

inline FlowRun run_flow(const Context& ctx, const ParamPath& path) {
  const auto& sys = ctx.system();
  FlowRun run;
  const bool garnier = has_garnier_shape(sys);
  run.degree = garnier ? static_cast<int>(sys.size()) - 2 : 0;
  const auto shifts = ctx.theta().shifts();
  auto sample = [&](const SchlesingerState& st) {
    if (!garnier) return plain_sample(st);
    auto s = sample_state(st, shifts);
    if (!run.samples.empty()) isolab::detail::match_roots(run.samples.back(), s);
    return s;
  };
  FlowOptions fo;
  fo.tol = ctx.tol();
  fo.ceiling = ctx.cfg.task.ceiling;
  SchlesingerState st{sys};
  run.samples.push_back(sample(st));
  const auto pts = refine(path, ctx.cfg.task.samples_per_segment);
  for (std::size_t k = 1; k < pts.size(); ++k) {
    try {
      ParamPath piece = ParamPath::straight(st.system.poles, pts[k]);
      piece.min_separation = 0.0;
      st = flow(st, piece, fo);
    } catch (const BlowupError& e) {
      run.blew_up = true;
      run.blowup_message = e.what();
      run.samples.push_back(plain_sample(e.last_state()));
      run.end = e.last_state();
      return run;
    }
    run.samples.push_back(sample(st));
  }
  run.end = st;
  return run;
}

inline int cmd_flow(Context& ctx) {
  const auto& sys = ctx.system();
  const auto path = config_path(ctx);
  const auto run = run_flow(ctx, path);
  ctx.write("track.csv", track_csv(run.samples, sys.size(), run.degree));
  Json r;
  r["arclength"] = path.length();
  r["samples"] = run.samples.size();
  r["ln_tau"] = to_json(run.end.ln_tau);
  r["final_poles"] = to_json(std::span<const Complex>(run.end.system.poles));
  r["final_residues"] = to_json(std::span<const CMatrix>(run.end.system.residues));
  if (run.blew_up) {
    r["blowup"] = run.blowup_message;
    ctx.manifest.results = r;
    ctx.manifest.error = "BLOWUP_DETECTED";
    return kNumericalAbort;
  }
  double eig = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto e0 = eigenvalues(sys.residues[i]);
    const auto e1 = eigenvalues(run.end.system.residues[i]);
    for (std::size_t k = 0; k < e0.size(); ++k) eig = std::max(eig, std::abs(e0[k] - e1[k]));
  }
  ctx.manifest.add(Check::upper("flow.exponents", "eigenvalues of each B_i constant", eig, 1e-8));
  ctx.manifest.add(Check::upper("flow.residue_sum", "sum of B_i constant",
                                norm(run.end.system.residue_sum() - sys.residue_sum()), 1e-9));
  const auto basis = LoopBasis::standard(sys.poles, ctx.cfg.task.base_point);
  const auto moved = basis.transported(run.end.system.poles);
  const double fp = rep_fingerprint_distance(monodromy(sys, basis, ctx.tol()),
                                             monodromy(run.end.system, moved, ctx.tol()));
  auto c = Check::upper("flow.fingerprint", "monodromy fingerprint constant along the flow", fp, 1e-6);
  if (moved.homotopy_warning) c.note = "poles moved beyond their loop radii; loops rebuilt";
  ctx.manifest.add(c);
  if (residues_commute(sys)) {
    double d = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i)
      d = std::max(d, norm(run.end.system.residues[i] - sys.residues[i]));
    ctx.manifest.add(Check::upper("flow.commuting_constancy", "commuting residues unchanged", d, 1e-9));
    ctx.manifest.add(Check::upper("flow.commuting_ln_tau", "ln tau equals the closed form",
                                  std::abs(run.end.ln_tau - commuting_ln_tau_increment(sys.residues, path)),
                                  1e-7));
  }
  ctx.manifest.results = r;
  return kOk;
}

inline int cmd_tau(Context& ctx) {
  const auto& sys = ctx.system();
  const auto path = config_path(ctx);
  FlowOptions fo;
  fo.tol = ctx.tol();
  fo.ceiling = ctx.cfg.task.ceiling;
  const auto end = flow(SchlesingerState{sys}, path, fo);
  Json r;
  r["ln_tau_increment"] = to_json(end.ln_tau);
  r["tau_ratio"] = to_json(std::exp(end.ln_tau));
  bool closed = true;
  for (std::size_t i = 0; i < sys.size(); ++i)
    closed = closed && std::abs(path.waypoints.front()[i] - path.waypoints.back()[i]) <= 1e-12;
  if (closed) {
    ctx.manifest.add(Check::upper("tau.closed_loop", "ln tau returns to its start on a closed path",
                                  std::abs(end.ln_tau), 1e-7));
  }
  if (residues_commute(sys)) {
    const Complex expected = commuting_ln_tau_increment(sys.residues, path);
    r["closed_form_increment"] = to_json(expected);
    ctx.manifest.add(Check::upper("tau.commuting", "ln tau equals ln prod (a_i - a_j)^{tr B_i B_j}",
                                  std::abs(end.ln_tau - expected), 1e-7));
    if (ctx.cfg.task.z) {
      const auto o0 = commuting_oracle(sys.residues, sys.poles, *ctx.cfg.task.z);
      const auto o1 = commuting_oracle(sys.residues, end.system.poles, *ctx.cfg.task.z);
      r["oracle_start"] = {{"Y", to_json(o0.fundamental)}, {"tau", to_json(o0.tau)}};
      r["oracle_end"] = {{"Y", to_json(o1.fundamental)}, {"tau", to_json(o1.tau)}};
    }
  }
  ctx.manifest.results = r;
  ctx.write("tau.json", dump(r));
  return kOk;
}

// ---------------------------------------------------------------------------
// pvi and garnier

inline Json params_json(const PviParameters& P) {
  return {{"alpha", to_json(P.alpha)}, {"beta", to_json(P.beta)}, {"gamma", to_json(P.gamma)},
          {"delta", to_json(P.delta)}};
}

inline int cmd_pvi(Context& ctx) {
  const auto& sys = ctx.system();
  if (!has_garnier_shape(sys) || sys.size() != 3) {
    throw Error(ErrorCode::InvalidConfig, "pvi needs a DIAGONAL_K system with poles (t, 0, 1)");
  }
  const auto theta = ctx.theta();
  const auto P = theorem2_params(theta);
  FlowOptions fo;
  fo.tol = ctx.over.tol.value_or(1e-12);
  auto track = pvi_track(SchlesingerState{sys}, ctx.grid_step(), ctx.cfg.task.steps, fo);
  const bool control = ctx.cfg.task.control == "constant_u";
  if (!ctx.cfg.task.control.empty() && !control) {
    throw Error(ErrorCode::InvalidConfig, "task.control: only constant_u is supported");
  }
  if (control) {
    const Complex u0 = track.samples.front().u.at(0);
    for (auto& s : track.samples) {
      s.u.assign(1, u0);
      s.u_infinite = false;
    }
  }
  const auto res = pvi_residual(track, P);
  ctx.write("track.csv", track_csv(track.samples, 3, 1));
  std::ostringstream rc;
  rc << "index,t_re,t_im,residual\n";
  for (std::size_t k = 0; k < res.index.size(); ++k) {
    const Complex t = track.samples[res.index[k]].params[0];
    rc << res.index[k] << "," << csv_number(t.real()) << "," << csv_number(t.imag()) << ","
       << csv_number(res.residual[k]) << "\n";
  }
  ctx.write("residual.csv", rc.str());
  Json r;
  r["parameters"] = params_json(P);
  r["half_case"] = is_half_case(theta);
  r["grid_step"] = to_json(ctx.grid_step());
  r["steps"] = ctx.cfg.task.steps;
  r["max_residual"] = res.max;
  r["excluded_samples"] = res.excluded;
  r["negative_control"] = control;
  ctx.manifest.results = r;
  auto c = Check::upper("pvi.residual", "PVI residual on the flowed track", res.max, 1e-4);
  if (control) c.note = "negative control: u held constant";
  if (!res.excluded.empty()) c.note += (c.note.empty() ? "" : "; ") + std::to_string(res.excluded.size()) + " samples excluded (SINGULAR_SAMPLE)";
  ctx.manifest.add(c);
  ctx.write("pvi.json", dump(r));
  return kOk;
}

inline int cmd_garnier(Context& ctx) {
  const auto& sys = ctx.system();
  if (!has_garnier_shape(sys)) throw Error(ErrorCode::InvalidConfig, "garnier needs a 2x2 DIAGONAL_K system");
  if (ctx.cfg.task.index >= sys.size()) throw Error(ErrorCode::InvalidConfig, "task.index out of range");
  const auto theta = ctx.theta();
  const auto shifts = theta.shifts();
  const auto grid = coordinate_grid(sys.poles, ctx.cfg.task.index, ctx.grid_step(), ctx.cfg.task.steps);
  FlowOptions fo;
  fo.tol = ctx.over.tol.value_or(1e-12);
  fo.ceiling = ctx.cfg.task.ceiling;
  const auto track = track_through(SchlesingerState{sys}, grid, shifts, fo);
  const Complex b0 = weighted_upper_right(sys);
  double viete = 0.0, sigma = 0.0, vres = 0.0, drift = 0.0;
  SchlesingerState st{sys};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0) st = flow_to(st, grid[k], fo);
    const auto ap = apparent_polynomial(st.system);
    viete = std::max(viete, ap.expansion_mismatch);
    sigma = std::max(sigma, symmetric_polys(ap).mismatch);
    drift = std::max(drift, std::abs(ap.leading - b0));
    const auto eq = reduce_to_scalar(st.system, shifts);
    const auto uv = garnier_uv(st.system, shifts);
    for (std::size_t j = 0; j < uv.u.size(); ++j)
      vres = std::max(vres, std::abs(uv.v[j] - eq.q.residue(uv.u[j])) / (1.0 + std::abs(uv.v[j])));
  }
  ctx.write("track.csv", track_csv(track.samples, sys.size(), track.degree));
  Json r;
  r["degree"] = track.degree;
  r["samples"] = track.samples.size();
  r["root_swaps"] = track.swaps;
  r["leading_drift"] = drift;
  r["half_case"] = is_half_case(theta);
  ctx.manifest.results = r;
  ctx.manifest.add(Check::upper("garnier.viete", "Viete coefficients equal the expansion (relative)", viete, 1e-10));
  ctx.manifest.add(Check::upper("garnier.sigma", "sigma_k ratio formula equals root recombination", sigma, 1e-8));
  ctx.manifest.add(Check::upper("garnier.v_residue", "v_j equals res q at u_j", vres, 1e-8));
  if (is_half_case(theta)) {
    ctx.manifest.add(Check::upper("garnier.leading_constancy", "b_m constant in the (0, 1/2) case", drift, 1e-8));
  }
  ctx.write("garnier.json", dump(r));
  return kOk;
}

// ---------------------------------------------------------------------------
// reduce

inline int cmd_reduce(Context& ctx) {
  const auto& sys = ctx.system();
  if (sys.dim() != 2) throw Error(ErrorCode::DimensionUnsupported, "reduce needs a 2x2 system");
  std::vector<Complex> shifts;
  if (sys.normalization == Normalization::DiagonalK || ctx.cfg.theta) shifts = ctx.theta().shifts();
  const auto eq = reduce_to_scalar(sys, shifts);
  Json r;
  r["apparent_points"] = to_json(std::span<const Complex>(eq.apparent_points));
  r["shifts"] = to_json(std::span<const Complex>(eq.shifts));
  r["degenerate"] = eq.degenerate;
  auto parts = [](const RationalFunction& f) {
    Json a = Json::array();
    for (const auto& part : f.parts())
      a.push_back({{"pole", to_json(part.pole)}, {"coefficients", to_json(std::span<const Complex>(part.coeffs))}});
    return a;
  };
  r["p"] = {{"principal_parts", parts(eq.p)}, {"polynomial", to_json(std::span<const Complex>(eq.p.tail().coeffs()))}};
  r["q"] = {{"principal_parts", parts(eq.q)}, {"polynomial", to_json(std::span<const Complex>(eq.q.tail().coeffs()))}};
  Json ind = Json::array();
  for (const auto& a : eq.all_singular_points()) {
    const auto roots = indicial_roots(eq, a);
    ind.push_back({{"point", to_json(a)}, {"roots", to_json(std::span<const Complex>(roots))}});
  }
  r["indicial"] = ind;
  r["indicial_infinity"] = to_json(std::span<const Complex>(indicial_roots_at_infinity(eq)));
  const double defect = fuchs_criterion_defect(eq);
  const auto ex = scalar_exponents(eq);
  const double relation = fuchs_relation_check(ex, static_cast<int>(eq.apparent_points.size()));
  double mono = 0.0, indicial = 0.0;
  for (const auto& u : eq.apparent_points) {
    mono = std::max(mono, norm(scalar_monodromy_at(eq, u, {ctx.tol(), std::nullopt}) - CMatrix::identity(2)));
    const auto roots = indicial_roots(eq, u);
    indicial = std::max({indicial, std::abs(roots[0]), std::abs(roots[1] - 2.0)});
  }
  r["fuchs_defect"] = defect;
  r["fuchs_relation_residual"] = relation;
  r["apparent_monodromy_residual"] = mono;
  ctx.manifest.results = r;
  ctx.manifest.add(Check::upper("reduce.fuchs_criterion", "pole orders of p, q within Fuchsian bounds", defect, 1e-8));
  ctx.manifest.add(Check::upper("reduce.fuchs_relation", "sum of exponents equals 2n + 1", relation, 1e-8));
  if (!eq.apparent_points.empty()) {
    ctx.manifest.add(Check::upper("reduce.apparent_monodromy", "monodromy around apparent points is I", mono, 1e-6));
    ctx.manifest.add(Check::upper("reduce.apparent_indicial", "indicial roots {0, 2} at apparent points", indicial, 1e-8));
  }
  if (has_garnier_shape(sys) && !eq.degenerate) {
    const auto uv = garnier_uv(sys, shifts);
    double vres = 0.0;
    for (std::size_t j = 0; j < uv.u.size(); ++j)
      vres = std::max(vres, std::abs(uv.v[j] - eq.q.residue(uv.u[j])) / (1.0 + std::abs(uv.v[j])));
    r["v"] = to_json(std::span<const Complex>(uv.v));
    ctx.manifest.results = r;
    ctx.manifest.add(Check::upper("reduce.v_residue", "v_j equals res q at u_j", vres, 1e-8));
  }
  ctx.write("scalar.json", dump(r));
  return kOk;
}

// ---------------------------------------------------------------------------
// probe-pole

inline Json fit_json(const PoleProbe& p) {
  return {{"order", p.fit.order},
          {"half_width", p.fit.half_width},
          {"center", to_json(p.fit.center)},
          {"samples_used", p.fit.samples_used},
          {"max_abs_u", p.max_abs},
          {"verdict", to_string(p.verdict)},
          {"diagnostics", p.diagnostics}};
}

inline int cmd_probe_pole(Context& ctx) {
  const auto& task = ctx.cfg.task;
  Json r;
  if (task.manufactured_order) {
    const int k = *task.manufactured_order;
    const auto t = suite::manufactured_points(task.manufactured_center, 0.1, task.approach_end, 8);
    std::vector<Complex> u;
    for (const auto& x : t) u.push_back(std::pow(x - task.manufactured_center, -k));
    const auto p = pole_probe(t, u, task.manufactured_center, k - 0.05, k + 0.05);
    r["manufactured_order"] = k;
    r["fit"] = fit_json(p);
    ctx.manifest.results = r;
    ctx.manifest.add(Check::upper("probe.manufactured", "recovered order of 1/(t - t*)^k",
                                  std::abs(p.fit.order - k), 0.05));
    ctx.write("probe.json", dump(r));
    return kOk;
  }
  const auto& sys = ctx.system();
  if (!has_garnier_shape(sys) || sys.size() != 3) {
    throw Error(ErrorCode::InvalidConfig, "probe-pole needs a (t, 0, 1) DIAGONAL_K system or task.manufactured");
  }
  if (!task.target) throw Error(ErrorCode::InvalidConfig, "task.target (pole guess) is required");
  FlowOptions fo;
  fo.tol = 1e-12;
  SchlesingerState st{sys};
  st = flow_to(st, {*task.target, 0.0, 1.0}, fo);
  Check check{"probe.genuine_order", "fitted order of u at a movable pole in [0.8, 1.2]", 0.0,
              Json::array({0.8, 1.2}), Status::Inconclusive, {}};
  const auto located = locate_leading_zero(st, 0);
  if (!located) {
    check.note = "Newton iteration for the zero of t b_1 + b_3 did not converge";
    r["verdict"] = "INCONCLUSIVE";
  } else {
    const Complex tstar = located->system.poles[0];
    const double room = std::min({0.05, 0.3 * std::abs(tstar), 0.3 * std::abs(tstar - 1.0)});
    const Complex dir = std::abs(task.target.value() - tstar) > 1e-9 ? (task.target.value() - tstar) / std::abs(task.target.value() - tstar) : Complex{1.0, 0.0};
    const auto start = flow_to(*located, {tstar + room * dir, 0.0, 1.0}, fo);
    const auto track = approach(start, 0, tstar, task.approach_end);
    std::vector<Complex> t, u;
    for (const auto& s : track.samples)
      if (!s.u_infinite && !s.u.empty()) {
        t.push_back(s.params[0]);
        u.push_back(s.u[0]);
      }
    r["pole"] = to_json(tstar);
    ctx.write("approach.csv", track_csv(track.samples, 3, 1));
    try {
      const auto p = pole_probe(t, u, tstar);
      r["fit"] = fit_json(p);
      check.measured = p.fit.order;
      check.status = p.verdict == Verdict::Pass ? Status::Pass : Status::Inconclusive;
      check.note = p.diagnostics;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoBlowup) throw;
      check.note = e.what();
      r["verdict"] = "NO_BLOWUP";
    }
  }
  ctx.manifest.results = r;
  ctx.manifest.add(check);
  ctx.write("probe.json", dump(r));
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

inline int cmd_verify(Context& ctx) {
  SuiteOptions o;
  o.seed = ctx.manifest.seed;
  if (ctx.over.tol) o.threshold_scale = *ctx.over.tol / 1e-10;
  run_suite(ctx.manifest, o);
  Json r;
  r["threshold_scale"] = o.threshold_scale;
  r["checks"] = ctx.manifest.checks.size();
  ctx.manifest.results = r;
  return kOk;
}

// ---------------------------------------------------------------------------
// dispatch

inline void configure_logging() {
  auto logger = spdlog::get("isolab");
  if (!logger) logger = spdlog::stderr_color_mt("isolab");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("ISOLAB_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

inline int run_command(const std::string& command, const std::optional<std::string>& config_path,
                       const std::string& out_dir, const Overrides& over) {
  configure_logging();
  const auto t0 = std::chrono::steady_clock::now();
  Context ctx;
  ctx.over = over;
  ctx.out = out_dir;
  ctx.manifest.command = command;
  try {
    if (config_path) {
      ctx.cfg = load_config(*config_path);
    } else if (command != "verify") {
      throw Error(ErrorCode::InvalidConfig, "--config is required for " + command);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "isolab: %s\n", e.what());
    return e.code() == ErrorCode::Io ? kIoError : kInvalidConfig;
  }
  ctx.manifest.seed = over.seed.value_or(ctx.cfg.seed);
  ctx.manifest.config = ctx.cfg.raw.is_null() ? Json::object() : ctx.cfg.raw;
  if (over.tol && !(*over.tol > 0.0)) {
    std::fprintf(stderr, "isolab: --tol must be positive\n");
    return kInvalidConfig;
  }
  if (over.grid_step && !(*over.grid_step > 0.0)) {
    std::fprintf(stderr, "isolab: --grid-step must be positive\n");
    return kInvalidConfig;
  }
  std::error_code ec;
  std::filesystem::create_directories(ctx.out, ec);
  if (ec) {
    std::fprintf(stderr, "isolab: cannot create %s: %s\n", ctx.out.string().c_str(), ec.message().c_str());
    return kIoError;
  }

  int code = kOk;
  try {
    spdlog::info("running {} with seed {}", command, ctx.manifest.seed);
    if (command == "monodromy") code = cmd_monodromy(ctx);
    else if (command == "flow") code = cmd_flow(ctx);
    else if (command == "tau") code = cmd_tau(ctx);
    else if (command == "pvi") code = cmd_pvi(ctx);
    else if (command == "garnier") code = cmd_garnier(ctx);
    else if (command == "reduce") code = cmd_reduce(ctx);
    else if (command == "probe-pole") code = cmd_probe_pole(ctx);
    else if (command == "verify") code = cmd_verify(ctx);
    else throw Error(ErrorCode::InvalidArgument, "unknown command " + command);
  } catch (const Error& e) {
    std::fprintf(stderr, "isolab: %s\n", e.what());
    ctx.manifest.error = std::string(to_string(e.code()));
    ctx.manifest.results["message"] = e.what();
    code = exit_code_for(e.code());
  }
  if (code == kOk && ctx.manifest.failed()) code = kCheckFailed;
  for (const auto& c : ctx.manifest.checks)
    spdlog::info("{} {} measured {}", status_name(c.status), c.name, format_number(c.measured));
  try {
    ctx.write("manifest.json", dump(ctx.manifest.to_json()));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream(ctx.out / "timing.json") << dump(Json{{"command", command}, {"wall_clock_seconds", secs}});
  } catch (const Error& e) {
    std::fprintf(stderr, "isolab: %s\n", e.what());
    return kIoError;
  }
  std::printf("%s: %s\n", command.c_str(), ctx.manifest.error.empty() ? status_name(ctx.manifest.overall()) : ctx.manifest.error.c_str());
  return code;
}

}  // namespace isolab::cli
