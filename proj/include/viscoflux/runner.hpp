#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "viscoflux/blowup.hpp"
#include "viscoflux/config.hpp"
#include "viscoflux/diagnostics.hpp"
#include "viscoflux/flow_map.hpp"
#include "viscoflux/io.hpp"
#include "viscoflux/planar_fields.hpp"
#include "viscoflux/radial_solver.hpp"

namespace viscoflux {

enum ExitStatus : int { exit_pass = 0, exit_check_failed = 1, exit_config = 2, exit_integrity = 3 };

struct CheckResult {
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline nlohmann::json to_json(const std::map<std::string, CheckResult>& checks) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, c] : checks) j[name] = {{"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}};
  return j;
}

struct RunResult {
  int status = exit_pass;
  std::string error;     // message for exit codes 2 and 3
  std::string error_key; // offending config key for exit code 2
  std::map<std::string, CheckResult> checks;
  std::map<std::string, double> metrics; // headline numbers used by sweep aggregation
  std::vector<std::string> files;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second.pass; });
  }
};

struct RunOptions {
  std::size_t snapshot_every = 0; // overrides time.snapshot_every when > 0
};

namespace detail {

inline void check_le(RunResult& r, const std::string& name, double value, double tol) {
  r.checks[name] = {value, tol, value <= tol};
}

inline std::string snapshot_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshots/snap_%05zu.csv", k);
  return buf;
}

/// Edges of the initial flagged set {rho <= eps}: the first flagged cell's left face and the
/// last flagged cell's right face.
inline std::array<double, 2> flagged_edges(const RadialState& st, double eps) {
  std::size_t first = st.rho.size(), last = 0;
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    if (st.rho[i] <= eps) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first == st.rho.size()) throw ConfigError("no vacuum cells in the initial state", "scenario");
  return {st.grid.face(first), st.grid.face(last + 1)};
}

inline void run_synthetic(const RunConfig& cfg, io::OutputDir& out, RunResult& res) {
  using namespace planar;
  const auto& law = cfg.scenario.law;
  const std::size_t n = cfg.synthetic->n;
  const auto rho = ScalarField::sample(n, [](double x, double y) { return 1.0 + 0.3 * std::sin(x) * std::cos(y); });
  const auto u = VectorField::sample(n, [](double x, double y) {
    return std::array<double, 2>{0.5 * std::sin(x + 2 * y), 0.2 * std::cos(x) - 0.4 * std::sin(y)};
  });
  const auto ut = VectorField::sample(n, [](double x, double y) { return std::array<double, 2>{std::cos(y), std::sin(x - y)}; });
  const auto f = manufactured_forcing(law, rho, u, ut);
  const auto rep = verify_decomposition(law, rho, u, ut, f);
  std::filesystem::create_directories(out.root() / "fields");
  const std::pair<const char*, const VectorField*> vecs[] = {{"u", &u}, {"u_t", &ut}, {"f", &f}};
  write_field((out.root() / "fields/rho.csv").string(), rho);
  for (const char* s : {"fields/rho.csv", "fields/rho.csv.json"}) res.files.push_back(s);
  for (const auto& [name, field] : vecs) {
    const std::string base = std::string("fields/") + name + ".csv";
    write_field((out.root() / base).string(), *field);
    for (const char* suffix : {".0", ".1", ".json"}) res.files.push_back(base + suffix);
  }
  out.write_json("decomposition.json", {{"residual_momentum", rep.residual_momentum},
                                        {"residual_poisson", rep.residual_poisson},
                                        {"residual_elliptic_u", rep.residual_elliptic_u}});
  const auto& c = *cfg.synthetic;
  check_le(res, "residual_momentum", rep.residual_momentum, c.momentum_tolerance);
  check_le(res, "residual_poisson", rep.residual_poisson, c.poisson_tolerance);
  check_le(res, "residual_elliptic_u", rep.residual_elliptic_u, c.elliptic_tolerance);
}

/// Particle paths from `seeds` as paths/path_k.csv (t, X), plus the particle-ODE residual
/// series when requested. Returns the ordering check.
inline CheckResult write_paths(io::OutputDir& out, const std::vector<RadialState>& snaps, const MaterialLaw& law,
                               const std::vector<double>& seeds, bool ode_residual) {
  const auto hist = RadialVelocityHistory::from_snapshots(snaps);
  const auto rep = ordering_check(hist, seeds, snaps.front().t, snaps.back().t);
  for (std::size_t k = 0; k < rep.paths.size(); ++k) {
    const auto& p = rep.paths[k];
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < p.t.size(); ++j) rows.push_back({p.t[j], p.x[j]});
    out.write_csv("paths/path_" + std::to_string(k) + ".csv", {"t", "X"}, rows);
    if (ode_residual) {
      const auto ode = particle_ode_residual(snaps, p, law);
      std::vector<std::vector<double>> orows;
      for (std::size_t j = 0; j < ode.t.size(); ++j) orows.push_back({ode.t[j], ode.R[j]});
      out.write_csv("paths/particle_ode_" + std::to_string(k) + ".csv", {"t", "R"}, orows);
    }
  }
  return {rep.min_gap, 0.0, rep.preserved && rep.min_gap > 0.0};
}

/// blowup_series.csv and blowup_report.json for a compact-support run.
inline BlowupReport write_blowup(io::OutputDir& out, const std::vector<RadialState>& snaps, const MaterialLaw& law,
                                 double support_density, double window_start) {
  const auto rep = blowup_report(snaps, law, support_density, window_start);
  std::vector<std::vector<double>> rows;
  for (std::size_t n = 0; n < rep.t.size(); ++n) {
    rows.push_back({rep.t[n], rep.H[n], rep.dH_diff[n], rep.dH_formula[n], rep.wall_term[n], rep.rhs[n],
                    rep.margin[n], rep.support_radius[n]});
  }
  out.write_csv("blowup_series.csv",
                {"t", "H", "dH_diff", "dH_formula", "wall_term", "rhs", "margin", "support_radius"}, rows);
  out.write_json("blowup_report.json", {{"M0", rep.M0},
                                        {"area0", rep.area0},
                                        {"H0", rep.H.front()},
                                        {"window_start", rep.window_start},
                                        {"min_margin", rep.min_margin},
                                        {"tol_discrete", rep.tol_discrete},
                                        {"margin_ok", rep.margin_ok},
                                        {"T_star_reachable", rep.contradiction.reachable},
                                        {"T_star", rep.contradiction.T_star}});
  return rep;
}

/// Contradiction time from parameters alone: blowup_report.json and G_curve.csv with the
/// decay bound and the admissible mass on the scan grid.
inline ContradictionTime write_contradiction(io::OutputDir& out, const BlowupParams& p) {
  const auto ct = contradiction_time(p.H0, p.law, p.M0, p.area0, p.t_max);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < ct.t.size(); ++k) {
    rows.push_back({ct.t[k], ct.G[k], admissible_mass(p.law, p.H0, p.area0, ct.t[k])});
  }
  out.write_csv("G_curve.csv", {"t", "G", "admissible_mass"}, rows);
  nlohmann::json j{{"H0", p.H0}, {"M0", p.M0}, {"area0", p.area0}, {"t_max", p.t_max},
                   {"T_star_reachable", ct.reachable}};
  // JSON has no infinity; an unreachable time is written as null.
  j["T_star"] = ct.reachable ? nlohmann::json(ct.T_star) : nlohmann::json(nullptr);
  out.write_json("blowup_report.json", j);
  return ct;
}

inline void run_radial(const RunConfig& cfg, const RunOptions& opt, io::OutputDir& out, RunResult& res) {
  Scenario scn = cfg.scenario;
  if (opt.snapshot_every > 0) scn.snapshot_every = opt.snapshot_every;
  const auto& law = scn.law;
  const auto output = run(scn);
  const auto& snaps = output.snapshots;
  const auto& log = output.log;

  nlohmann::json snap_list = nlohmann::json::array();
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    io::write_snapshot(out, snapshot_name(k), snaps[k], law);
    snap_list.push_back(snapshot_name(k));
  }
  out.write_json("run_log.json", {{"steps", log.steps},
                                  {"clipped", log.clipped},
                                  {"min_density", log.min_density},
                                  {"max_density", log.max_density},
                                  {"initial_mass", log.initial_mass},
                                  {"max_mass_drift", log.max_mass_drift},
                                  {"outer_activity", log.outer_activity},
                                  {"exceeded_rho_bar", log.exceeded_rho_bar},
                                  {"partial", log.partial},
                                  {"snapshots", snap_list},
                                  {"dt_history", log.dt_history}});

  check_le(res, "mass_drift", log.max_mass_drift, cfg.mass_tolerance);
  res.checks["completed"] = {log.partial ? 0.0 : 1.0, 1.0, !log.partial};
  if (scn.delta_floor > 0.0) check_le(res, "clipped_cells", static_cast<double>(log.clipped), 0.0);
  // A uniform state at rest must stay exactly at rest; with an initial velocity the static
  // kind is an ordinary evolution and has no equilibrium to check.
  const auto& v0 = cfg.scenario.v0;
  const bool at_rest = std::all_of(v0.slopes.begin(), v0.slopes.end(), [](double a) { return a == 0.0; }) &&
                       std::all_of(v0.offsets.begin(), v0.offsets.end(), [](double b) { return b == 0.0; });
  if (cfg.kind == ScenarioKind::static_state && at_rest) {
    double dev = 0.0;
    const auto& s0 = snaps.front();
    for (const auto& st : snaps) {
      for (std::size_t i = 0; i < st.rho.size(); ++i) dev = std::max(dev, std::fabs(st.rho[i] - s0.rho[i]));
      for (double v : st.v) dev = std::max(dev, std::fabs(v));
    }
    check_le(res, "equilibrium_deviation", dev, 1e-12);
  }

  if (cfg.energy) {
    const bool use_gbar = scn.compact_support && law.rho_tilde == 0.0;
    const auto rep = energy_report(output, law, use_gbar);
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < rep.t.size(); ++n) {
      rows.push_back({rep.t[n], rep.kinetic[n], rep.potential[n], rep.dissipation[n], rep.cumulative_dissipation[n],
                      rep.balance_residual[n]});
    }
    out.write_csv("energy.csv",
                  {"t", "kinetic", "potential", "dissipation", "cumulative_dissipation", "balance_residual"}, rows);
    check_le(res, "energy_ratio", rep.max_ratio, 1.0 + cfg.energy->tolerance);
    res.metrics["energy_ratio"] = rep.max_ratio;
  }

  if (cfg.jumps) {
    const auto& c = *cfg.jumps;
    std::vector<std::vector<double>> rows;
    double worst = 0.0;
    std::size_t found = 0;
    for (const auto& st : snaps) {
      if (st.t < c.t_from) continue;
      for (const auto& j : detect_jumps(st, law, c.kappa).jumps) {
        rows.push_back({st.t, static_cast<double>(j.face), j.r, j.states.rho_minus, j.states.rho_plus,
                        j.states.divu_minus, j.states.divu_plus, j.jump_P, j.jump_Lambda, j.rh_residual, j.a});
        worst = std::max(worst, std::fabs(j.rh_residual));
        ++found;
      }
    }
    out.write_csv("jumps.csv",
                  {"t", "face", "r", "rho_minus", "rho_plus", "divu_minus", "divu_plus", "jump_P", "jump_Lambda",
                   "rh_residual", "a"},
                  rows);
    res.metrics["rh_residual"] = worst;
    if (c.rh_tolerance) {
      res.checks["rh_residual"] = {worst, *c.rh_tolerance, found > 0 && worst <= *c.rh_tolerance};
    }
    if (c.decay_r0) {
      LambdaDecayOptions lo;
      lo.kappa = c.kappa;
      const auto rep = lambda_jump_decay(snaps, law, *c.decay_r0, lo);
      std::vector<std::vector<double>> drows;
      for (std::size_t n = 0; n < rep.t.size(); ++n) {
        drows.push_back({rep.t[n], rep.position[n], rep.measured[n], rep.predicted[n], rep.a[n]});
      }
      out.write_csv("lambda_decay.csv", {"t", "r", "measured", "predicted", "a"}, drows);
      res.checks["lambda_decay"] = {rep.max_rel_deviation, c.decay_tolerance,
                                    !rep.truncated && rep.max_rel_deviation <= c.decay_tolerance};
    }
  }

  if (cfg.vacuum) {
    const auto& c = *cfg.vacuum;
    VacuumOptions vo;
    vo.eps_vac = c.eps_vac;
    const double eps = c.eps_vac > 0.0 ? c.eps_vac : default_eps_vac(scn.delta_floor);
    const auto edges = flagged_edges(snaps.front(), eps);
    const auto hist = RadialVelocityHistory::from_snapshots(snaps);
    const auto track = track_interfaces(hist, edges[0], edges[1], snaps.front().t, snaps.back().t);
    std::vector<std::vector<double>> trows;
    for (std::size_t n = 0; n < track.t.size(); ++n) {
      const bool hit = track.collision && track.t[n] >= track.collision_time;
      trows.push_back({track.t[n], track.a[n], track.b[n], hit ? 1.0 : 0.0});
    }
    out.write_csv("interfaces.csv", {"t", "a", "b", "collision_flag"}, trows);

    const auto rep = vacuum_report(snaps, law, &track, vo);
    std::vector<std::vector<double>> vrows;
    for (std::size_t n = 0; n < rep.t.size(); ++n) {
      vrows.push_back({rep.t[n], rep.vac_measure[n], rep.annulus_area[n], rep.l4[n], rep.max_in_annulus[n], rep.a[n],
                       rep.b[n]});
    }
    out.write_csv("vacuum_report.csv", {"t", "vac_measure", "annulus_area", "l4", "max_in_annulus", "a", "b"}, vrows);
    res.checks["vacuum_contained"] = {rep.worst_excursion, 2.0, rep.contained};
    double max_in = 0.0;
    for (double m : rep.max_in_annulus) max_in = std::max(max_in, m);
    res.metrics["max_in_annulus"] = max_in;
    res.metrics["delta_floor"] = scn.delta_floor;

    std::vector<std::vector<double>> frows;
    double worst_rms = 0.0, worst_rate = 0.0;
    std::size_t fitted = 0;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      const double tk = snaps[k].t;
      if (track.collision && tk >= track.collision_time) break;
      const auto [a, b] = track_at(track, tk);
      const auto fit = annulus_velocity_check(snaps[k], a, b, eps);
      if (fit.skipped) continue;
      ++fitted;
      const double rel_rms = fit.max_abs_v > 0.0 ? fit.rms / fit.max_abs_v : 0.0;
      worst_rms = std::max(worst_rms, rel_rms);
      worst_rate = std::max(worst_rate, fit.rel_difference);
      frows.push_back({tk, a, b, fit.alpha, fit.beta, fit.rms, fit.max_abs_v, fit.stress_rate, fit.interface_rate,
                       fit.rel_difference});
    }
    out.write_csv("annulus_fit.csv",
                  {"t", "a", "b", "alpha", "beta", "rms", "max_abs_v", "stress_rate", "interface_rate",
                   "rel_difference"},
                  frows);
    res.checks["annulus_fit_rms"] = {worst_rms, c.annulus_tolerance, fitted > 0 && worst_rms <= c.annulus_tolerance};
    res.checks["annulus_rate"] = {worst_rate, c.annulus_tolerance, fitted > 0 && worst_rate <= c.annulus_tolerance};

    const auto tf = two_fluid_energy_balance(snaps, track, law);
    std::vector<std::vector<double>> erows;
    for (std::size_t n = 0; n < tf.t.size(); ++n) {
      erows.push_back({tf.t[n], tf.energy[n], tf.dEdt[n], tf.rhs[n], tf.dissipation[n], tf.residual[n]});
    }
    out.write_csv("two_fluid.csv", {"t", "energy", "dEdt", "rhs", "dissipation", "residual"}, erows);
    res.checks["two_fluid_residual"] = {tf.max_rel_residual, c.two_fluid_tolerance,
                                        tf.max_rel_residual <= c.two_fluid_tolerance};
  }

  if (cfg.paths && !cfg.paths->seeds.empty()) {
    res.checks["ordering_min_gap"] = write_paths(out, snaps, law, cfg.paths->seeds, cfg.paths->ode_residual);
  }

  if (cfg.blowup) {
    const auto rep = write_blowup(out, snaps, law, cfg.blowup->support_density, cfg.blowup->window_start);
    res.checks["blowup_margin"] = {rep.min_margin, -rep.tol_discrete, rep.margin_ok};
    res.metrics["T_star"] = rep.contradiction.T_star;
  }
}

} // namespace detail

/// Executes one configuration into `dir`: solver, enabled diagnostics, summary.json and
/// manifest.json. Errors are mapped to exit codes; nothing is thrown.
inline RunResult execute(const RunConfig& cfg, const std::filesystem::path& dir, const RunOptions& opt = {}) {
  RunResult res;
  try {
    io::OutputDir out(dir);
    out.write_json("config.json", cfg.source);
    if (cfg.kind == ScenarioKind::synthetic_field) {
      detail::run_synthetic(cfg, out, res);
    } else {
      detail::run_radial(cfg, opt, out, res);
    }
    res.metrics["gamma"] = cfg.scenario.law.gamma;
    res.metrics["beta"] = cfg.scenario.law.beta;
    res.status = res.all_pass() ? exit_pass : exit_check_failed;

    const auto checks = to_json(res.checks);
    out.write_json("summary.json", {{"checks", checks}, {"pass", res.all_pass()}});
    std::vector<std::string> files = out.files();
    files.insert(files.end(), res.files.begin(), res.files.end());
    std::sort(files.begin(), files.end());
    res.files = files;
    nlohmann::json manifest{{"name", cfg.name},
                            {"config_hash", config_hash(cfg.source)},
                            {"code_version", code_version},
                            {"files", files},
                            {"checks", checks},
                            {"pass", res.all_pass()}};
    out.write_json("manifest.json", manifest);
  } catch (const ConfigError& e) {
    res.status = exit_config;
    res.error = e.what();
    res.error_key = e.key();
  } catch (const IntegrityError& e) {
    res.status = exit_integrity;
    res.error = e.what();
  } catch (const DomainError& e) {
    res.status = exit_integrity;
    res.error = e.what();
  }
  return res;
}

/// Resolves the output directory: an explicit path wins, then output.dir, then `out/<name>`.
inline std::filesystem::path output_dir_for(const RunConfig& cfg, const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return std::filesystem::path("out") / cfg.name;
}

// ---------------------------------------------------------------------------
// Existing run directories

struct StoredRun {
  RunConfig config;
  std::vector<RadialState> snapshots;
};

inline StoredRun load_run(const std::filesystem::path& dir) {
  StoredRun r;
  r.config = load_config((dir / "config.json").string());
  std::ifstream is(dir / "run_log.json");
  if (!is) throw ConfigError("run directory " + dir.string() + " has no run_log.json", "run");
  const auto log = nlohmann::json::parse(is);
  for (const auto& s : log.at("snapshots")) {
    auto st = io::read_snapshot(dir / s.get<std::string>(), r.config.scenario.grid.r_max);
    st.delta_floor = r.config.scenario.delta_floor;
    r.snapshots.push_back(std::move(st));
  }
  if (r.snapshots.empty()) throw ConfigError("run directory " + dir.string() + " has no snapshots", "run");
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepEntry {
  std::string config_path;
  std::string out_dir;
  RunResult result;
  std::optional<RunConfig> config;
};

/// Number of worker threads: explicit value, else VISCOFLUX_JOBS, else 1.
inline std::size_t resolve_jobs(std::size_t explicit_jobs) {
  if (explicit_jobs > 0) return explicit_jobs;
  if (const char* env = std::getenv("VISCOFLUX_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError("VISCOFLUX_JOBS must be a positive integer", "jobs");
  }
  return 1;
}

/// Runs every config concurrently into out_root/<stem>. Individual failures are recorded
/// and the sweep continues. Results keep the order of `paths`.
inline std::vector<SweepEntry> run_sweep(const std::vector<std::string>& paths, const std::filesystem::path& out_root,
                                         std::size_t jobs, const RunOptions& opt = {}) {
  std::vector<SweepEntry> entries(paths.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < paths.size(); i = next++) {
      auto& e = entries[i];
      e.config_path = paths[i];
      e.out_dir = (out_root / std::filesystem::path(paths[i]).stem()).string();
      try {
        e.config = load_config(paths[i]);
        e.result = execute(*e.config, e.out_dir, opt);
      } catch (const ConfigError& err) {
        e.result.status = exit_config;
        e.result.error = err.what();
        e.result.error_key = err.key();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(jobs, paths.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return entries;
}

/// Aggregates a sweep. Vacuum runs that differ only in delta_floor are paired to compare
/// the in-annulus density with the linear-in-delta bound; compact-support runs give a
/// (gamma, beta) table of the contradiction time.
inline nlohmann::json sweep_summary(const std::vector<SweepEntry>& entries) {
  nlohmann::json runs = nlohmann::json::array();
  bool all_pass = true;
  std::map<std::string, std::vector<std::pair<double, double>>> delta_groups;
  nlohmann::json tstar = nlohmann::json::array();
  for (const auto& e : entries) {
    const auto& r = e.result;
    all_pass = all_pass && r.status == exit_pass;
    nlohmann::json j{{"config", e.config_path}, {"out_dir", e.out_dir}, {"status", r.status},
                     {"checks", to_json(r.checks)}, {"pass", r.status == exit_pass}};
    if (!r.error.empty()) j["error"] = r.error;
    if (!r.error_key.empty()) j["error_key"] = r.error_key;
    runs.push_back(j);
    if (!e.config || r.status >= exit_config) continue;
    if (r.metrics.count("max_in_annulus")) {
      auto key = e.config->source;
      key.erase("name");
      if (key.contains("output")) key.erase("output");
      key["regularization"].erase("delta_floor");
      delta_groups[key.dump()].emplace_back(r.metrics.at("delta_floor"), r.metrics.at("max_in_annulus"));
    }
    if (r.metrics.count("T_star")) {
      tstar.push_back({{"config", e.config_path}, {"gamma", r.metrics.at("gamma")}, {"beta", r.metrics.at("beta")},
                       {"T_star", r.metrics.at("T_star")}});
    }
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (auto& [key, v] : delta_groups) {
    std::sort(v.begin(), v.end());
    for (std::size_t k = 1; k < v.size(); ++k) {
      const double dr = v[k].first / v[k - 1].first;
      const double mr = v[k - 1].second > 0.0 ? v[k].second / v[k - 1].second : 0.0;
      const double q = mr > 0.0 ? mr / dr : 0.0;
      pairs.push_back({{"delta_small", v[k - 1].first},
                       {"delta_large", v[k].first},
                       {"delta_ratio", dr},
                       {"density_ratio", mr},
                       {"linear_within_factor_1_5", q >= 1.0 / 1.5 && q <= 1.5}});
    }
  }
  return {{"runs", runs}, {"pass", all_pass}, {"delta_pairs", pairs}, {"contradiction_times", tstar}};
}

} // namespace viscoflux
