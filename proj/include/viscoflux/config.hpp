#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "viscoflux/blowup.hpp"
#include "viscoflux/errors.hpp"
#include "viscoflux/material.hpp"
#include "viscoflux/radial_solver.hpp"

namespace viscoflux {

inline constexpr const char* code_version = "0.1.0";
inline constexpr int schema_version = 1;

/// Scenario kinds understood by the runner. `profile` takes explicit piecewise data;
/// `synthetic_field` runs the planar identity checks on manufactured torus fields.
enum class ScenarioKind { static_state, jump, vacuum_annulus, compact_support, profile, synthetic_field };

struct EnergyCheck {
  double tolerance = 0.02;
};
struct JumpCheck {
  double kappa = 0.02;
  double t_from = 0.0;
  std::optional<double> rh_tolerance;
  std::optional<double> decay_r0;
  double decay_tolerance = 0.05;
};
struct VacuumCheck {
  double eps_vac = -1.0;
  double annulus_tolerance = 0.05;
  double two_fluid_tolerance = 0.05;
};
struct PathsCheck {
  std::vector<double> seeds;
  bool ode_residual = false;
};
struct BlowupCheck {
  double support_density = 1e-4;
  double window_start = 0.0;
};
struct SyntheticCheck {
  std::size_t n = 64;
  double momentum_tolerance = 1e-10;
  double poisson_tolerance = 1e-8;
  double elliptic_tolerance = 1e-10;
};

struct RunConfig {
  std::string name;
  ScenarioKind kind = ScenarioKind::static_state;
  Scenario scenario;
  double mass_tolerance = 1e-10;
  std::optional<EnergyCheck> energy;
  std::optional<JumpCheck> jumps;
  std::optional<VacuumCheck> vacuum;
  std::optional<PathsCheck> paths;
  std::optional<BlowupCheck> blowup;
  std::optional<SyntheticCheck> synthetic;
  std::string output_dir;
  nlohmann::json source; // parsed document, used for hashing and the echoed config
};

/// 64-bit FNV-1a over the compact dump of the parsed document, printed as hex.
inline std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

/// Strict view of one JSON object: every key must be consumed, anything left over is an
/// unknown key and fails with its dotted path.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("expected an object at '" + label() + "'", label());
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  double number(const std::string& k, std::optional<double> def = std::nullopt) {
    if (!take(k)) return required(k, def);
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigError("'" + key(k) + "' must be a number", key(k));
    return v.get<double>();
  }

  std::size_t count(const std::string& k, std::optional<std::size_t> def = std::nullopt) {
    if (!take(k)) return required(k, def);
    const auto& v = j_.at(k);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("'" + key(k) + "' must be a nonnegative integer", key(k));
    return v.get<std::size_t>();
  }

  bool flag(const std::string& k, bool def) {
    if (!take(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError("'" + key(k) + "' must be true or false", key(k));
    return v.get<bool>();
  }

  std::string text(const std::string& k, std::optional<std::string> def = std::nullopt) {
    if (!take(k)) return required(k, def);
    const auto& v = j_.at(k);
    if (!v.is_string()) throw ConfigError("'" + key(k) + "' must be a string", key(k));
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& k, std::optional<std::vector<double>> def = std::nullopt) {
    if (!take(k)) return required(k, def);
    const auto& v = j_.at(k);
    if (!v.is_array()) throw ConfigError("'" + key(k) + "' must be an array of numbers", key(k));
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError("'" + key(k) + "' must be an array of numbers", key(k));
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::optional<Section> child(const std::string& k) {
    if (!take(k)) return std::nullopt;
    return Section(j_.at(k), key(k));
  }

  /// Throws on the first key (in document order) that was never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + key(it.key()) + "'", key(it.key()));
    }
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }
  bool take(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k);
  }
  template <class T>
  T required(const std::string& k, const std::optional<T>& def) const {
    if (!def) throw ConfigError("missing required key '" + key(k) + "'", key(k));
    return *def;
  }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline ScenarioKind parse_kind(const std::string& s, const std::string& key) {
  if (s == "static") return ScenarioKind::static_state;
  if (s == "jump") return ScenarioKind::jump;
  if (s == "vacuum_annulus") return ScenarioKind::vacuum_annulus;
  if (s == "compact_support") return ScenarioKind::compact_support;
  if (s == "profile") return ScenarioKind::profile;
  if (s == "synthetic_field") return ScenarioKind::synthetic_field;
  throw ConfigError("unknown scenario kind '" + s + "'", key);
}

inline MassLimiter parse_limiter(const std::string& s, const std::string& key) {
  if (s == "none") return MassLimiter::none;
  if (s == "minmod") return MassLimiter::minmod;
  if (s == "van_leer") return MassLimiter::van_leer;
  if (s == "superbee") return MassLimiter::superbee;
  throw ConfigError("unknown limiter '" + s + "'", key);
}

inline void parse_law(Section& sec, MaterialLaw& law) {
  law.A = sec.number("A", law.A);
  law.gamma = sec.number("gamma", law.gamma);
  law.c_lam = sec.number("c_lam", law.c_lam);
  law.beta = sec.number("beta", law.beta);
  law.mu = sec.number("mu", law.mu);
  law.rho_tilde = sec.number("rho_tilde", law.rho_tilde);
  law.rho_bar = sec.number("rho_bar", law.rho_bar);
  law.q = sec.number("q", law.q);
  sec.finish();
}

inline VelocityProfile parse_velocity(Section& sec) {
  VelocityProfile p;
  p.breaks = sec.numbers("breaks", std::vector<double>{});
  p.slopes = sec.numbers("slopes");
  p.offsets = sec.numbers("offsets");
  sec.finish();
  if (p.slopes.size() != p.breaks.size() + 1 || p.offsets.size() != p.breaks.size() + 1) {
    throw ConfigError("velocity profile needs one slope and one offset per interval", sec.key("slopes"));
  }
  return p;
}

} // namespace detail

/// Parses and validates a run configuration. Every parameter is checked before any
/// compute; unknown keys fail with their dotted path.
inline RunConfig parse_config(const nlohmann::json& doc) {
  using detail::Section;
  RunConfig cfg;
  cfg.source = doc;
  Section root(doc, "");
  const auto ver = root.count("schema_version");
  if (ver != static_cast<std::size_t>(schema_version)) {
    throw ConfigError("unsupported schema_version " + std::to_string(ver) + " (expected 1)", "schema_version");
  }
  cfg.name = root.text("name", std::string("run"));

  Scenario& s = cfg.scenario;
  if (auto law = root.child("law")) detail::parse_law(*law, s.law);

  auto grid = root.child("grid");
  if (!grid) throw ConfigError("missing required key 'grid'", "grid");
  s.grid.r_max = grid->number("r_max");
  s.grid.n_cells = grid->count("n_cells");
  grid->finish();

  auto time = root.child("time");
  if (!time) throw ConfigError("missing required key 'time'", "time");
  s.t_end = time->number("T");
  s.snapshot_every = time->count("snapshot_every", 0);
  s.snapshot_dt = time->number("snapshot_dt", 0.0);
  s.solver.cfl_safety = time->number("cfl_safety", s.solver.cfl_safety);
  time->finish();
  if (s.snapshot_dt < 0.0) throw ConfigError("snapshot_dt must be nonnegative", "time.snapshot_dt");

  if (auto reg = root.child("regularization")) {
    s.delta_floor = reg->number("delta_floor", 0.0);
    s.mollifier_width = reg->number("mollifier_width", -1.0);
    reg->finish();
  }
  if (auto num = root.child("numerics")) {
    s.solver.limiter =
        detail::parse_limiter(num->text("mass_flux_limiter", std::string("van_leer")), "numerics.mass_flux_limiter");
    s.solver.quasi_static_density = num->number("quasi_static_density", 0.0);
    s.solver.wall_clock_limit = num->number("wall_clock_limit", 0.0);
    s.record_energy = num->flag("record_energy", false);
    num->finish();
  }

  auto sc = root.child("scenario");
  if (!sc) throw ConfigError("missing required key 'scenario'", "scenario");
  cfg.kind = detail::parse_kind(sc->text("kind"), "scenario.kind");
  const double rt = s.law.rho_tilde;
  switch (cfg.kind) {
    case ScenarioKind::static_state:
      s.rho0 = {{}, {sc->number("density", rt)}};
      break;
    case ScenarioKind::jump: {
      const double r = sc->number("radius");
      s.rho0 = {{r}, {sc->number("inner_density"), sc->number("outer_density", rt)}};
      break;
    }
    case ScenarioKind::vacuum_annulus: {
      const double a = sc->number("inner_radius"), b = sc->number("outer_radius");
      const double d = sc->number("density", rt);
      if (!(0.0 < a && a < b)) throw ConfigError("annulus radii must satisfy 0 < inner < outer", "scenario.inner_radius");
      s.rho0 = {{a, b}, {d, 0.0, d}};
      break;
    }
    case ScenarioKind::compact_support: {
      const double r = sc->number("radius");
      s.rho0 = {{r}, {sc->number("density"), 0.0}};
      s.compact_support = true;
      if (s.law.rho_tilde != 0.0) {
        throw ConfigError("compactly supported data needs a vacuum far field (rho_tilde = 0)", "law.rho_tilde");
      }
      break;
    }
    case ScenarioKind::profile:
      s.rho0.breaks = sc->numbers("breaks", std::vector<double>{});
      s.rho0.values = sc->numbers("densities");
      s.compact_support = sc->flag("compact_support", false);
      if (s.rho0.values.size() != s.rho0.breaks.size() + 1) {
        throw ConfigError("profile needs one density per interval", "scenario.densities");
      }
      break;
    case ScenarioKind::synthetic_field:
      break;
  }
  if (auto vel = sc->child("velocity")) s.v0 = detail::parse_velocity(*vel);
  sc->finish();

  if (auto diag = root.child("diagnostics")) {
    cfg.mass_tolerance = diag->number("mass_tolerance", cfg.mass_tolerance);
    if (auto e = diag->child("energy")) {
      cfg.energy = EnergyCheck{e->number("tolerance", 0.02)};
      e->finish();
    }
    if (auto j = diag->child("jumps")) {
      JumpCheck c;
      c.kappa = j->number("kappa", c.kappa);
      c.t_from = j->number("t_from", c.t_from);
      if (j->has("rh_tolerance")) c.rh_tolerance = j->number("rh_tolerance");
      if (j->has("decay_r0")) c.decay_r0 = j->number("decay_r0");
      c.decay_tolerance = j->number("decay_tolerance", c.decay_tolerance);
      j->finish();
      if (!(c.kappa > 0.0 && c.kappa < 1.0)) throw ConfigError("kappa must lie in (0, 1)", "diagnostics.jumps.kappa");
      cfg.jumps = c;
    }
    if (auto v = diag->child("vacuum")) {
      VacuumCheck c;
      c.eps_vac = v->number("eps_vac", c.eps_vac);
      c.annulus_tolerance = v->number("annulus_tolerance", c.annulus_tolerance);
      c.two_fluid_tolerance = v->number("two_fluid_tolerance", c.two_fluid_tolerance);
      v->finish();
      if (cfg.kind != ScenarioKind::vacuum_annulus) {
        throw ConfigError("vacuum diagnostics need a vacuum_annulus scenario", "diagnostics.vacuum");
      }
      if (c.eps_vac >= 0.0 && !(c.eps_vac > 2.0 * s.delta_floor)) {
        throw ConfigError("eps_vac must exceed twice the density floor", "diagnostics.vacuum.eps_vac");
      }
      cfg.vacuum = c;
    }
    if (auto p = diag->child("paths")) {
      PathsCheck c;
      c.seeds = p->numbers("seeds");
      c.ode_residual = p->flag("ode_residual", false);
      p->finish();
      for (std::size_t i = 0; i < c.seeds.size(); ++i) {
        if (!(c.seeds[i] >= 0.0 && c.seeds[i] <= s.grid.r_max) || (i && !(c.seeds[i] > c.seeds[i - 1]))) {
          throw ConfigError("path seeds must be strictly increasing radii inside the domain", "diagnostics.paths.seeds");
        }
      }
      cfg.paths = c;
    }
    if (auto b = diag->child("blowup")) {
      BlowupCheck c;
      c.support_density = b->number("support_density", c.support_density);
      c.window_start = b->number("window_start", c.window_start);
      b->finish();
      cfg.blowup = c;
    }
    if (auto f = diag->child("synthetic")) {
      SyntheticCheck c;
      c.n = f->count("n", c.n);
      c.momentum_tolerance = f->number("momentum_tolerance", c.momentum_tolerance);
      c.poisson_tolerance = f->number("poisson_tolerance", c.poisson_tolerance);
      c.elliptic_tolerance = f->number("elliptic_tolerance", c.elliptic_tolerance);
      f->finish();
      if (c.n < 8 || (c.n & (c.n - 1))) throw ConfigError("synthetic grid size must be a power of two >= 8", "diagnostics.synthetic.n");
      cfg.synthetic = c;
    }
    diag->finish();
  }
  if (auto out = root.child("output")) {
    cfg.output_dir = out->text("dir", std::string());
    out->finish();
  }
  root.finish();

  // Semantic validation, before any compute.
  validate(s.law, s.compact_support);
  if (cfg.blowup) {
    require_blowup_hypotheses(s.law);
    if (!s.compact_support) throw ConfigError("blow-up analysis needs compactly supported data", "scenario.kind");
  }
  if (cfg.kind == ScenarioKind::synthetic_field) {
    if (!cfg.synthetic) cfg.synthetic = SyntheticCheck{};
  } else {
    if (cfg.synthetic) throw ConfigError("synthetic checks need a synthetic_field scenario", "diagnostics.synthetic");
    validate(s.grid);
    if (!(s.t_end > 0.0)) throw ConfigError("T must be positive", "time.T");
    if (!(s.solver.cfl_safety > 0.0 && s.solver.cfl_safety <= 1.0)) {
      throw ConfigError("cfl_safety must lie in (0, 1]", "time.cfl_safety");
    }
    if (s.delta_floor < 0.0) throw ConfigError("delta_floor must be nonnegative", "regularization.delta_floor");
    for (double b : s.rho0.breaks) {
      if (!(b > 0.0 && b < s.grid.r_max)) throw ConfigError("profile breaks must lie inside the domain", "scenario");
    }
    // Mollification cannot exceed the profile maximum, so rho_bar bounds the raw data.
    for (double v : s.rho0.values) {
      if (v < 0.0 || v > s.law.rho_bar) {
        throw ConfigError("initial density must lie in [0, rho_bar]", "scenario");
      }
    }
  }
  return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path, "config");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what(), "config");
  }
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

/// Parameters for the contradiction time alone, without a run.
struct BlowupParams {
  MaterialLaw law;
  double H0 = 0.0;
  double M0 = 0.0;
  double area0 = 0.0;
  double t_max = 1e12;
};

inline BlowupParams parse_blowup_params(const nlohmann::json& doc) {
  using detail::Section;
  BlowupParams p;
  Section root(doc, "");
  const auto ver = root.count("schema_version");
  if (ver != static_cast<std::size_t>(schema_version)) {
    throw ConfigError("unsupported schema_version " + std::to_string(ver) + " (expected 1)", "schema_version");
  }
  auto law = root.child("law");
  if (!law) throw ConfigError("missing required key 'law'", "law");
  p.law.rho_tilde = 0.0;
  detail::parse_law(*law, p.law);
  p.H0 = root.number("H0");
  p.M0 = root.number("M0");
  p.area0 = root.number("area0");
  p.t_max = root.number("t_max", p.t_max);
  root.finish();
  require_blowup_hypotheses(p.law);
  if (!(p.H0 > 0.0)) throw ConfigError("H0 must be positive", "H0");
  if (!(p.M0 > 0.0)) throw ConfigError("M0 must be positive", "M0");
  if (!(p.area0 > 0.0)) throw ConfigError("area0 must be positive", "area0");
  if (!(p.t_max > 0.0)) throw ConfigError("t_max must be positive", "t_max");
  return p;
}

} // namespace viscoflux
