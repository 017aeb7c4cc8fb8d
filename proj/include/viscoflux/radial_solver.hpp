#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "viscoflux/errors.hpp"
#include "viscoflux/material.hpp"
#include "viscoflux/quadrature.hpp"

namespace viscoflux {

/// Uniform radial grid on [0, r_max]. Cell i spans [i dr, (i+1) dr]; face k sits at k dr.
struct RadialGrid {
  double r_max = 1.0;
  std::size_t n_cells = 100;

  double dr() const { return r_max / static_cast<double>(n_cells); }
  double center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dr(); }
  double face(std::size_t k) const { return static_cast<double>(k) * dr(); }
  /// Area of the annular cell, 2 pi r_i dr (exact for the ring).
  double cell_area(std::size_t i) const { return 2.0 * std::numbers::pi * center(i) * dr(); }
};

inline void validate(const RadialGrid& g) {
  if (!(g.r_max > 0.0) || !std::isfinite(g.r_max)) throw ConfigError("grid: r_max must be > 0", "grid.r_max");
  if (g.n_cells < 8) throw ConfigError("grid: n_cells must be >= 8", "grid.n_cells");
}

/// Cell densities and face velocities at one time level.
/// v has n_cells + 1 entries; v.front() (r = 0) and v.back() (r = r_max) are pinned to 0.
struct RadialState {
  RadialGrid grid;
  double t = 0.0;
  std::vector<double> rho;
  std::vector<double> v;
  double delta_floor = 0.0;
};

// ---------------------------------------------------------------------------
// Initial profiles

/// Piecewise-constant radial density: values[j] on [breaks[j-1], breaks[j]), the last
/// value extends to infinity.
struct DensityProfile {
  std::vector<double> breaks;
  std::vector<double> values;

  double operator()(double r) const {
    r = std::fabs(r);
    std::size_t j = 0;
    while (j < breaks.size() && r >= breaks[j]) ++j;
    return values[j];
  }
};

/// Piecewise-linear radial velocity: slopes[j] * r + offsets[j] on segment j (same
/// segmentation convention as DensityProfile). Extended oddly to r < 0.
struct VelocityProfile {
  std::vector<double> breaks;
  std::vector<double> slopes;
  std::vector<double> offsets;

  static VelocityProfile zero() { return {{}, {0.0}, {0.0}}; }

  double operator()(double r) const {
    const double sign = r < 0.0 ? -1.0 : 1.0;
    const double a = std::fabs(r);
    std::size_t j = 0;
    while (j < breaks.size() && a >= breaks[j]) ++j;
    return sign * (slopes[j] * a + offsets[j]);
  }
};

/// Reconstruction of the upwind density in the mass flux. `none` is plain donor-cell.
enum class MassLimiter { none, minmod, van_leer, superbee };

struct SolverOptions {
  double cfl_safety = 0.4;
  MassLimiter limiter = MassLimiter::van_leer;
  /// Faces whose averaged density falls below this value carry no inertia: their
  /// velocity solves the stationary balance d/dr[(lambda+2mu)(v_r+v/r)] = dP/dr.
  /// 0 disables the treatment (fully explicit everywhere).
  double quasi_static_density = 0.0;
  /// Wall-clock budget for run(), seconds; 0 = unlimited.
  double wall_clock_limit = 0.0;
};

struct Scenario {
  MaterialLaw law;
  RadialGrid grid;
  DensityProfile rho0{{}, {1.0}};
  VelocityProfile v0 = VelocityProfile::zero();
  double t_end = 1.0;
  SolverOptions solver;
  double delta_floor = 0.0;
  /// Half-width of the mollifier; <= 0 selects the default 2 dr.
  double mollifier_width = -1.0;
  /// Far field is vacuum (rho_tilde = 0 admitted).
  bool compact_support = false;
  std::size_t snapshot_every = 0;
  /// Snapshot cadence in time; when > 0 the step size is trimmed to hit each multiple.
  double snapshot_dt = 0.0;
  bool record_energy = false;
};

// ---------------------------------------------------------------------------
// Mollification with the triweight kernel (35/32)(1 - x^2)^3 on [-1, 1].

namespace detail {

inline double triweight_cdf(double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double x2 = x * x;
  return 0.5 + 35.0 / 32.0 * x * (1.0 - x2 + 0.6 * x2 * x2 - x2 * x2 * x2 / 7.0);
}

inline double triweight(double x) {
  if (std::fabs(x) >= 1.0) return 0.0;
  const double s = 1.0 - x * x;
  return 35.0 / 32.0 * s * s * s;
}

} // namespace detail

/// (j_w * rho0)(r) for the even extension of rho0; exact for piecewise-constant data.
inline double mollify_density(const DensityProfile& p, double r, double w) {
  if (w <= 0.0) return p(r);
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto cdf = [&](double edge) {
    if (edge == inf) return 0.0;
    if (edge == -inf) return 1.0;
    return detail::triweight_cdf((r - edge) / w);
  };
  double sum = 0.0;
  for (std::size_t j = 0; j < p.values.size(); ++j) {
    const double lo = j == 0 ? 0.0 : p.breaks[j - 1];
    const double hi = j < p.breaks.size() ? p.breaks[j] : inf;
    // [lo, hi) and its mirror image (-hi, -lo]
    sum += p.values[j] * ((cdf(lo) - cdf(hi)) + (cdf(-hi) - cdf(-lo)));
  }
  return sum;
}

/// (j_w * v0)(r) for the odd extension of v0; exact for piecewise-linear data.
inline double mollify_velocity(const VelocityProfile& p, double r, double w) {
  if (w <= 0.0) return p(r);
  std::vector<double> cuts{r - w, r + w, 0.0};
  for (double b : p.breaks) {
    cuts.push_back(b);
    cuts.push_back(-b);
  }
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = std::max(cuts[k], r - w);
    const double b = std::min(cuts[k + 1], r + w);
    if (b <= a) continue;
    sum += quad::gauss_legendre5(
        [&](double s) { return detail::triweight((r - s) / w) / w * p(s); }, a, b);
  }
  return sum;
}

inline double mollifier_width(const Scenario& scn) {
  return scn.mollifier_width > 0.0 ? scn.mollifier_width : 2.0 * scn.grid.dr();
}

inline void validate(const Scenario& scn) {
  validate(scn.law, scn.compact_support);
  validate(scn.grid);
  if (scn.rho0.values.size() != scn.rho0.breaks.size() + 1) {
    throw ConfigError("scenario: density profile needs one more value than breaks", "scenario");
  }
  if (scn.v0.slopes.size() != scn.v0.breaks.size() + 1 ||
      scn.v0.offsets.size() != scn.v0.slopes.size()) {
    throw ConfigError("scenario: velocity profile segment mismatch", "scenario");
  }
  for (std::size_t j = 0; j < scn.rho0.breaks.size(); ++j) {
    if (!(scn.rho0.breaks[j] > 0.0) || (j > 0 && !(scn.rho0.breaks[j] > scn.rho0.breaks[j - 1]))) {
      throw ConfigError("scenario: density breaks must be positive and increasing", "scenario");
    }
  }
  for (double v : scn.rho0.values) {
    if (!(v >= 0.0) || v > scn.law.rho_bar) {
      throw ConfigError("scenario: initial density outside [0, rho_bar]", "scenario");
    }
  }
  if (!(scn.t_end > 0.0)) throw ConfigError("scenario: end time must be > 0", "time.T");
  if (!(scn.delta_floor >= 0.0)) throw ConfigError("scenario: delta_floor must be >= 0", "regularization.delta_floor");
  if (!(scn.solver.cfl_safety > 0.0 && scn.solver.cfl_safety <= 0.5)) {
    throw ConfigError("scenario: cfl_safety must lie in (0, 0.5]", "time.cfl_safety");
  }
  if (!(scn.solver.quasi_static_density >= 0.0)) {
    throw ConfigError("scenario: quasi_static_density must be >= 0", "regularization.quasi_static_density");
  }
}

/// Initial state: density (j * rho0) + delta at cell centres, velocity j * v0 at faces.
inline RadialState mollify_initial(const Scenario& scn) {
  validate(scn);
  const auto& g = scn.grid;
  const double w = mollifier_width(scn);
  RadialState st;
  st.grid = g;
  st.t = 0.0;
  st.delta_floor = scn.delta_floor;
  st.rho.resize(g.n_cells);
  st.v.assign(g.n_cells + 1, 0.0);
  for (std::size_t i = 0; i < g.n_cells; ++i) {
    const double rho = mollify_density(scn.rho0, g.center(i), w) + scn.delta_floor;
    if (rho > scn.law.rho_bar * (1.0 + 1e-12)) {
      throw ConfigError("mollify_initial: regularized density exceeds rho_bar", "regularization.delta_floor");
    }
    st.rho[i] = std::max(rho, 0.0);
  }
  for (std::size_t k = 1; k < g.n_cells; ++k) st.v[k] = mollify_velocity(scn.v0, g.face(k), w);
  return st;
}

// ---------------------------------------------------------------------------
// Cell-level kinematics

/// Discrete v_r + v/r at cell i, the face velocities averaged to the centre for v/r.
inline double cell_divergence(const RadialState& st, std::size_t i) {
  const double dr = st.grid.dr();
  return (st.v[i + 1] - st.v[i]) / dr + 0.5 * (st.v[i] + st.v[i + 1]) / st.grid.center(i);
}

/// (lambda + 2 mu)(v_r + v/r) at cell i.
inline double cell_stress(const RadialState& st, const MaterialLaw& law, std::size_t i) {
  return stress_coefficient(law, st.rho[i]) * cell_divergence(st, i);
}

/// Effective viscous flux F at cell i.
inline double cell_flux(const RadialState& st, const MaterialLaw& law, std::size_t i) {
  return effective_flux_scalar(law, st.rho[i], cell_divergence(st, i));
}

inline double total_mass(const RadialState& st) {
  double m = 0.0;
  for (std::size_t i = 0; i < st.rho.size(); ++i) m += st.rho[i] * st.grid.cell_area(i);
  return m;
}

struct EnergyTerms {
  double kinetic = 0.0;
  double potential = 0.0;
  double dissipation = 0.0; // instantaneous rate
  double total() const { return kinetic + potential; }
};

/// Midpoint-rule energies in the measure 2 pi r dr. `use_gbar` swaps G for Gbar
/// (vanishing far field). Kinetic energy lives on the face control volumes with the face
/// density of the momentum update, so the discrete viscous work matches the dissipation.
inline EnergyTerms energy_terms(const RadialState& st, const MaterialLaw& law, bool use_gbar = false) {
  EnergyTerms e;
  const double two_pi_dr = 2.0 * std::numbers::pi * st.grid.dr();
  for (std::size_t k = 1; k < st.rho.size(); ++k) {
    const double rho_f = 0.5 * (st.rho[k - 1] + st.rho[k]);
    e.kinetic += 0.5 * rho_f * st.v[k] * st.v[k] * two_pi_dr * st.grid.face(k);
  }
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    const double area = st.grid.cell_area(i);
    const double div = cell_divergence(st, i);
    e.potential += (use_gbar ? potential_Gbar(law, st.rho[i]) : potential_G(law, st.rho[i])) * area;
    e.dissipation += stress_coefficient(law, st.rho[i]) * div * div * area;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Time stepping

namespace detail {

inline double limited_slope(MassLimiter lim, double dm, double dp) {
  if (dm * dp <= 0.0) return 0.0;
  const double sign = dm > 0.0 ? 1.0 : -1.0;
  const double a = std::fabs(dm), b = std::fabs(dp);
  switch (lim) {
    case MassLimiter::none: return 0.0;
    case MassLimiter::minmod: return sign * std::min(a, b);
    case MassLimiter::van_leer: return sign * 2.0 * a * b / (a + b);
    case MassLimiter::superbee: return sign * std::max(std::min(2.0 * a, b), std::min(a, 2.0 * b));
  }
  return 0.0;
}

inline bool quasi_static_face(const RadialState& st, const SolverOptions& opt, std::size_t k) {
  return opt.quasi_static_density > 0.0 &&
         0.5 * (st.rho[k - 1] + st.rho[k]) < opt.quasi_static_density;
}

} // namespace detail

/// Largest admissible explicit step: safety * min(dr/(|v| + c_s), dr^2 rho / (2(lambda + 2mu))).
inline double stable_dt(const RadialState& st, const MaterialLaw& law, const SolverOptions& opt) {
  const double dr = st.grid.dr();
  const double rho_qs = opt.quasi_static_density;
  const double inertia_floor = st.delta_floor > 0.0 ? 1e-3 * st.delta_floor : 1e-12;
  double dt = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    const double rho = st.rho[i];
    if (!std::isfinite(rho) || !std::isfinite(st.v[i]) || !std::isfinite(st.v[i + 1])) {
      throw IntegrityError("stable_dt: non-finite field at cell " + std::to_string(i));
    }
    const double vmax = std::max(std::fabs(st.v[i]), std::fabs(st.v[i + 1]));
    if (rho > 0.0) {
      dt = std::min(dt, dr / (vmax + std::sqrt(pressure_slope(law, rho))));
    } else if (vmax > 0.0) {
      dt = std::min(dt, dr / vmax);
    }
    const double inertia = std::max(rho, rho_qs > 0.0 ? rho_qs : inertia_floor);
    dt = std::min(dt, dr * dr * inertia / (2.0 * stress_coefficient(law, rho)));
  }
  if (rho_qs > 0.0) {
    for (std::size_t k = 1; k < st.rho.size(); ++k) {
      if (detail::quasi_static_face(st, opt, k)) continue;
      const double rho_f = 0.5 * (st.rho[k - 1] + st.rho[k]);
      const double coeff = stress_coefficient(law, st.rho[k - 1]) + stress_coefficient(law, st.rho[k]);
      dt = std::min(dt, dr * dr * rho_f / coeff);
    }
  }
  dt *= opt.cfl_safety;
  if (!(dt > 0.0) || !std::isfinite(dt)) throw IntegrityError("stable_dt: no positive stable step");
  return dt;
}

struct StepStats {
  std::size_t clipped = 0;
  std::size_t quasi_static_faces = 0;
};

/// One forward-Euler update: upwind mass flux (limited linear reconstruction of the donor
/// density) in conservative cylindrical form,
/// face momentum with upwind advection, centred pressure gradient and the viscous
/// term d/dr[(lambda+2mu)(v_r + v/r)] with coefficients at cell centres.
inline RadialState step(const RadialState& st, const MaterialLaw& law, double dt,
                        const SolverOptions& opt = {}, StepStats* stats = nullptr) {
  const std::size_t n = st.rho.size();
  const double dr = st.grid.dr();
  const double inertia_floor = st.delta_floor > 0.0 ? 1e-3 * st.delta_floor : 1e-12;

  std::vector<double> p(n), coeff(n), stress(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = pressure(law, st.rho[i]);
    coeff[i] = stress_coefficient(law, st.rho[i]);
    stress[i] = coeff[i] * cell_divergence(st, i);
  }

  RadialState out;
  out.grid = st.grid;
  out.t = st.t + dt;
  out.delta_floor = st.delta_floor;
  out.rho.resize(n);
  out.v.assign(n + 1, 0.0);

  // Mass: r-weighted upwind fluxes telescope, so sum rho_i r_i dr is conserved.
  std::vector<double> slope(n, 0.0);
  if (opt.limiter != MassLimiter::none) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dm = i > 0 ? st.rho[i] - st.rho[i - 1] : 0.0;
      const double dp = i + 1 < n ? st.rho[i + 1] - st.rho[i] : 0.0;
      slope[i] = detail::limited_slope(opt.limiter, dm, dp);
    }
  }
  std::vector<double> flux(n + 1, 0.0); // r_k * v_k * rho_upwind
  std::vector<double> donor(n + 1, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    const double vk = st.v[k];
    const double upwind = vk > 0.0 ? st.rho[k - 1] : st.rho[k];
    const double face = vk > 0.0 ? st.rho[k - 1] + 0.5 * slope[k - 1] : st.rho[k] - 0.5 * slope[k];
    donor[k] = st.grid.face(k) * vk * upwind;
    flux[k] = st.grid.face(k) * vk * face;
  }
  if (opt.limiter != MassLimiter::none) {
    // A cell whose reconstructed outflow would exceed its mass sends donor-cell fluxes,
    // which keep it non-negative under the step restriction.
    for (std::size_t i = 0; i < n; ++i) {
      const double out_flux = std::max(flux[i + 1], 0.0) + std::max(-flux[i], 0.0);
      if (dt * out_flux > st.rho[i] * st.grid.center(i) * dr) {
        if (flux[i + 1] > 0.0) flux[i + 1] = donor[i + 1];
        if (flux[i] < 0.0) flux[i] = donor[i];
      }
    }
  }
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double rho = st.rho[i] - dt * (flux[i + 1] - flux[i]) / (st.grid.center(i) * dr);
    if (!std::isfinite(rho)) throw IntegrityError("step: non-finite density at cell " + std::to_string(i));
    if (rho < 0.0) {
      rho = 0.0;
      ++clipped;
    }
    out.rho[i] = rho;
  }

  // Momentum on inertial faces.
  std::vector<char> qs(n + 1, 0);
  std::size_t n_qs = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (detail::quasi_static_face(st, opt, k)) {
      qs[k] = 1;
      ++n_qs;
      continue;
    }
    const double vk = st.v[k];
    const double adv = vk > 0.0 ? vk * (vk - st.v[k - 1]) / dr : vk * (st.v[k + 1] - vk) / dr;
    const double force = (stress[k] - stress[k - 1] - (p[k] - p[k - 1])) / dr;
    const double rho_f = std::max(0.5 * (st.rho[k - 1] + st.rho[k]), inertia_floor);
    const double vn = vk + dt * (force / rho_f - adv);
    if (!std::isfinite(vn)) throw IntegrityError("step: non-finite velocity at face " + std::to_string(k));
    out.v[k] = vn;
  }

  // Quasi-static runs: tridiagonal solve with the freshly updated neighbours as data.
  if (n_qs > 0) {
    std::size_t k = 1;
    while (k < n) {
      if (!qs[k]) {
        ++k;
        continue;
      }
      const std::size_t k0 = k;
      while (k < n && qs[k]) ++k;
      const std::size_t k1 = k - 1;
      const std::size_t m = k1 - k0 + 1;
      std::vector<double> sub(m), diag(m), sup(m), rhs(m);
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t f = k0 + j;
        const double rl = st.grid.center(f - 1);
        const double rr = st.grid.center(f);
        // stress_i = pcoef_i * v_{i+1} + qcoef_i * v_i
        const double pl = coeff[f - 1] * (1.0 / dr + 0.5 / rl);
        const double ql = coeff[f - 1] * (-1.0 / dr + 0.5 / rl);
        const double pr = coeff[f] * (1.0 / dr + 0.5 / rr);
        const double qr = coeff[f] * (-1.0 / dr + 0.5 / rr);
        sub[j] = -ql;
        diag[j] = qr - pl;
        sup[j] = pr;
        rhs[j] = p[f] - p[f - 1];
      }
      rhs[0] -= sub[0] * out.v[k0 - 1];
      rhs[m - 1] -= sup[m - 1] * out.v[k1 + 1];
      for (std::size_t j = 1; j < m; ++j) {
        const double w = sub[j] / diag[j - 1];
        diag[j] -= w * sup[j - 1];
        rhs[j] -= w * rhs[j - 1];
      }
      out.v[k1] = rhs[m - 1] / diag[m - 1];
      for (std::size_t j = m - 1; j-- > 0;) {
        out.v[k0 + j] = (rhs[j] - sup[j] * out.v[k0 + j + 1]) / diag[j];
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (!std::isfinite(out.v[k0 + j])) throw IntegrityError("step: non-finite quasi-static velocity");
      }
    }
  }

  if (stats) {
    stats->clipped += clipped;
    stats->quasi_static_faces = n_qs;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Driver

struct EnergyRecord {
  double t;
  double dt;
  double kinetic;
  double potential;
  double dissipation;
  double mass;
};

struct RunLog {
  std::size_t steps = 0;
  std::vector<double> dt_history;
  std::size_t clipped = 0;
  double min_density = std::numeric_limits<double>::infinity();
  double max_density = 0.0;
  double initial_mass = 0.0;
  double max_mass_drift = 0.0; // max |M(t) - M(0)| / M(0) over snapshots (and steps when recorded)
  double outer_activity = 0.0; // max |rho - rho_tilde| over the outer 5% of cells, final state
  bool exceeded_rho_bar = false;
  bool partial = false; // wall-clock budget exhausted
  std::vector<EnergyRecord> energy; // per step when Scenario::record_energy
};

struct RunOutput {
  std::vector<RadialState> snapshots;
  RunLog log;
};

/// Integrates the scenario to t_end. Snapshot 0 is the initial state and the final
/// state is always stored. Deterministic for identical inputs.
inline RunOutput run(const Scenario& scn) {
  const auto wall_start = std::chrono::steady_clock::now();
  RunOutput out;
  RadialState st = mollify_initial(scn);
  const MaterialLaw& law = scn.law;
  const bool use_gbar = scn.compact_support && law.rho_tilde == 0.0;
  const double m0 = total_mass(st);
  out.log.initial_mass = m0;

  auto track = [&](const RadialState& s) {
    for (double r : s.rho) {
      out.log.min_density = std::min(out.log.min_density, r);
      out.log.max_density = std::max(out.log.max_density, r);
    }
    if (m0 > 0.0) {
      out.log.max_mass_drift = std::max(out.log.max_mass_drift, std::fabs(total_mass(s) - m0) / m0);
    }
  };
  track(st);
  out.snapshots.push_back(st);

  std::size_t next_snap = 1;
  const double T = scn.t_end;
  const double t_eps = 1e-13 * T;
  StepStats stats;
  while (st.t < T - t_eps) {
    double dt = stable_dt(st, law, scn.solver);
    bool hit_snap_time = false;
    if (scn.snapshot_dt > 0.0) {
      const double target = std::min(static_cast<double>(next_snap) * scn.snapshot_dt, T);
      if (st.t + dt >= target - t_eps) {
        dt = target - st.t;
        hit_snap_time = true;
      }
    }
    if (st.t + dt > T - t_eps) dt = T - st.t;

    EnergyTerms e_before{};
    if (scn.record_energy) e_before = energy_terms(st, law, use_gbar);
    RadialState next = step(st, law, dt, scn.solver, &stats);
    if (scn.record_energy) {
      out.log.energy.push_back(
          {st.t, dt, e_before.kinetic, e_before.potential, e_before.dissipation, total_mass(st)});
    }
    if (hit_snap_time) {
      next.t = std::min(static_cast<double>(next_snap) * scn.snapshot_dt, T);
      ++next_snap;
    }
    st = std::move(next);
    ++out.log.steps;
    out.log.dt_history.push_back(dt);
    for (double r : st.rho) {
      out.log.min_density = std::min(out.log.min_density, r);
      out.log.max_density = std::max(out.log.max_density, r);
    }

    const bool at_end = st.t >= T - t_eps;
    const bool by_count = scn.snapshot_every > 0 && out.log.steps % scn.snapshot_every == 0;
    if (hit_snap_time || by_count || at_end) {
      track(st);
      if (out.snapshots.back().t < st.t) out.snapshots.push_back(st);
    }
    if (scn.solver.wall_clock_limit > 0.0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
      if (elapsed > scn.solver.wall_clock_limit && !at_end) {
        out.log.partial = true;
        if (out.snapshots.back().t < st.t) out.snapshots.push_back(st);
        break;
      }
    }
  }
  if (scn.record_energy) {
    const auto e = energy_terms(st, law, use_gbar);
    out.log.energy.push_back({st.t, 0.0, e.kinetic, e.potential, e.dissipation, total_mass(st)});
    for (const auto& rec : out.log.energy) {
      if (m0 > 0.0) out.log.max_mass_drift = std::max(out.log.max_mass_drift, std::fabs(rec.mass - m0) / m0);
    }
  }
  out.log.clipped = stats.clipped;
  out.log.exceeded_rho_bar = out.log.max_density > law.rho_bar;
  const std::size_t n = st.rho.size();
  const std::size_t outer = std::max<std::size_t>(1, n / 20);
  for (std::size_t i = n - outer; i < n; ++i) {
    out.log.outer_activity = std::max(out.log.outer_activity, std::fabs(st.rho[i] - law.rho_tilde));
  }
  return out;
}

} // namespace viscoflux
