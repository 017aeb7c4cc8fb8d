#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "viscoflux/errors.hpp"
#include "viscoflux/flow_map.hpp"
#include "viscoflux/material.hpp"
#include "viscoflux/radial_solver.hpp"

namespace viscoflux {

// ---------------------------------------------------------------------------
// Energy

struct EnergyReport {
  std::vector<double> t;
  std::vector<double> kinetic;
  std::vector<double> potential;
  std::vector<double> dissipation;
  std::vector<double> cumulative_dissipation; // int_0^t D ds
  std::vector<double> balance_residual;       // E(t_{n+1}) - E(t_n) + dt D(t_n); last entry 0
  double max_ratio = 0.0;      // max_t (E(t) + int D) / E(0)
  double total_residual = 0.0; // sum_n |balance residual|
};

namespace detail {

inline EnergyReport finish_energy_report(EnergyReport rep) {
  const double e0 = rep.kinetic.front() + rep.potential.front();
  for (std::size_t n = 0; n < rep.t.size(); ++n) {
    const double e = rep.kinetic[n] + rep.potential[n] + rep.cumulative_dissipation[n];
    rep.max_ratio = std::max(rep.max_ratio, e0 > 0.0 ? e / e0 : (e > 0.0 ? 1e300 : 1.0));
    rep.total_residual += std::fabs(rep.balance_residual[n]);
  }
  return rep;
}

} // namespace detail

/// Energy series of a run. Uses the per-step record when the run kept one (the balance
/// residual is then the one-step defect), otherwise the snapshots with trapezoidal
/// accumulation of the dissipation.
inline EnergyReport energy_report(const RunOutput& out, const MaterialLaw& law, bool use_gbar = false) {
  EnergyReport rep;
  if (!out.log.energy.empty()) {
    const auto& rec = out.log.energy;
    double cum = 0.0;
    for (std::size_t n = 0; n < rec.size(); ++n) {
      rep.t.push_back(rec[n].t);
      rep.kinetic.push_back(rec[n].kinetic);
      rep.potential.push_back(rec[n].potential);
      rep.dissipation.push_back(rec[n].dissipation);
      rep.cumulative_dissipation.push_back(cum);
      if (n + 1 < rec.size()) {
        const double e0 = rec[n].kinetic + rec[n].potential;
        const double e1 = rec[n + 1].kinetic + rec[n + 1].potential;
        rep.balance_residual.push_back(e1 - e0 + rec[n].dt * rec[n].dissipation);
        cum += rec[n].dt * rec[n].dissipation;
      } else {
        rep.balance_residual.push_back(0.0);
      }
    }
    return detail::finish_energy_report(std::move(rep));
  }
  if (out.snapshots.empty()) throw ConfigError("energy_report: run has no snapshots", "run");
  double cum = 0.0;
  for (std::size_t n = 0; n < out.snapshots.size(); ++n) {
    const auto e = energy_terms(out.snapshots[n], law, use_gbar);
    if (n > 0) {
      const double dt = out.snapshots[n].t - out.snapshots[n - 1].t;
      cum += 0.5 * dt * (rep.dissipation.back() + e.dissipation);
      const double e_prev = rep.kinetic.back() + rep.potential.back();
      rep.balance_residual.back() = e.total() - e_prev + dt * rep.dissipation.back();
    }
    rep.t.push_back(out.snapshots[n].t);
    rep.kinetic.push_back(e.kinetic);
    rep.potential.push_back(e.potential);
    rep.dissipation.push_back(e.dissipation);
    rep.cumulative_dissipation.push_back(cum);
    rep.balance_residual.push_back(0.0);
  }
  return detail::finish_energy_report(std::move(rep));
}

// ---------------------------------------------------------------------------
// Jumps

struct OneSidedStates {
  double rho_minus = 0.0, rho_plus = 0.0;
  double divu_minus = 0.0, divu_plus = 0.0;
  std::size_t zone_left = 0, zone_right = 0; // faces of the transition zone on each side of the jump face
};

/// The jump face k is widened to the transition zone of neighbouring faces with
/// |drho| > theta |drho_k|. One-sided values are linear extrapolations to face k from the
/// two cells that start max(1, gap_factor * width) cells beyond the zone on each side.
struct JumpZoneOptions {
  double theta = 0.05;
  double gap_factor = 0.5;
};

namespace detail {

// Linear extrapolation of cell data to face k from cells i_near, i_far.
template <class Value>
double extrapolate_to_face(const RadialState& st, std::size_t k, std::size_t i_near, std::size_t i_far, Value value) {
  const double rf = st.grid.face(k);
  const double rn = st.grid.center(i_near);
  const double rfar = st.grid.center(i_far);
  const double vn = value(i_near);
  return vn + (vn - value(i_far)) * (rf - rn) / (rn - rfar);
}

} // namespace detail

inline OneSidedStates one_sided_states(const RadialState& st, std::size_t k, JumpZoneOptions opt = {}) {
  const std::size_t n = st.rho.size();
  if (k == 0 || k >= n) throw DomainError("one_sided_states: face index outside the interior");
  if (!(opt.theta > 0.0 && opt.theta < 1.0) || !(opt.gap_factor >= 0.0)) {
    throw ConfigError("one_sided_states: need 0 < theta < 1 and gap_factor >= 0", "diagnostics.jump_zone");
  }
  auto drho = [&](std::size_t f) { return std::fabs(st.rho[f] - st.rho[f - 1]); };
  const double cut = opt.theta * drho(k);
  std::size_t lo = k, hi = k;
  while (lo > 1 && drho(lo - 1) > cut) --lo;
  while (hi + 1 < n && drho(hi + 1) > cut) ++hi;
  OneSidedStates s;
  s.zone_left = k - lo;
  s.zone_right = hi - k;
  auto gap = [&](std::size_t w) {
    return w + std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opt.gap_factor * static_cast<double>(w))));
  };
  const std::size_t gl = gap(s.zone_left), gr = gap(s.zone_right);
  if (k < gl + 2 || k + gr + 2 > n) throw DomainError("one_sided_states: jump too close to the domain edge");
  auto rho = [&](std::size_t i) { return st.rho[i]; };
  auto div = [&](std::size_t i) { return cell_divergence(st, i); };
  const std::size_t ln = k - gl - 1, lf = k - gl - 2;
  const std::size_t rn = k + gr, rf = k + gr + 1;
  s.rho_minus = std::max(0.0, detail::extrapolate_to_face(st, k, ln, lf, rho));
  s.rho_plus = std::max(0.0, detail::extrapolate_to_face(st, k, rn, rf, rho));
  s.divu_minus = detail::extrapolate_to_face(st, k, ln, lf, div);
  s.divu_plus = detail::extrapolate_to_face(st, k, rn, rf, div);
  return s;
}

struct JumpRecord {
  std::size_t face = 0;
  double r = 0.0;
  double t = 0.0;
  OneSidedStates states{};
  double jump_P = 0.0;
  double jump_Lambda = std::numeric_limits<double>::quiet_NaN(); // NaN when a side is vacuum
  double jump_stress = 0.0; // [(2 mu + lambda) div u]
  double rh_residual = 0.0; // [(2 mu + lambda) div u] - [P]
  double a = std::numeric_limits<double>::quiet_NaN(); // [P] / [Lambda]
};

/// Bracket quantities from one-sided states.
inline JumpRecord make_jump_record(const MaterialLaw& law, const OneSidedStates& s, double r = 0.0,
                                   double t = 0.0, std::size_t face = 0) {
  JumpRecord j;
  j.face = face;
  j.r = r;
  j.t = t;
  j.states = s;
  j.jump_P = pressure(law, s.rho_plus) - pressure(law, s.rho_minus);
  j.jump_stress = stress_coefficient(law, s.rho_plus) * s.divu_plus -
                  stress_coefficient(law, s.rho_minus) * s.divu_minus;
  j.rh_residual = j.jump_stress - j.jump_P;
  if (s.rho_minus > 0.0 && s.rho_plus > 0.0) {
    j.jump_Lambda = big_lambda(law, s.rho_plus) - big_lambda(law, s.rho_minus);
    if (j.jump_Lambda != 0.0) j.a = j.jump_P / j.jump_Lambda;
  }
  return j;
}

struct JumpDetection {
  std::vector<JumpRecord> jumps;
  std::vector<std::string> notes;
};

/// Flags faces with |rho_{i+1} - rho_i| > kappa rho_bar; each run of adjacent flagged
/// faces is one jump located at its steepest face.
inline JumpDetection detect_jumps(const RadialState& st, const MaterialLaw& law, double kappa,
                                  JumpZoneOptions zone = {}) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("detect_jumps: kappa must lie in (0,1)", "diagnostics.kappa");
  JumpDetection out;
  const std::size_t n = st.rho.size();
  const double thr = kappa * law.rho_bar;
  std::size_t k = 1;
  while (k < n) {
    if (std::fabs(st.rho[k] - st.rho[k - 1]) <= thr) {
      ++k;
      continue;
    }
    std::size_t best = k;
    double best_d = 0.0;
    while (k < n && std::fabs(st.rho[k] - st.rho[k - 1]) > thr) {
      const double d = std::fabs(st.rho[k] - st.rho[k - 1]);
      if (d > best_d) {
        best_d = d;
        best = k;
      }
      ++k;
    }
    try {
      out.jumps.push_back(make_jump_record(law, one_sided_states(st, best, zone), st.grid.face(best), st.t, best));
    } catch (const DomainError&) {
      out.notes.push_back("jump at face " + std::to_string(best) + " skipped: too close to the domain edge");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lambda-jump decay

struct LambdaDecay {
  std::vector<double> t;
  std::vector<double> measured;  // [Lambda](t)
  std::vector<double> a;         // [P]/[Lambda]
  std::vector<double> predicted; // [Lambda](0) exp(-int_0^t a)
  std::vector<double> position;
  double max_rel_deviation = 0.0;
  bool truncated = false;
  double last_reliable_time = 0.0;
};

/// Compares a measured [Lambda] series with the exponential law driven by the measured a(t)
/// (trapezoid in time).
inline LambdaDecay compare_lambda_decay(const std::vector<double>& t, const std::vector<double>& jump_lambda,
                                        const std::vector<double>& a) {
  if (t.empty() || t.size() != jump_lambda.size() || t.size() != a.size()) {
    throw ConfigError("compare_lambda_decay: series length mismatch", "diagnostics");
  }
  LambdaDecay rep;
  rep.t = t;
  rep.measured = jump_lambda;
  rep.a = a;
  double integral = 0.0;
  for (std::size_t n = 0; n < t.size(); ++n) {
    if (n > 0) integral += 0.5 * (t[n] - t[n - 1]) * (a[n] + a[n - 1]);
    const double pred = jump_lambda.front() * std::exp(-integral);
    rep.predicted.push_back(pred);
    rep.max_rel_deviation = std::max(rep.max_rel_deviation, std::fabs(jump_lambda[n] - pred) / std::fabs(pred));
  }
  rep.last_reliable_time = t.back();
  return rep;
}

struct LambdaDecayOptions {
  double kappa = 0.05;
  JumpZoneOptions zone{};
  std::size_t search = 3; // cells around the path position searched for the jump
};

/// Follows the jump seeded at r0 along its particle path and compares [Lambda](t) with
/// the exponential decay law.
inline LambdaDecay lambda_jump_decay(const std::vector<RadialState>& snaps, const MaterialLaw& law,
                                     double r0, LambdaDecayOptions opt = {}) {
  const auto hist = RadialVelocityHistory::from_snapshots(snaps);
  const auto path = integrate_path(hist, r0, snaps.front().t, snaps.back().t);
  std::vector<double> t, jl, a, pos;
  bool truncated = false;
  for (const auto& st : snaps) {
    const double x = position_at(path, st.t);
    const auto n = st.rho.size();
    const auto k_path = static_cast<std::size_t>(std::clamp(std::round(x / st.grid.dr()), 1.0, static_cast<double>(n - 1)));
    // Steepest face near the path position; the jump must still exceed the threshold.
    std::size_t k = k_path;
    double best = -1.0;
    const std::size_t lo = k_path > opt.search ? k_path - opt.search : 1;
    const std::size_t hi = std::min(n - 1, k_path + opt.search);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double d = std::fabs(st.rho[j] - st.rho[j - 1]);
      if (d > best) {
        best = d;
        k = j;
      }
    }
    if (best <= opt.kappa * law.rho_bar) {
      truncated = true;
      break;
    }
    JumpRecord rec;
    try {
      rec = make_jump_record(law, one_sided_states(st, k, opt.zone), st.grid.face(k), st.t, k);
    } catch (const DomainError&) {
      truncated = true;
      break;
    }
    if (!std::isfinite(rec.a)) {
      truncated = true;
      break;
    }
    t.push_back(st.t);
    jl.push_back(rec.jump_Lambda);
    a.push_back(rec.a);
    pos.push_back(x);
  }
  if (t.empty()) throw DomainError("lambda_jump_decay: no jump found at the seed");
  auto rep = compare_lambda_decay(t, jl, a);
  rep.position = std::move(pos);
  rep.truncated = truncated;
  return rep;
}

// ---------------------------------------------------------------------------
// Vacuum

struct VacuumReport {
  std::vector<double> t;
  std::vector<double> vac_measure;     // area of {rho <= eps_vac}
  std::vector<double> annulus_area;    // pi (b^2 - a^2) from the interface track
  std::vector<double> l4;              // int |rho - rho_tilde|^4 dx
  std::vector<double> max_in_annulus;  // max density over the annulus interior
  std::vector<double> a, b;
  bool contained = true; // flagged cells inside [a - 2 dr, b + 2 dr] at every time
  double worst_excursion = 0.0; // distance (in cells) of the worst flagged cell outside the band
  double eps_vac = 0.0;
};

inline double default_eps_vac(double delta_floor) { return std::max(10.0 * delta_floor, 1e-8); }

struct VacuumOptions {
  double eps_vac = -1.0; // <= 0: default_eps_vac(delta)
  /// Interior of the annulus used for the maximum density: cells farther than
  /// max(interior_cells dr, interior_fraction (b - a)) from both interfaces.
  double interior_fraction = 0.1;
  std::size_t interior_cells = 4;
};

/// Vacuum measure, L4 distance and containment of the flagged set in the tracked annulus.
/// `track` may be empty (no annulus): then only measures are reported.
inline VacuumReport vacuum_report(const std::vector<RadialState>& snaps, const MaterialLaw& law,
                                  const InterfaceTrack* track, VacuumOptions opt = {}) {
  VacuumReport rep;
  if (snaps.empty()) return rep;
  const double delta = snaps.front().delta_floor;
  rep.eps_vac = opt.eps_vac > 0.0 ? opt.eps_vac : default_eps_vac(delta);
  if (!(rep.eps_vac > 2.0 * delta)) throw ConfigError("vacuum_report: eps_vac must exceed 2 delta_floor", "diagnostics.eps_vac");
  for (const auto& st : snaps) {
    const double dr = st.grid.dr();
    double area = 0.0, l4 = 0.0;
    for (std::size_t i = 0; i < st.rho.size(); ++i) {
      const double d = st.rho[i] - law.rho_tilde;
      l4 += d * d * d * d * st.grid.cell_area(i);
      if (st.rho[i] <= rep.eps_vac) area += st.grid.cell_area(i);
    }
    rep.t.push_back(st.t);
    rep.vac_measure.push_back(area);
    rep.l4.push_back(l4);
    if (track && !track->t.empty()) {
      if (st.t > track->t.back() + 1e-12) break;
      // a(t), b(t) by linear interpolation of the track samples.
      auto it = std::lower_bound(track->t.begin(), track->t.end(), st.t);
      std::size_t j = static_cast<std::size_t>(it - track->t.begin());
      double a, b;
      if (j == 0) {
        a = track->a.front();
        b = track->b.front();
      } else if (j >= track->t.size()) {
        a = track->a.back();
        b = track->b.back();
      } else {
        const double w = (st.t - track->t[j - 1]) / (track->t[j] - track->t[j - 1]);
        a = track->a[j - 1] + w * (track->a[j] - track->a[j - 1]);
        b = track->b[j - 1] + w * (track->b[j] - track->b[j - 1]);
      }
      rep.a.push_back(a);
      rep.b.push_back(b);
      rep.annulus_area.push_back(std::numbers::pi * (b * b - a * a));
      const double margin = std::max(static_cast<double>(opt.interior_cells) * dr, opt.interior_fraction * (b - a));
      double mx = 0.0;
      for (std::size_t i = 0; i < st.rho.size(); ++i) {
        const double r = st.grid.center(i);
        if (st.rho[i] <= rep.eps_vac) {
          const double out = std::max(a - 2.0 * dr - r, r - (b + 2.0 * dr));
          if (out > 0.0) {
            rep.contained = false;
            rep.worst_excursion = std::max(rep.worst_excursion, out / dr);
          }
        }
        if (r >= a + margin && r <= b - margin) mx = std::max(mx, st.rho[i]);
      }
      rep.max_in_annulus.push_back(mx);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Annulus velocity law

struct AnnulusFit {
  bool skipped = false;
  std::string note;
  std::size_t faces = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double rms = 0.0;
  double max_abs_v = 0.0;
  double stress_rate = 0.0;   // 2 alpha
  double interface_rate = 0.0; // 2 (a v(a) - b v(b)) / (a^2 - b^2)
  double rel_difference = 0.0;
};

/// (alpha, beta) of v = alpha r + beta / r through (a, v(a)) and (b, v(b)).
inline std::pair<double, double> annulus_coefficients(double a, double b, double va, double vb) {
  // alpha a^2 + beta = a va ; alpha b^2 + beta = b vb
  const double alpha = (a * va - b * vb) / (a * a - b * b);
  return {alpha, a * va - alpha * a * a};
}

/// Right-hand side 2 (a v(a) - b v(b)) / (a^2 - b^2) of the interface divergence formula.
inline double interface_divergence(double a, double b, double va, double vb) {
  return 2.0 * (a * va - b * vb) / (a * a - b * b);
}

inline double face_velocity_at(const RadialState& st, double r) {
  const double x = std::clamp(r / st.grid.dr(), 0.0, static_cast<double>(st.rho.size()));
  const auto k = std::min(static_cast<std::size_t>(x), st.rho.size() - 1);
  const double w = x - static_cast<double>(k);
  return (1.0 - w) * st.v[k] + w * st.v[k + 1];
}

/// Least-squares fit of v = alpha r + beta / r on the faces of the vacuum zone between a
/// and b (both neighbouring cells at or below eps_vac).
inline AnnulusFit annulus_velocity_check(const RadialState& st, double a, double b, double eps_vac,
                                         std::size_t min_faces = 6) {
  AnnulusFit fit;
  double s11 = 0, s12 = 0, s22 = 0, y1 = 0, y2 = 0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 1; k < st.rho.size(); ++k) {
    const double r = st.grid.face(k);
    if (r <= a || r >= b) continue;
    if (st.rho[k - 1] > eps_vac || st.rho[k] > eps_vac) continue;
    pts.emplace_back(r, st.v[k]);
  }
  fit.faces = pts.size();
  if (pts.size() < min_faces) {
    fit.skipped = true;
    fit.note = "too few vacuum faces (" + std::to_string(pts.size()) + ")";
    return fit;
  }
  for (auto [r, v] : pts) {
    const double f1 = r, f2 = 1.0 / r;
    s11 += f1 * f1;
    s12 += f1 * f2;
    s22 += f2 * f2;
    y1 += f1 * v;
    y2 += f2 * v;
    fit.max_abs_v = std::max(fit.max_abs_v, std::fabs(v));
  }
  const double det = s11 * s22 - s12 * s12;
  fit.alpha = (y1 * s22 - y2 * s12) / det;
  fit.beta = (s11 * y2 - s12 * y1) / det;
  double ss = 0.0;
  for (auto [r, v] : pts) {
    const double e = v - (fit.alpha * r + fit.beta / r);
    ss += e * e;
  }
  fit.rms = std::sqrt(ss / static_cast<double>(pts.size()));
  fit.stress_rate = 2.0 * fit.alpha;
  fit.interface_rate = interface_divergence(a, b, face_velocity_at(st, a), face_velocity_at(st, b));
  const double scale = std::max(std::fabs(fit.stress_rate), std::fabs(fit.interface_rate));
  fit.rel_difference = scale > 0.0 ? std::fabs(fit.stress_rate - fit.interface_rate) / scale : 0.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Two-fluid energy identity (measure r dr)

/// 2 (lambda(0) + 2 mu) a v(a) (a v(a) - b v(b)) / (a^2 - b^2).
inline double two_fluid_rhs(const MaterialLaw& law, double a, double b, double va, double vb) {
  return 2.0 * (lambda_visc(law, 0.0) + 2.0 * law.mu) * a * va * (a * va - b * vb) / (a * a - b * b);
}

struct TwoFluidBalance {
  std::vector<double> t;
  std::vector<double> energy;      // E(t) incl. accumulated dissipation
  std::vector<double> dEdt;        // centred differences (one-sided at the ends)
  std::vector<double> rhs;
  std::vector<double> dissipation; // inner dissipation rate
  std::vector<double> residual;    // dEdt - rhs
  std::vector<double> scale;       // max(|dEdt|, |rhs|, D_inner)
  double max_rel_residual = 0.0;   // over interior samples
  bool truncated = false;
};

struct InnerEnergy {
  double energy = 0.0;
  double dissipation = 0.0;
};

/// int_0^a (rho v^2 / 2 + Gbar(rho)) r dr and the matching dissipation rate, with the cell
/// containing a weighted by its covered fraction.
inline InnerEnergy inner_energy(const RadialState& st, const MaterialLaw& law, double a) {
  InnerEnergy e;
  const double dr = st.grid.dr();
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    const double lo = st.grid.face(i);
    if (lo >= a) break;
    const double frac = std::min(1.0, (a - lo) / dr);
    const double w = st.grid.center(i) * dr * frac;
    const double vbar = 0.5 * (st.v[i] + st.v[i + 1]);
    const double div = cell_divergence(st, i);
    e.energy += (0.5 * st.rho[i] * vbar * vbar + potential_Gbar(law, st.rho[i])) * w;
    e.dissipation += stress_coefficient(law, st.rho[i]) * div * div * w;
  }
  return e;
}

inline TwoFluidBalance two_fluid_energy_balance(const std::vector<RadialState>& snaps, const InterfaceTrack& track,
                                                const MaterialLaw& law) {
  TwoFluidBalance rep;
  rep.truncated = track.collision;
  std::vector<double> stored;
  for (const auto& st : snaps) {
    if (track.t.empty() || st.t > track.t.back() + 1e-12) {
      rep.truncated = rep.truncated || !track.t.empty();
      break;
    }
    auto it = std::lower_bound(track.t.begin(), track.t.end(), st.t - 1e-14);
    const std::size_t j = std::min(static_cast<std::size_t>(it - track.t.begin()), track.t.size() - 1);
    double a = track.a[j], b = track.b[j];
    if (j > 0 && track.t[j] != st.t) {
      const double w = (st.t - track.t[j - 1]) / (track.t[j] - track.t[j - 1]);
      a = track.a[j - 1] + w * (track.a[j] - track.a[j - 1]);
      b = track.b[j - 1] + w * (track.b[j] - track.b[j - 1]);
    }
    const auto e = inner_energy(st, law, a);
    rep.t.push_back(st.t);
    stored.push_back(e.energy);
    rep.dissipation.push_back(e.dissipation);
    rep.rhs.push_back(two_fluid_rhs(law, a, b, face_velocity_at(st, a), face_velocity_at(st, b)));
  }
  const std::size_t m = rep.t.size();
  double cum = 0.0;
  for (std::size_t n = 0; n < m; ++n) {
    if (n > 0) cum += 0.5 * (rep.t[n] - rep.t[n - 1]) * (rep.dissipation[n] + rep.dissipation[n - 1]);
    rep.energy.push_back(stored[n] + cum);
  }
  for (std::size_t n = 0; n < m; ++n) {
    double d = 0.0;
    if (m >= 2) {
      const std::size_t lo = n == 0 ? 0 : n - 1;
      const std::size_t hi = n + 1 < m ? n + 1 : n;
      d = (rep.energy[hi] - rep.energy[lo]) / (rep.t[hi] - rep.t[lo]);
    }
    rep.dEdt.push_back(d);
    rep.residual.push_back(d - rep.rhs[n]);
    rep.scale.push_back(std::max({std::fabs(d), std::fabs(rep.rhs[n]), rep.dissipation[n]}));
    if (n > 0 && n + 1 < m && rep.scale[n] > 0.0) {
      rep.max_rel_residual = std::max(rep.max_rel_residual, std::fabs(rep.residual[n]) / rep.scale[n]);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Particle-path ODE for Lambda

struct ParticleOdeResidual {
  std::vector<double> t;   // interior sample times
  std::vector<double> R;   // dLambda/dt + P - P(rho_tilde) + F
  double l2 = 0.0;         // sqrt(sum R^2 dt)
  bool truncated = false;
};

/// Residual of d/dt Lambda(rho) + P(rho) - P(rho_tilde) + F = 0 from samples along a path;
/// dLambda/dt by centred differences at interior samples.
inline ParticleOdeResidual particle_ode_residual_series(const MaterialLaw& law, const std::vector<double>& t,
                                                        const std::vector<double>& rho,
                                                        const std::vector<double>& F) {
  ParticleOdeResidual rep;
  const double pt = pressure(law, law.rho_tilde);
  for (std::size_t n = 1; n + 1 < t.size(); ++n) {
    const double dl = (big_lambda(law, rho[n + 1]) - big_lambda(law, rho[n - 1])) / (t[n + 1] - t[n - 1]);
    const double r = dl + pressure(law, rho[n]) - pt + F[n];
    rep.t.push_back(t[n]);
    rep.R.push_back(r);
    rep.l2 += r * r * 0.5 * (t[n + 1] - t[n - 1]);
  }
  rep.l2 = std::sqrt(rep.l2);
  return rep;
}

inline double cell_value_at(const RadialState& st, double r, const std::vector<double>& cell) {
  const double x = r / st.grid.dr() - 0.5;
  if (x <= 0.0) return cell.front();
  const auto n = cell.size();
  if (x >= static_cast<double>(n - 1)) return cell.back();
  const auto i = static_cast<std::size_t>(x);
  const double w = x - static_cast<double>(i);
  return (1.0 - w) * cell[i] + w * cell[i + 1];
}

/// Samples rho and F along the path at the snapshot times and evaluates the residual.
inline ParticleOdeResidual particle_ode_residual(const std::vector<RadialState>& snaps,
                                                 const ParticlePath<double>& path, const MaterialLaw& law,
                                                 double vacuum_density = 1e-8) {
  std::vector<double> t, rho, F;
  bool truncated = path.truncated;
  for (const auto& st : snaps) {
    if (st.t < std::min(path.t.front(), path.t.back()) - 1e-12 ||
        st.t > std::max(path.t.front(), path.t.back()) + 1e-12) {
      continue;
    }
    const double x = position_at(path, st.t);
    std::vector<double> f(st.rho.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = cell_flux(st, law, i);
    const double r = cell_value_at(st, x, st.rho);
    if (r <= vacuum_density) {
      truncated = true;
      break;
    }
    t.push_back(st.t);
    rho.push_back(r);
    F.push_back(cell_value_at(st, x, f));
  }
  auto rep = particle_ode_residual_series(law, t, rho, F);
  rep.truncated = truncated;
  return rep;
}

} // namespace viscoflux
