#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "viscoflux/errors.hpp"
#include "viscoflux/material.hpp"
#include "viscoflux/quadrature.hpp"
#include "viscoflux/radial_solver.hpp"

namespace viscoflux {

/// Throws unless 1 < beta <= gamma and A, c_lam > 0, the setting of the finite-lifespan
/// bound for compactly supported data.
inline void require_blowup_hypotheses(const MaterialLaw& law) {
  if (!(law.gamma > 1.0)) {
    throw ConfigError("blow-up analysis requires gamma > 1 (the coefficient 2/(gamma-1) is undefined)", "law.gamma");
  }
  if (!(law.beta > 1.0 && law.beta <= law.gamma)) {
    throw ConfigError("blow-up analysis requires 1 < beta <= gamma and A, c_lam > 0", "law.beta");
  }
  if (!(law.A > 0.0 && law.c_lam > 0.0)) {
    throw ConfigError("blow-up analysis requires 1 < beta <= gamma and A, c_lam > 0",
                      law.A > 0.0 ? "law.c_lam" : "law.A");
  }
}

/// H(t) = int (r - (1+t) v)^2 rho dx + 2A/(gamma-1) (1+t)^2 int rho^gamma dx with
/// dx = 2 pi r dr. rho is constant per cell and v linear between faces, so a 3-point
/// Gauss rule per cell is exact.
inline double H_functional(const RadialState& st, const MaterialLaw& law, double t) {
  if (!(law.gamma > 1.0)) throw ConfigError("H functional requires gamma > 1", "law.gamma");
  static constexpr double xg[3] = {-0.7745966692414833770, 0.0, 0.7745966692414833770};
  static constexpr double wg[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double dr = st.grid.dr();
  double kinetic = 0.0, potential = 0.0;
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    const double rc = st.grid.center(i);
    double s = 0.0;
    for (int q = 0; q < 3; ++q) {
      const double r = rc + 0.5 * dr * xg[q];
      const double w = (r - st.grid.face(i)) / dr;
      const double v = (1.0 - w) * st.v[i] + w * st.v[i + 1];
      const double d = r - (1.0 + t) * v;
      s += wg[q] * d * d * r;
    }
    kinetic += st.rho[i] * s * 0.5 * dr * 2.0 * std::numbers::pi;
    potential += detail::power(st.rho[i], law.gamma) * st.grid.cell_area(i);
  }
  return kinetic + 2.0 * law.A / (law.gamma - 1.0) * (1.0 + t) * (1.0 + t) * potential;
}

struct BlowupIntegrals {
  double rho_gamma = 0.0;     // int rho^gamma dx
  double lambda_div = 0.0;    // int lambda div u dx
  double stress_div2 = 0.0;   // int (lambda + 2 mu) (div u)^2 dx
  double wall_radius = 0.0;
  double wall_traction = 0.0; // normal stress 2 mu v_r + lambda div u at the outer wall
};

inline BlowupIntegrals blowup_integrals(const RadialState& st, const MaterialLaw& law) {
  BlowupIntegrals b;
  for (std::size_t i = 0; i < st.rho.size(); ++i) {
    const double a = st.grid.cell_area(i);
    const double d = cell_divergence(st, i);
    b.rho_gamma += detail::power(st.rho[i], law.gamma) * a;
    b.lambda_div += lambda_visc(law, st.rho[i]) * d * a;
    b.stress_div2 += stress_coefficient(law, st.rho[i]) * d * d * a;
  }
  const std::size_t n = st.rho.size();
  b.wall_radius = st.grid.r_max;
  b.wall_traction = 2.0 * law.mu * (st.v[n] - st.v[n - 1]) / st.grid.dr() +
                    lambda_visc(law, st.rho[n - 1]) * cell_divergence(st, n - 1);
  return b;
}

/// Traction term -4 pi (1+t) R^2 S_rr(R) that the outer wall adds to H'. It vanishes when
/// the velocity is identically zero outside the support.
inline double H_wall_term(const BlowupIntegrals& b, double t) {
  return -4.0 * std::numbers::pi * (1.0 + t) * b.wall_radius * b.wall_radius * b.wall_traction;
}

/// Exact derivative of H along smooth solutions in the walled disk, evaluated on the snapshot.
inline double H_derivative_formula(const BlowupIntegrals& b, const MaterialLaw& law, double t) {
  const double s = 1.0 + t;
  return 4.0 * (2.0 - law.gamma) * s / (law.gamma - 1.0) * law.A * b.rho_gamma + 4.0 * s * b.lambda_div -
         2.0 * s * s * b.stress_div2 + H_wall_term(b, t);
}

/// Final upper bound for H'(t): 4(2-gamma)(1+t)/(gamma-1) int A rho^gamma
/// + (2 c beta / gamma) int rho^gamma + (2 c (gamma - beta) / gamma) |Omega(0)|.
inline double rhs_bound(const MaterialLaw& law, double rho_gamma_integral, double area0, double t) {
  const double g = law.gamma, b = law.beta, c = law.c_lam;
  return 4.0 * (2.0 - g) * (1.0 + t) / (g - 1.0) * law.A * rho_gamma_integral +
         2.0 * c * b / g * rho_gamma_integral + 2.0 * c * (g - b) / g * area0;
}

// ---------------------------------------------------------------------------
// Decay bound and contradiction time

/// F(t) = (1+t)(1 - (1+t)^{3-2 gamma}) / (2 gamma - 3), or (1+t)^{4-2 gamma} ln(1+t) at gamma = 3/2.
inline double aux_F(double gamma, double t) {
  const double s = 1.0 + t;
  if (gamma == 1.5) return std::pow(s, 4.0 - 2.0 * gamma) * std::log(s);
  return s * (1.0 - std::pow(s, 3.0 - 2.0 * gamma)) / (2.0 * gamma - 3.0);
}

inline double G_bound(const MaterialLaw& law, double H0, double area0, double t) {
  const double g = law.gamma, b = law.beta, c = law.c_lam;
  const double s = 1.0 + t;
  return 0.5 * (g - 1.0) * std::pow(s, 2.0 - 2.0 * g) * H0 +
         c * (g - 1.0) * (g - b) / g * area0 * std::exp(2.0 * c * b * (g - 1.0) / (law.A * g)) * aux_F(g, t) / (s * s);
}

/// (G(t)/A)^{1/gamma} |Omega(0)|^{(gamma-1)/gamma}, the mass the bound still permits.
inline double admissible_mass(const MaterialLaw& law, double H0, double area0, double t) {
  return std::pow(G_bound(law, H0, area0, t) / law.A, 1.0 / law.gamma) *
         std::pow(area0, (law.gamma - 1.0) / law.gamma);
}

struct ContradictionTime {
  bool reachable = false;
  double T_star = std::numeric_limits<double>::infinity();
  std::vector<double> t;
  std::vector<double> G;
};

/// Smallest t with admissible_mass(t) < M0: a scan on a geometric grid up to t_max brackets
/// the first crossing, bisection refines it to machine precision.
inline ContradictionTime contradiction_time(double H0, const MaterialLaw& law, double M0, double area0,
                                            double t_max = 1e12, std::size_t scan_points = 4000) {
  require_blowup_hypotheses(law);
  if (!(H0 > 0.0 && M0 > 0.0 && area0 > 0.0)) {
    throw ConfigError("contradiction_time: H0, M0 and |Omega(0)| must be positive", "blowup");
  }
  ContradictionTime out;
  auto fails = [&](double t) { return admissible_mass(law, H0, area0, t) < M0; };
  const double t_lo = 1e-8;
  double prev = 0.0;
  out.t.push_back(0.0);
  out.G.push_back(G_bound(law, H0, area0, 0.0));
  if (fails(0.0)) {
    out.reachable = true;
    out.T_star = 0.0;
    return out;
  }
  const double ratio = std::pow(t_max / t_lo, 1.0 / static_cast<double>(scan_points - 1));
  double t = t_lo;
  for (std::size_t k = 0; k < scan_points; ++k, t *= ratio) {
    out.t.push_back(t);
    out.G.push_back(G_bound(law, H0, area0, t));
    if (fails(t)) {
      double lo = prev, hi = t;
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (fails(mid) ? hi : lo) = mid;
      }
      out.reachable = true;
      out.T_star = hi;
      return out;
    }
    prev = t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report over a compact-support run

struct BlowupReport {
  std::vector<double> t;
  std::vector<double> H;
  std::vector<double> dH_diff;     // centred differences (one-sided at the ends)
  std::vector<double> dH_formula;  // includes the wall term
  std::vector<double> wall_term;
  std::vector<double> rhs;
  std::vector<double> margin;      // rhs - dH_diff
  std::vector<double> support_radius;
  double M0 = 0.0;
  double area0 = 0.0;
  double window_start = 0.0;
  double min_margin = std::numeric_limits<double>::infinity(); // over interior samples in the window
  double tol_discrete = 0.0;       // max |dH_diff - dH_formula| over the same samples
  bool margin_ok = true;           // min_margin >= -tol_discrete
  ContradictionTime contradiction;
};

/// Cells with density above `support_density` form the support; its initial area is |Omega(0)|.
/// Margins and tol_discrete use interior samples with t >= window_start, which lets a caller
/// skip the start-up layer where H' changes on a time scale below the snapshot spacing.
inline BlowupReport blowup_report(const std::vector<RadialState>& snaps, const MaterialLaw& law,
                                  double support_density, double window_start = 0.0) {
  require_blowup_hypotheses(law);
  if (snaps.size() < 3) throw ConfigError("blowup_report: needs at least three snapshots", "time.snapshot_every");
  BlowupReport rep;
  rep.window_start = window_start;
  const auto& s0 = snaps.front();
  rep.M0 = total_mass(s0);
  for (std::size_t i = 0; i < s0.rho.size(); ++i) {
    if (s0.rho[i] > support_density) rep.area0 += s0.grid.cell_area(i);
  }
  std::vector<BlowupIntegrals> ints;
  for (const auto& st : snaps) {
    rep.t.push_back(st.t);
    rep.H.push_back(H_functional(st, law, st.t));
    ints.push_back(blowup_integrals(st, law));
    double rs = 0.0;
    for (std::size_t i = 0; i < st.rho.size(); ++i) {
      if (st.rho[i] > support_density) rs = st.grid.face(i + 1);
    }
    rep.support_radius.push_back(rs);
  }
  const std::size_t m = rep.t.size();
  for (std::size_t n = 0; n < m; ++n) {
    const std::size_t lo = n == 0 ? 0 : n - 1;
    const std::size_t hi = n + 1 < m ? n + 1 : n;
    const double d = (rep.H[hi] - rep.H[lo]) / (rep.t[hi] - rep.t[lo]);
    rep.dH_diff.push_back(d);
    rep.dH_formula.push_back(H_derivative_formula(ints[n], law, rep.t[n]));
    rep.wall_term.push_back(H_wall_term(ints[n], rep.t[n]));
    rep.rhs.push_back(rhs_bound(law, ints[n].rho_gamma, rep.area0, rep.t[n]));
    rep.margin.push_back(rep.rhs.back() - d);
    if (n > 0 && n + 1 < m && rep.t[n] >= window_start - 1e-12) {
      rep.min_margin = std::min(rep.min_margin, rep.margin.back());
      rep.tol_discrete = std::max(rep.tol_discrete, std::fabs(d - rep.dH_formula.back()));
    }
  }
  if (!std::isfinite(rep.min_margin)) {
    throw ConfigError("blowup_report: no interior snapshot inside the evaluation window", "blowup.window_start");
  }
  rep.margin_ok = rep.min_margin >= -rep.tol_discrete;
  rep.contradiction = contradiction_time(rep.H.front(), law, rep.M0, rep.area0);
  return rep;
}

} // namespace viscoflux
