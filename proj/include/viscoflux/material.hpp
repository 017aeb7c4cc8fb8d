#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "viscoflux/errors.hpp"
#include "viscoflux/quadrature.hpp"

namespace viscoflux {

/// Barotropic law P = A rho^gamma with shear viscosity mu and density-dependent
/// second viscosity lambda(rho) = c_lam rho^beta. beta == 0 is the constant-lambda mode.
struct MaterialLaw {
  double A = 1.0;
  double gamma = 2.0;
  double c_lam = 1.0;
  double beta = 2.0;
  double mu = 1.0;
  double rho_tilde = 1.0;
  double rho_bar = 3.0;
  double q = 1.0; // integrability exponent; recorded, never used in computation
};

namespace detail {

// pow with fast paths for the integer exponents every shipped scenario uses.
inline double power(double x, double e) {
  if (e == 2.0) return x * x;
  if (e == 1.0) return x;
  if (e == 3.0) return x * x * x;
  if (e == 0.0) return 1.0;
  return std::pow(x, e);
}

inline void require_nonnegative(double rho, const char* fn) {
  if (!(rho >= 0.0)) throw DomainError(std::string(fn) + ": density must be >= 0");
}

} // namespace detail

/// Throws ConfigError when the law violates the admissibility hypotheses.
/// `compact_support` admits rho_tilde == 0 (vanishing far field).
inline void validate(const MaterialLaw& law, bool compact_support = false) {
  auto fail = [](const std::string& msg, const std::string& key) {
    throw ConfigError("material law: " + msg, "law." + key);
  };
  if (!std::isfinite(law.A) || law.A <= 0.0) fail("A must be > 0", "A");
  if (!std::isfinite(law.gamma) || law.gamma < 1.0) fail("gamma must be >= 1", "gamma");
  if (!std::isfinite(law.c_lam) || law.c_lam < 0.0) fail("c_lam must be >= 0", "c_lam");
  if (!std::isfinite(law.beta) || law.beta < 0.0) fail("beta must be >= 0", "beta");
  if (!std::isfinite(law.mu) || law.mu <= 0.0) fail("mu must be > 0", "mu");
  if (compact_support) {
    if (!(law.rho_tilde >= 0.0)) fail("rho_tilde must be >= 0", "rho_tilde");
  } else if (!(law.rho_tilde > 0.0)) {
    fail("rho_tilde must be > 0", "rho_tilde");
  }
  if (!(law.rho_bar > law.rho_tilde) || !std::isfinite(law.rho_bar)) {
    fail("rho_bar must exceed rho_tilde", "rho_bar");
  }
  if (!(law.q > 0.0 && law.q < 2.0)) fail("q must lie in (0,2)", "q");
}

inline double pressure(const MaterialLaw& law, double rho) {
  detail::require_nonnegative(rho, "pressure");
  return law.A * detail::power(rho, law.gamma);
}

/// dP/drho; the squared sound speed.
inline double pressure_slope(const MaterialLaw& law, double rho) {
  detail::require_nonnegative(rho, "pressure_slope");
  if (law.gamma == 1.0) return law.A;
  return law.A * law.gamma * detail::power(rho, law.gamma - 1.0);
}

inline double lambda_visc(const MaterialLaw& law, double rho) {
  detail::require_nonnegative(rho, "lambda_visc");
  return law.c_lam * detail::power(rho, law.beta);
}

/// lambda(rho) + 2 mu, the coefficient of div u in the normal stress.
inline double stress_coefficient(const MaterialLaw& law, double rho) {
  return lambda_visc(law, rho) + 2.0 * law.mu;
}

/// Antiderivative of (2 mu + lambda(s)) / s normalized to vanish at rho_tilde.
inline double big_lambda(const MaterialLaw& law, double rho) {
  if (!(rho > 0.0)) throw DomainError("big_lambda: density must be > 0 (diverges at vacuum)");
  if (!(law.rho_tilde > 0.0)) throw ConfigError("big_lambda: requires rho_tilde > 0", "law.rho_tilde");
  const double log_ratio = std::log(rho / law.rho_tilde);
  if (law.beta == 0.0) return (2.0 * law.mu + law.c_lam) * log_ratio;
  return 2.0 * law.mu * log_ratio +
         law.c_lam / law.beta *
             (detail::power(rho, law.beta) - detail::power(law.rho_tilde, law.beta));
}

/// Potential energy density G(rho) = rho * int_{rho_tilde}^{rho} (P(s) - P(rho_tilde)) / s^2 ds.
/// At rho == 0 the limit value P(rho_tilde) is returned.
inline double potential_G(const MaterialLaw& law, double rho) {
  detail::require_nonnegative(rho, "potential_G");
  const double rt = law.rho_tilde;
  const double pt = pressure(law, rt);
  if (rt == 0.0) {
    // Vanishing far field: G coincides with Gbar.
    if (law.gamma <= 1.0) throw ConfigError("potential_G: rho_tilde = 0 requires gamma > 1", "law.gamma");
    return law.A * detail::power(rho, law.gamma) / (law.gamma - 1.0);
  }
  if (rho == 0.0) return pt;
  double integral_p;
  if (law.gamma == 1.0) {
    integral_p = law.A * std::log(rho / rt);
  } else {
    integral_p = law.A *
                 (detail::power(rho, law.gamma - 1.0) - detail::power(rt, law.gamma - 1.0)) /
                 (law.gamma - 1.0);
  }
  // rho * pt * (1/rho - 1/rt) = pt * (1 - rho/rt)
  return rho * integral_p + pt * (1.0 - rho / rt);
}

/// Gbar(rho) = rho * int_0^rho P(s) / s^2 ds; finite only for gamma > 1.
inline double potential_Gbar(const MaterialLaw& law, double rho) {
  detail::require_nonnegative(rho, "potential_Gbar");
  if (!(law.gamma > 1.0)) {
    throw ConfigError(
        "potential_Gbar: requires gamma > 1 so that int_0^1 P(s)/s^2 ds is finite",
        "law.gamma");
  }
  return law.A * detail::power(rho, law.gamma) / (law.gamma - 1.0);
}

inline double effective_flux_scalar(const MaterialLaw& law, double rho, double divu) {
  return stress_coefficient(law, rho) * divu - pressure(law, rho) + pressure(law, law.rho_tilde);
}

struct NuP0 {
  double nu;
  double p0;
};

/// nu = 1/(2 mu + lambda), P0 = nu (P - P(rho_tilde)).
inline NuP0 nu_and_P0(const MaterialLaw& law, double rho) {
  const double nu = 1.0 / stress_coefficient(law, rho);
  return {nu, nu * (pressure(law, rho) - pressure(law, law.rho_tilde))};
}

// Quadrature routes. They evaluate the defining integrals of Lambda, G and Gbar
// numerically from pressure() and lambda_visc() alone and serve as the fallback for
// laws without a closed form.

inline double big_lambda_quadrature(const MaterialLaw& law, double rho,
                                    quad::SimpsonOptions opt = {}) {
  if (!(rho > 0.0)) throw DomainError("big_lambda_quadrature: density must be > 0");
  auto integrand = [&](double s) { return stress_coefficient(law, s) / s; };
  return quad::adaptive_simpson(integrand, law.rho_tilde, rho, opt);
}

inline double potential_G_quadrature(const MaterialLaw& law, double rho,
                                     quad::SimpsonOptions opt = {}) {
  if (!(rho > 0.0)) throw DomainError("potential_G_quadrature: density must be > 0");
  const double pt = pressure(law, law.rho_tilde);
  auto integrand = [&](double s) { return (pressure(law, s) - pt) / (s * s); };
  return rho * quad::adaptive_simpson(integrand, law.rho_tilde, rho, opt);
}

inline double potential_Gbar_quadrature(const MaterialLaw& law, double rho,
                                        quad::SimpsonOptions opt = {}) {
  detail::require_nonnegative(rho, "potential_Gbar_quadrature");
  if (!(law.gamma > 1.0)) throw ConfigError("potential_Gbar_quadrature: requires gamma > 1", "law.gamma");
  if (rho == 0.0) return 0.0;
  // s = rho * w^m removes the endpoint singularity of P(s)/s^2 at s = 0.
  const double m = std::max(1.0, 2.0 / (law.gamma - 1.0));
  auto integrand = [&](double w) {
    if (w == 0.0) return 0.0;
    const double s = rho * std::pow(w, m);
    return pressure(law, s) / (s * s) * m * rho * std::pow(w, m - 1.0);
  };
  return rho * quad::adaptive_simpson(integrand, 0.0, 1.0, opt);
}

} // namespace viscoflux
