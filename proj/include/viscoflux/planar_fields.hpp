#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "viscoflux/errors.hpp"
#include "viscoflux/material.hpp"

namespace viscoflux::planar {

/// Scalar field on the n x n torus [0, 2 pi)^2, stored row-major with index (i, j) at
/// x = 2 pi i / n, y = 2 pi j / n.
struct ScalarField {
  std::size_t n = 0;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(std::size_t n_, double value = 0.0) : n(n_), v(n_ * n_, value) {}

  double& operator()(std::size_t i, std::size_t j) { return v[(i % n) * n + (j % n)]; }
  double operator()(std::size_t i, std::size_t j) const { return v[(i % n) * n + (j % n)]; }
  double spacing() const { return 2.0 * std::numbers::pi / static_cast<double>(n); }
  double coord(std::size_t i) const { return spacing() * static_cast<double>(i); }

  template <class Fn>
  static ScalarField sample(std::size_t n, Fn&& fn) {
    ScalarField f(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) f(i, j) = fn(f.coord(i), f.coord(j));
    }
    return f;
  }
};

struct VectorField {
  ScalarField x; // u^1
  ScalarField y; // u^2

  VectorField() = default;
  explicit VectorField(std::size_t n) : x(n), y(n) {}
  VectorField(ScalarField a, ScalarField b) : x(std::move(a)), y(std::move(b)) {}
  std::size_t n() const { return x.n; }
  const ScalarField& operator[](int k) const { return k == 0 ? x : y; }
  ScalarField& operator[](int k) { return k == 0 ? x : y; }

  template <class Fn>
  static VectorField sample(std::size_t n, Fn&& fn) {
    return {ScalarField::sample(n, [&](double a, double b) { return fn(a, b)[0]; }),
            ScalarField::sample(n, [&](double a, double b) { return fn(a, b)[1]; })};
  }
};

/// Vorticity matrix w^{j,k} = d_k u^j - d_j u^k. Only w^{1,2} is stored, so the
/// antisymmetry w^{j,k} = -w^{k,j} holds exactly.
struct VorticityField {
  ScalarField w12;

  /// Component (j, k), 0-based, at node (i, l).
  double operator()(int j, int k, std::size_t i, std::size_t l) const {
    if (j == k) return 0.0;
    return j == 0 ? w12(i, l) : -w12(i, l);
  }
};

namespace detail {

inline void require_grid(std::size_t n) {
  if (n < 4 || (n & (n - 1)) != 0) throw ConfigError("planar field: n must be a power of two >= 4", "n");
}

inline void require_same(const ScalarField& a, const ScalarField& b) {
  if (a.n != b.n) throw ConfigError("planar field: grid size mismatch", "n");
}

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

/// FFTW plans per grid size. Plans are created FFTW_UNALIGNED and run through the
/// new-array execute interface, which FFTW documents as thread-safe.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(std::size_t n) {
    {
      std::shared_lock lock(mutex_);
      auto it = plans_.find(n);
      if (it != plans_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    const int ni = static_cast<int>(n);
    std::vector<double> real(n * n);
    auto* spectrum = fftw_alloc_complex(n * (n / 2 + 1));
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_2d(ni, ni, real.data(), spectrum, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.backward = fftw_plan_dft_c2r_2d(ni, ni, spectrum, real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(spectrum);
    if (!p.forward || !p.backward) throw IntegrityError("planar field: FFTW plan creation failed");
    plans_.emplace(n, p);
    return p;
  }

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  std::shared_mutex mutex_;
  std::map<std::size_t, PlanPair> plans_;
};

using Spectrum = std::vector<std::complex<double>>;

inline Spectrum forward(const ScalarField& f) {
  require_grid(f.n);
  const auto plans = PlanCache::instance().get(f.n);
  std::vector<double> in = f.v;
  Spectrum out(f.n * (f.n / 2 + 1));
  fftw_execute_dft_r2c(plans.forward, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

inline ScalarField backward(Spectrum s, std::size_t n) {
  const auto plans = PlanCache::instance().get(n);
  ScalarField f(n);
  fftw_execute_dft_c2r(plans.backward, reinterpret_cast<fftw_complex*>(s.data()), f.v.data());
  const double scale = 1.0 / static_cast<double>(n * n);
  for (double& x : f.v) x *= scale;
  return f;
}

// Signed wavenumber of row index i; kx for axis 0, ky (half spectrum) for axis 1.
inline double wavenumber(std::size_t i, std::size_t n) {
  return i <= n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
}

template <class Fn>
ScalarField spectral_apply(const ScalarField& f, Fn&& multiplier) {
  auto s = forward(f);
  const std::size_t n = f.n;
  const std::size_t h = n / 2 + 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < h; ++j) s[i * h + j] *= multiplier(i, j);
  }
  return backward(std::move(s), n);
}

} // namespace detail

/// Spectral partial derivative along axis 0 (x) or 1 (y). The Nyquist mode of an odd
/// derivative is dropped.
inline ScalarField derivative(const ScalarField& f, int axis) {
  const std::size_t n = f.n;
  return detail::spectral_apply(f, [&](std::size_t i, std::size_t j) {
    const std::size_t idx = axis == 0 ? i : j;
    if (idx == n / 2) return std::complex<double>(0.0, 0.0);
    const double k = axis == 0 ? detail::wavenumber(i, n) : static_cast<double>(j);
    return std::complex<double>(0.0, k);
  });
}

inline ScalarField laplacian(const ScalarField& f) {
  const std::size_t n = f.n;
  return detail::spectral_apply(f, [&](std::size_t i, std::size_t j) {
    const double kx = detail::wavenumber(i, n);
    const double ky = static_cast<double>(j);
    return std::complex<double>(-(kx * kx + ky * ky), 0.0);
  });
}

/// Zero-mean solution of Delta phi = g (the mean of g is discarded).
inline ScalarField solve_poisson(const ScalarField& g) {
  const std::size_t n = g.n;
  return detail::spectral_apply(g, [&](std::size_t i, std::size_t j) {
    const double kx = detail::wavenumber(i, n);
    const double ky = static_cast<double>(j);
    const double k2 = kx * kx + ky * ky;
    return std::complex<double>(k2 == 0.0 ? 0.0 : -1.0 / k2, 0.0);
  });
}

inline ScalarField divergence(const VectorField& u) {
  detail::require_same(u.x, u.y);
  auto a = derivative(u.x, 0);
  const auto b = derivative(u.y, 1);
  for (std::size_t p = 0; p < a.v.size(); ++p) a.v[p] += b.v[p];
  return a;
}

inline VectorField gradient(const ScalarField& f) { return {derivative(f, 0), derivative(f, 1)}; }

/// Perpendicular gradient (-d_y psi, d_x psi).
inline VectorField perp_gradient(const ScalarField& psi) {
  auto a = derivative(psi, 1);
  for (double& x : a.v) x = -x;
  return {std::move(a), derivative(psi, 0)};
}

inline VorticityField vorticity(const VectorField& u) {
  detail::require_same(u.x, u.y);
  auto w = derivative(u.x, 1);
  const auto b = derivative(u.y, 0);
  for (std::size_t p = 0; p < w.v.size(); ++p) w.v[p] -= b.v[p];
  return {std::move(w)};
}

inline ScalarField effective_flux_field(const MaterialLaw& law, const ScalarField& rho, const VectorField& u) {
  detail::require_same(rho, u.x);
  auto div = divergence(u);
  for (std::size_t p = 0; p < div.v.size(); ++p) {
    if (!(rho.v[p] >= 0.0)) throw DomainError("effective_flux_field: density must be >= 0");
    div.v[p] = effective_flux_scalar(law, rho.v[p], div.v[p]);
  }
  return div;
}

/// u_dot = u_t + (u . grad) u.
inline VectorField material_acceleration(const VectorField& u, const VectorField& u_t) {
  detail::require_same(u.x, u_t.x);
  VectorField out = u_t;
  for (int c = 0; c < 2; ++c) {
    const auto dx = derivative(u[c], 0);
    const auto dy = derivative(u[c], 1);
    for (std::size_t p = 0; p < dx.v.size(); ++p) out[c].v[p] += u.x.v[p] * dx.v[p] + u.y.v[p] * dy.v[p];
  }
  return out;
}

/// sqrt(int f^2 dx) on the torus.
inline double l2_norm(const ScalarField& f) {
  double s = 0.0;
  for (double x : f.v) s += x * x;
  return std::sqrt(s) * f.spacing();
}

inline double l2_norm(const VectorField& u) {
  const double a = l2_norm(u.x), b = l2_norm(u.y);
  return std::sqrt(a * a + b * b);
}

inline double integral(const ScalarField& f) {
  double s = 0.0;
  for (double x : f.v) s += x;
  return s * f.spacing() * f.spacing();
}

/// (d_k w^{j,k})_j.
inline VectorField vorticity_divergence(const VorticityField& w) {
  auto a = derivative(w.w12, 1); // d_2 w^{1,2}
  auto b = derivative(w.w12, 0); // d_1 w^{2,1} = -d_1 w^{1,2}
  for (double& x : b.v) x = -x;
  return {std::move(a), std::move(b)};
}

/// f = (rho u_dot - grad F - mu div w) / rho, which makes the momentum identity exact.
inline VectorField manufactured_forcing(const MaterialLaw& law, const ScalarField& rho, const VectorField& u,
                                        const VectorField& u_t) {
  for (double r : rho.v) {
    if (!(r > 0.0)) throw DomainError("manufactured forcing is unsupported where the density vanishes");
  }
  const auto udot = material_acceleration(u, u_t);
  const auto gradF = gradient(effective_flux_field(law, rho, u));
  const auto dw = vorticity_divergence(vorticity(u));
  VectorField f(rho.n);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t p = 0; p < rho.v.size(); ++p) {
      f[c].v[p] = (rho.v[p] * udot[c].v[p] - gradF[c].v[p] - law.mu * dw[c].v[p]) / rho.v[p];
    }
  }
  return f;
}

struct DecompositionReport {
  double residual_momentum = 0.0;
  double residual_poisson = 0.0;
  double residual_elliptic_u = 0.0;
};

inline DecompositionReport verify_decomposition(const MaterialLaw& law, const ScalarField& rho, const VectorField& u,
                                                const VectorField& u_t, const VectorField& f) {
  detail::require_grid(rho.n);
  detail::require_same(rho, u.x);
  detail::require_same(rho, u_t.x);
  detail::require_same(rho, f.x);
  const std::size_t N = rho.v.size();
  const auto F = effective_flux_field(law, rho, u);
  const auto w = vorticity(u);
  const auto udot = material_acceleration(u, u_t);
  const auto gradF = gradient(F);
  const auto dw = vorticity_divergence(w);

  DecompositionReport rep;
  VectorField mom(rho.n), rhs(rho.n);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t p = 0; p < N; ++p) {
      rhs[c].v[p] = rho.v[p] * (udot[c].v[p] - f[c].v[p]);
      mom[c].v[p] = rhs[c].v[p] - gradF[c].v[p] - law.mu * dw[c].v[p];
    }
  }
  rep.residual_momentum = l2_norm(mom);

  auto Fhat = solve_poisson(divergence(rhs));
  double mean = 0.0;
  for (double x : F.v) mean += x;
  mean /= static_cast<double>(N);
  for (std::size_t p = 0; p < N; ++p) Fhat.v[p] -= F.v[p] - mean;
  rep.residual_poisson = l2_norm(Fhat);

  ScalarField divu(rho.n);
  for (std::size_t p = 0; p < N; ++p) {
    divu.v[p] = (F.v[p] + pressure(law, rho.v[p]) - pressure(law, law.rho_tilde)) / stress_coefficient(law, rho.v[p]);
  }
  const auto gdiv = gradient(divu);
  VectorField ell(rho.n);
  for (int c = 0; c < 2; ++c) {
    const auto lap = laplacian(u[c]);
    for (std::size_t p = 0; p < N; ++p) ell[c].v[p] = lap.v[p] - gdiv[c].v[p] - dw[c].v[p];
  }
  rep.residual_elliptic_u = l2_norm(ell);
  return rep;
}

// ---------------------------------------------------------------------------
// Data functionals

struct PlanarFrame {
  double t = 0.0;
  ScalarField rho;
  VectorField u;
  VectorField u_t;
};

struct DataFunctionals {
  double C0 = 0.0;
  std::vector<double> t;
  std::vector<double> sigma_grad_u;       // sigma int |grad u|^2
  std::vector<double> sigma_rho_udot;     // sigma int rho |u_dot|^2
  std::vector<double> sigma2_rho_udot;    // sigma^2 int rho |u_dot|^2
  std::vector<double> sigma2_grad_udot;   // sigma^2 int |grad u_dot|^2
  double A1 = 0.0; // sup sigma int |grad u|^2 + sum sigma int rho |u_dot|^2 dt
  double A2 = 0.0; // sup sigma^2 int rho |u_dot|^2 + sum sigma^2 int |grad u_dot|^2 dt
};

inline double grad_sq_integral(const VectorField& u) {
  double s = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (int a = 0; a < 2; ++a) {
      const auto d = derivative(u[c], a);
      for (double x : d.v) s += x * x;
    }
  }
  return s * u.x.spacing() * u.x.spacing();
}

/// C0 from the first frame and the A1/A2-style sums over the history with
/// sigma(t) = min(1, t); time sums use the trapezoid rule.
inline DataFunctionals data_functionals(const MaterialLaw& law, const std::vector<PlanarFrame>& history) {
  if (history.empty()) throw ConfigError("data_functionals: empty history", "history");
  DataFunctionals out;
  const auto& f0 = history.front();
  const double cell = f0.rho.spacing() * f0.rho.spacing();
  for (std::size_t p = 0; p < f0.rho.v.size(); ++p) {
    const double u2 = f0.u.x.v[p] * f0.u.x.v[p] + f0.u.y.v[p] * f0.u.y.v[p];
    out.C0 += (0.5 * f0.rho.v[p] * u2 + potential_G(law, f0.rho.v[p])) * cell;
  }
  double sup1 = 0.0, sup2 = 0.0;
  for (const auto& fr : history) {
    const double sigma = std::min(1.0, fr.t);
    const auto udot = material_acceleration(fr.u, fr.u_t);
    double rho_udot = 0.0;
    for (std::size_t p = 0; p < fr.rho.v.size(); ++p) {
      rho_udot += fr.rho.v[p] * (udot.x.v[p] * udot.x.v[p] + udot.y.v[p] * udot.y.v[p]);
    }
    rho_udot *= fr.rho.spacing() * fr.rho.spacing();
    out.t.push_back(fr.t);
    out.sigma_grad_u.push_back(sigma * grad_sq_integral(fr.u));
    out.sigma_rho_udot.push_back(sigma * rho_udot);
    out.sigma2_rho_udot.push_back(sigma * sigma * rho_udot);
    out.sigma2_grad_udot.push_back(sigma * sigma * grad_sq_integral(udot));
    sup1 = std::max(sup1, out.sigma_grad_u.back());
    sup2 = std::max(sup2, out.sigma2_rho_udot.back());
  }
  double sum1 = 0.0, sum2 = 0.0;
  for (std::size_t k = 1; k < out.t.size(); ++k) {
    const double dt = out.t[k] - out.t[k - 1];
    sum1 += 0.5 * dt * (out.sigma_rho_udot[k] + out.sigma_rho_udot[k - 1]);
    sum2 += 0.5 * dt * (out.sigma2_grad_udot[k] + out.sigma2_grad_udot[k - 1]);
  }
  out.A1 = sup1 + sum1;
  out.A2 = sup2 + sum2;
  return out;
}

// ---------------------------------------------------------------------------
// Field I/O: CSV grid (one row per i) with a JSON sidecar {n, kind}.

inline void write_field_csv(const std::string& path, const std::vector<const ScalarField*>& comps) {
  const std::size_t n = comps.front()->n;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    std::ofstream os(comps.size() == 1 ? path : path + "." + std::to_string(c));
    if (!os) throw IntegrityError("cannot write " + path);
    os.precision(17);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) os << (j ? "," : "") << (*comps[c])(i, j);
      os << '\n';
    }
  }
  nlohmann::json side{{"n", n}, {"kind", comps.size() == 1 ? "scalar" : "vector"}};
  std::ofstream(path + ".json") << side.dump(2) << '\n';
}

inline void write_field(const std::string& path, const ScalarField& f) { write_field_csv(path, {&f}); }
inline void write_field(const std::string& path, const VectorField& u) { write_field_csv(path, {&u.x, &u.y}); }

inline ScalarField read_scalar_csv(const std::string& path, std::size_t n) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read field file " + path, "path");
  ScalarField f(n);
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw ConfigError("field file " + path + ": too few rows", "path");
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::getline(ss, cell, ',')) throw ConfigError("field file " + path + ": too few columns", "path");
      f(i, j) = std::stod(cell);
    }
  }
  return f;
}

/// Reads the sidecar and returns the components (1 for scalar, 2 for vector).
inline std::vector<ScalarField> read_field(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw ConfigError("missing sidecar " + path + ".json", "path");
  const auto js = nlohmann::json::parse(side);
  const auto n = js.at("n").get<std::size_t>();
  const auto kind = js.at("kind").get<std::string>();
  detail::require_grid(n);
  if (kind == "scalar") return {read_scalar_csv(path, n)};
  if (kind == "vector") return {read_scalar_csv(path + ".0", n), read_scalar_csv(path + ".1", n)};
  throw ConfigError("unknown field kind '" + kind + "'", "kind");
}

} // namespace viscoflux::planar
