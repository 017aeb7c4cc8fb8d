#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <thread>

#include "viscoflux/planar_fields.hpp"

using namespace viscoflux;
using namespace viscoflux::planar;

namespace {

MaterialLaw unit_law() {
  MaterialLaw law;
  law.A = 1.0;
  law.gamma = 2.0;
  law.c_lam = 1.0;
  law.beta = 2.0;
  law.mu = 1.0;
  law.rho_tilde = 1.0;
  return law;
}

double max_abs_diff(const ScalarField& f, double (*fn)(double, double)) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    for (std::size_t j = 0; j < f.n; ++j) m = std::max(m, std::fabs(f(i, j) - fn(f.coord(i), f.coord(j))));
  }
  return m;
}

double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::fabs(x));
  return m;
}

} // namespace

TEST(Spectral, DerivativeOfConstantIsZero) {
  const ScalarField c(32, 3.7);
  EXPECT_LT(max_abs(derivative(c, 0)), 1e-13);
  EXPECT_LT(max_abs(derivative(c, 1)), 1e-13);
  EXPECT_LT(max_abs(laplacian(c)), 1e-13);
}

TEST(Spectral, BandLimitedModesAreExact) {
  const std::size_t n = 32;
  for (int kx = 0; kx < 16; kx += 3) {
    for (int ky = 1; ky < 16; ky += 4) {
      auto f = ScalarField::sample(n, [&](double x, double y) { return std::sin(kx * x + ky * y); });
      auto dx = derivative(f, 0);
      auto dy = derivative(f, 1);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double c = std::cos(kx * f.coord(i) + ky * f.coord(j));
          EXPECT_NEAR(dx(i, j), kx * c, 1e-12);
          EXPECT_NEAR(dy(i, j), ky * c, 1e-12);
        }
      }
    }
  }
}

TEST(Spectral, PoissonInverseOfLaplacian) {
  const std::size_t n = 64;
  auto f = ScalarField::sample(n, [](double x, double y) { return std::sin(2 * x) * std::cos(3 * y) + 0.3 * std::cos(x - y); });
  auto back = solve_poisson(laplacian(f));
  double mean = 0.0;
  for (double x : f.v) mean += x;
  mean /= static_cast<double>(f.v.size());
  double err = 0.0;
  for (std::size_t p = 0; p < f.v.size(); ++p) err = std::max(err, std::fabs(back.v[p] - (f.v[p] - mean)));
  EXPECT_LT(err, 1e-12);
}

TEST(Spectral, DivergenceOfPerpGradientVanishes) {
  auto psi = ScalarField::sample(64, [](double x, double y) { return std::exp(std::sin(x)) * std::cos(2 * y); });
  EXPECT_LT(max_abs(divergence(perp_gradient(psi))), 1e-12);
}

TEST(Spectral, RejectsNonPowerOfTwo) {
  const ScalarField f(24, 1.0);
  EXPECT_THROW(derivative(f, 0), ConfigError);
}

TEST(Vorticity, GradientFieldIsCurlFree) {
  auto phi = ScalarField::sample(32, [](double x, double y) { return std::sin(x) * std::sin(y); });
  const auto w = vorticity(gradient(phi));
  EXPECT_LT(max_abs(w.w12), 1e-13);
}

TEST(Vorticity, RotationExample) {
  const std::size_t n = 32;
  auto u = VectorField::sample(n, [](double x, double y) { return std::array<double, 2>{-std::sin(y), std::sin(x)}; });
  const auto w = vorticity(u);
  EXPECT_LT(max_abs_diff(w.w12, [](double x, double y) { return -std::cos(y) - std::cos(x); }), 1e-13);
  EXPECT_NEAR(w(0, 1, 0, 0), -2.0, 1e-13);
}

TEST(Vorticity, ConstantFieldAndAntisymmetry) {
  VectorField u(16);
  for (auto& x : u.x.v) x = 2.0;
  for (auto& y : u.y.v) y = -1.0;
  EXPECT_LT(max_abs(vorticity(u).w12), 1e-13);
  auto v = VectorField::sample(16, [](double x, double y) { return std::array<double, 2>{std::cos(x + y), std::sin(2 * x)}; });
  const auto w = vorticity(v);
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t l = 0; l < 16; ++l) {
      EXPECT_EQ(w(0, 1, i, l), -w(1, 0, i, l));
      EXPECT_EQ(w(0, 0, i, l), 0.0);
      EXPECT_EQ(w(1, 1, i, l), 0.0);
    }
  }
}

TEST(EffectiveFluxField, Examples) {
  const auto law = unit_law();
  const std::size_t n = 32;
  const ScalarField rt(n, law.rho_tilde);
  auto div_free = perp_gradient(ScalarField::sample(n, [](double x, double y) { return std::sin(x) * std::cos(2 * y); }));
  EXPECT_LT(max_abs(effective_flux_field(law, rt, div_free)), 1e-12);

  auto u = VectorField::sample(n, [](double x, double) { return std::array<double, 2>{std::sin(x), 0.0}; });
  const auto F = effective_flux_field(law, rt, u);
  const double c = lambda_visc(law, law.rho_tilde) + 2.0 * law.mu;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(F(i, j), c * std::cos(F.coord(i)), 1e-12);
  }

  const ScalarField r2(n, 2.0 * law.rho_tilde);
  const auto F2 = effective_flux_field(law, r2, VectorField(n));
  const double expect = std::pow(law.rho_tilde, 2) - std::pow(2.0 * law.rho_tilde, 2);
  for (double x : F2.v) EXPECT_NEAR(x, expect, 1e-14);
}

TEST(MaterialAcceleration, Examples) {
  const std::size_t n = 32;
  VectorField c(n);
  for (auto& x : c.x.v) x = 1.5;
  const auto a = material_acceleration(c, VectorField(n));
  EXPECT_LT(max_abs(a.x), 1e-13);
  EXPECT_LT(max_abs(a.y), 1e-13);

  auto u = VectorField::sample(n, [](double x, double) { return std::array<double, 2>{std::sin(x), 0.0}; });
  const auto b = material_acceleration(u, VectorField(n));
  EXPECT_LT(max_abs_diff(b.x, [](double x, double) { return std::sin(x) * std::cos(x); }), 1e-13);
  EXPECT_LT(max_abs(b.y), 1e-13);

  auto g = VectorField::sample(n, [](double x, double y) { return std::array<double, 2>{std::cos(y), x * 0.0 + 0.7}; });
  const auto d = material_acceleration(VectorField(n), g);
  for (std::size_t p = 0; p < g.x.v.size(); ++p) {
    EXPECT_EQ(d.x.v[p], g.x.v[p]);
    EXPECT_EQ(d.y.v[p], g.y.v[p]);
  }
}

TEST(Decomposition, ManufacturedRotationField) {
  const auto law = unit_law();
  const std::size_t n = 64;
  const ScalarField rho(n, 1.0);
  auto u = VectorField::sample(n, [](double x, double y) { return std::array<double, 2>{-std::sin(y), std::sin(x)}; });
  const VectorField ut(n);
  const auto f = manufactured_forcing(law, rho, u, ut);
  const auto rep = verify_decomposition(law, rho, u, ut, f);
  EXPECT_LT(rep.residual_momentum, 1e-10);
  EXPECT_LT(rep.residual_poisson, 1e-8);
  EXPECT_LT(rep.residual_elliptic_u, 1e-10);
  EXPECT_GE(rep.residual_momentum, 0.0);
}

TEST(Decomposition, ManufacturedVariableDensity) {
  auto law = unit_law();
  law.mu = 0.3;
  law.gamma = 1.4;
  const std::size_t n = 64;
  auto rho = ScalarField::sample(n, [](double x, double y) { return 1.0 + 0.3 * std::sin(x) * std::cos(y); });
  auto u = VectorField::sample(n, [](double x, double y) {
    return std::array<double, 2>{0.5 * std::sin(x + 2 * y), 0.2 * std::cos(x) - 0.4 * std::sin(y)};
  });
  auto ut = VectorField::sample(n, [](double x, double y) { return std::array<double, 2>{std::cos(y), std::sin(x - y)}; });
  const auto f = manufactured_forcing(law, rho, u, ut);
  const auto rep = verify_decomposition(law, rho, u, ut, f);
  EXPECT_LT(rep.residual_momentum, 1e-10);
  EXPECT_LT(rep.residual_poisson, 1e-8);
  EXPECT_LT(rep.residual_elliptic_u, 1e-10);
}

TEST(Decomposition, WrongForcingIsDetected) {
  const auto law = unit_law();
  const std::size_t n = 32;
  const ScalarField rho(n, 1.0);
  auto u = VectorField::sample(n, [](double x, double y) { return std::array<double, 2>{-std::sin(y), std::sin(x)}; });
  auto f = manufactured_forcing(law, rho, u, VectorField(n));
  f.x.v[5] += 0.1;
  EXPECT_GT(verify_decomposition(law, rho, u, VectorField(n), f).residual_momentum, 1e-3);
}

TEST(Decomposition, EllipticIdentityForGradientField) {
  auto law = unit_law();
  law.beta = 0.0; // constant lambda
  const std::size_t n = 64;
  const ScalarField rho(n, law.rho_tilde);
  auto u = gradient(ScalarField::sample(n, [](double x, double y) { return std::sin(x) * std::cos(2 * y); }));
  const auto rep = verify_decomposition(law, rho, u, VectorField(n), VectorField(n));
  EXPECT_LT(rep.residual_elliptic_u, 1e-10);
}

TEST(Decomposition, VanishingDensityIsUnsupportedForManufacturedForcing) {
  const auto law = unit_law();
  auto rho = ScalarField::sample(16, [](double x, double) { return 1.0 + std::cos(x); });
  EXPECT_THROW(manufactured_forcing(law, rho, VectorField(16), VectorField(16)), DomainError);
}

TEST(DataFunctionals, Examples) {
  const auto law = unit_law();
  const std::size_t n = 32;
  PlanarFrame rest{0.0, ScalarField(n, law.rho_tilde), VectorField(n), VectorField(n)};
  const auto a = data_functionals(law, {rest});
  EXPECT_EQ(a.C0, 0.0);
  EXPECT_EQ(a.A1, 0.0);
  EXPECT_EQ(a.A2, 0.0);

  PlanarFrame shear = rest;
  shear.u = VectorField::sample(n, [](double x, double) { return std::array<double, 2>{std::sin(x), 0.0}; });
  const auto b = data_functionals(law, {shear});
  EXPECT_NEAR(b.C0, 0.5 * law.rho_tilde * 2.0 * std::numbers::pi * std::numbers::pi, 1e-12);
}

TEST(DataFunctionals, SigmaWeightsAndTrapezoidSums) {
  const auto law = unit_law();
  const std::size_t n = 16;
  std::vector<PlanarFrame> h;
  for (double t : {0.0, 0.5, 1.0, 2.0}) {
    PlanarFrame fr{t, ScalarField(n, 1.0), VectorField(n), VectorField(n)};
    fr.u = VectorField::sample(n, [](double x, double) { return std::array<double, 2>{std::sin(x), 0.0}; });
    h.push_back(fr);
  }
  const auto d = data_functionals(law, h);
  // int |grad u|^2 = int cos^2 x = 2 pi^2, scaled by sigma = min(1, t).
  const double g = 2.0 * std::numbers::pi * std::numbers::pi;
  EXPECT_NEAR(d.sigma_grad_u[1], 0.5 * g, 1e-11);
  EXPECT_NEAR(d.sigma_grad_u[3], g, 1e-11);
  // |u_dot|^2 = sin^2 cos^2, integral 2 pi * pi / 4.
  const double r = std::numbers::pi * std::numbers::pi / 2.0;
  const double sum = 0.5 * 0.5 * (0.0 + 0.5 * r) + 0.5 * 0.5 * (0.5 * r + r) + 1.0 * r;
  EXPECT_NEAR(d.A1, g + sum, 1e-10);
}

TEST(PlanCache, ConcurrentUseIsConsistent) {
  auto f = ScalarField::sample(64, [](double x, double y) { return std::sin(3 * x) * std::cos(y); });
  const auto ref = derivative(f, 0);
  std::vector<std::thread> pool;
  std::vector<double> err(4, 0.0);
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t] {
      for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = rep % 2 ? 64 : 32;
        auto g = ScalarField::sample(n, [](double x, double y) { return std::sin(3 * x) * std::cos(y); });
        auto d = derivative(g, 0);
        if (n == 64) {
          for (std::size_t p = 0; p < d.v.size(); ++p) err[t] = std::max(err[t], std::fabs(d.v[p] - ref.v[p]));
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (double e : err) EXPECT_EQ(e, 0.0);
}

TEST(FieldIO, RoundTripWithSidecar) {
  const auto dir = std::filesystem::temp_directory_path() / "viscoflux_field_io";
  std::filesystem::create_directories(dir);
  auto s = ScalarField::sample(8, [](double x, double y) { return std::sin(x) + 0.1 * y; });
  auto u = VectorField::sample(8, [](double x, double y) { return std::array<double, 2>{x, std::cos(y)}; });
  write_field((dir / "rho.csv").string(), s);
  write_field((dir / "u.csv").string(), u);
  const auto rs = read_field((dir / "rho.csv").string());
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0].v, s.v);
  const auto ru = read_field((dir / "u.csv").string());
  ASSERT_EQ(ru.size(), 2u);
  EXPECT_EQ(ru[0].v, u.x.v);
  EXPECT_EQ(ru[1].v, u.y.v);
  std::filesystem::remove_all(dir);
}
