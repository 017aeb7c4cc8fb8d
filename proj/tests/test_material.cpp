#include <gtest/gtest.h>

#include <cmath>

#include "viscoflux/material.hpp"

using namespace viscoflux;

namespace {

MaterialLaw unit_law() {
  MaterialLaw law;
  law.A = 1.0;
  law.gamma = 2.0;
  law.c_lam = 1.0;
  law.beta = 2.0;
  law.mu = 1.0;
  law.rho_tilde = 1.0;
  law.rho_bar = 3.0;
  return law;
}

// Composite Gauss-Legendre with many panels; independent of the library's Simpson.
template <class Fn>
double reference_integral(Fn f, double a, double b, int panels = 4000) {
  static const double x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double m = a + (p + 0.5) * h;
    for (int q = 0; q < 3; ++q) s += w[q] * f(m + 0.5 * h * x[q]);
  }
  return 0.5 * h * s;
}

} // namespace

TEST(Pressure, Examples) {
  const auto law = unit_law();
  EXPECT_EQ(pressure(law, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(pressure(law, law.rho_tilde), law.rho_tilde * law.rho_tilde);
  EXPECT_DOUBLE_EQ(pressure(law, 2.0), 4.0);
  EXPECT_THROW(pressure(law, -0.1), DomainError);
}

TEST(Pressure, MonotoneOnAdmissibleRange) {
  for (double g : {1.0, 1.4, 2.0, 3.0}) {
    auto law = unit_law();
    law.gamma = g;
    double prev = -1.0;
    for (int i = 0; i <= 300; ++i) {
      const double p = pressure(law, 3.0 * i / 300.0);
      EXPECT_GE(p, prev);
      prev = p;
    }
  }
}

TEST(LambdaVisc, Examples) {
  auto law = unit_law();
  EXPECT_EQ(lambda_visc(law, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(lambda_visc(law, 2.0), 4.0);
  law.c_lam = 0.0;
  for (double r : {0.0, 0.5, 2.7}) EXPECT_EQ(lambda_visc(law, r), 0.0);
  EXPECT_THROW(lambda_visc(law, -1.0), DomainError);
}

TEST(BigLambda, Examples) {
  auto law = unit_law();
  EXPECT_EQ(big_lambda(law, law.rho_tilde), 0.0);
  EXPECT_NEAR(big_lambda(law, 2.0), 2.0 * std::log(2.0) + 1.5, 1e-14);
  EXPECT_NEAR(big_lambda(law, 2.0), 2.8863, 1e-4);
  law.c_lam = 0.0;
  EXPECT_NEAR(big_lambda(law, std::exp(1.0)), 2.0, 1e-14);
  EXPECT_THROW(big_lambda(law, 0.0), DomainError);
  EXPECT_THROW(big_lambda(law, -1.0), DomainError);
}

TEST(BigLambda, StrictlyIncreasing) {
  for (double beta : {0.0, 1.0, 2.0, 3.5}) {
    auto law = unit_law();
    law.beta = beta;
    double prev = -1e300;
    for (int i = 1; i <= 300; ++i) {
      const double v = big_lambda(law, 3.0 * i / 300.0);
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
}

TEST(PotentialG, Examples) {
  const auto law = unit_law();
  EXPECT_EQ(potential_G(law, law.rho_tilde), 0.0);
  EXPECT_NEAR(potential_G(law, 2.0), 1.0, 1e-14);
  EXPECT_NEAR(potential_G(law, 0.5), 0.25, 1e-14);
}

TEST(PotentialG, SquareLawExactForUnitLaw) {
  const auto law = unit_law();
  for (int i = 0; i <= 100; ++i) {
    const double r = 3.0 * i / 100.0;
    EXPECT_NEAR(potential_G(law, r), (r - 1.0) * (r - 1.0), 1e-12) << r;
  }
}

TEST(PotentialG, NonnegativeAndVanishesOnlyAtReference) {
  for (double g : {1.0, 1.5, 2.0, 3.0}) {
    auto law = unit_law();
    law.gamma = g;
    for (int i = 0; i <= 300; ++i) {
      const double r = 3.0 * i / 300.0;
      const double G = potential_G(law, r);
      if (std::fabs(r - law.rho_tilde) < 1e-12) {
        EXPECT_EQ(G, 0.0);
      } else {
        EXPECT_GT(G, 0.0) << "gamma=" << g << " rho=" << r;
      }
    }
  }
}

TEST(PotentialG, DominatesSquareDistance) {
  // g(rho) = (rho - rho_tilde)^2 <= C G(rho): the ratio stays bounded on [0, rho_bar].
  for (double g : {1.0, 1.5, 2.0, 3.0}) {
    auto law = unit_law();
    law.gamma = g;
    double worst = 0.0;
    for (int i = 0; i <= 3000; ++i) {
      const double r = 3.0 * i / 3000.0;
      if (std::fabs(r - 1.0) < 1e-9) continue;
      worst = std::max(worst, (r - 1.0) * (r - 1.0) / potential_G(law, r));
    }
    EXPECT_TRUE(std::isfinite(worst));
    EXPECT_LT(worst, 10.0) << "gamma=" << g;
  }
}

TEST(PotentialGbar, Examples) {
  auto law = unit_law();
  EXPECT_EQ(potential_Gbar(law, 0.0), 0.0);
  EXPECT_NEAR(potential_Gbar(law, 2.0), 4.0, 1e-14);
  law.gamma = 3.0;
  EXPECT_NEAR(potential_Gbar(law, 1.0), 0.5, 1e-14);
  law.gamma = 1.0;
  try {
    potential_Gbar(law, 1.0);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma > 1"), std::string::npos);
    EXPECT_EQ(e.key(), "law.gamma");
  }
}

TEST(EffectiveFluxScalar, Examples) {
  const auto law = unit_law();
  EXPECT_EQ(effective_flux_scalar(law, law.rho_tilde, 0.0), 0.0);
  EXPECT_NEAR(effective_flux_scalar(law, 2.0, 0.5), 0.0, 1e-15);
  const double d = 0.37;
  EXPECT_NEAR(effective_flux_scalar(law, 0.0, d), 2.0 * law.mu * d + pressure(law, law.rho_tilde), 1e-15);
}

TEST(NuAndP0, Examples) {
  auto law = unit_law();
  auto a = nu_and_P0(law, law.rho_tilde);
  EXPECT_DOUBLE_EQ(a.nu, 1.0 / (2.0 * law.mu + lambda_visc(law, law.rho_tilde)));
  EXPECT_EQ(a.p0, 0.0);
  auto b = nu_and_P0(law, 2.0);
  EXPECT_NEAR(b.nu, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(b.p0, 0.5, 1e-15);
  law.c_lam = 0.0;
  for (double r : {0.0, 0.3, 2.0}) EXPECT_DOUBLE_EQ(nu_and_P0(law, r).nu, 0.5);
}

TEST(NuAndP0, RangeAndSign) {
  const auto law = unit_law();
  for (int i = 0; i <= 100; ++i) {
    const double r = 3.0 * i / 100.0;
    const auto np = nu_and_P0(law, r);
    EXPECT_GT(np.nu, 0.0);
    EXPECT_LE(np.nu, 1.0 / (2.0 * law.mu));
    if (r > law.rho_tilde) EXPECT_GT(np.p0, 0.0);
    if (r < law.rho_tilde) EXPECT_LT(np.p0, 0.0);
  }
}

TEST(QuadratureConsistency, ClosedFormsMatchQuadrature) {
  for (double g : {1.0, 1.4, 2.0, 3.0}) {
    for (double beta : {0.0, 1.0, 2.0, 2.5}) {
      auto law = unit_law();
      law.gamma = g;
      law.beta = beta;
      law.mu = 0.3;
      law.c_lam = 0.7;
      for (int i = 1; i <= 100; ++i) {
        const double r = law.rho_bar * i / 100.0;
        const double L = big_lambda(law, r);
        EXPECT_NEAR(big_lambda_quadrature(law, r), L, 1e-9 * std::max(1.0, std::fabs(L)));
        const double G = potential_G(law, r);
        EXPECT_NEAR(potential_G_quadrature(law, r), G, 1e-9 * std::max(1.0, G));
        if (g > 1.0) {
          const double Gb = potential_Gbar(law, r);
          EXPECT_NEAR(potential_Gbar_quadrature(law, r), Gb, 1e-9 * std::max(1.0, Gb));
        }
      }
    }
  }
}

TEST(QuadratureConsistency, LibraryQuadratureMatchesIndependentRule) {
  auto law = unit_law();
  law.gamma = 1.4;
  law.beta = 2.5;
  for (double r : {0.1, 0.7, 1.9, 2.9}) {
    const double ref = reference_integral([&](double s) { return (2.0 * law.mu + law.c_lam * std::pow(s, law.beta)) / s; },
                                          law.rho_tilde, r);
    EXPECT_NEAR(big_lambda(law, r), ref, 1e-10);
    const double pt = std::pow(law.rho_tilde, law.gamma);
    const double refG = r * reference_integral([&](double s) { return (std::pow(s, law.gamma) - pt) / (s * s); },
                                               law.rho_tilde, r);
    EXPECT_NEAR(potential_G(law, r), refG, 1e-10);
  }
}

TEST(Validate, RejectsInadmissibleLaws) {
  auto law = unit_law();
  EXPECT_NO_THROW(validate(law));
  law.mu = 0.0;
  EXPECT_THROW(validate(law), ConfigError);
  law = unit_law();
  law.rho_bar = 0.5;
  EXPECT_THROW(validate(law), ConfigError);
  law = unit_law();
  law.rho_tilde = 0.0;
  EXPECT_THROW(validate(law), ConfigError);
  EXPECT_NO_THROW(validate(law, true));
  law = unit_law();
  law.q = 2.0;
  EXPECT_THROW(validate(law), ConfigError);
}

TEST(Normalization, ExactZeros) {
  for (double g : {1.0, 2.0, 2.7}) {
    auto law = unit_law();
    law.gamma = g;
    law.rho_tilde = 0.8;
    EXPECT_EQ(big_lambda(law, 0.8), 0.0);
    EXPECT_EQ(potential_G(law, 0.8), 0.0);
    EXPECT_EQ(effective_flux_scalar(law, 0.8, 0.0), 0.0);
  }
}
