#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "viscoflux/blowup.hpp"

using namespace viscoflux;

namespace {

constexpr double pi = std::numbers::pi;

MaterialLaw square_law() {
  MaterialLaw law;
  law.A = 1.0;
  law.gamma = 2.0;
  law.c_lam = 1.0;
  law.beta = 2.0;
  law.mu = 0.1;
  law.rho_tilde = 0.0;
  law.rho_bar = 3.0;
  return law;
}

// Unit density on the unit disk inside a wall at r = 2, vacuum outside.
RadialState sharp_disk(std::size_t n = 64) {
  RadialState st;
  st.grid = {2.0, n};
  st.rho.assign(n, 0.0);
  for (std::size_t i = 0; i < n / 2; ++i) st.rho[i] = 1.0;
  st.v.assign(n + 1, 0.0);
  return st;
}

Scenario compact_scenario(std::size_t n) {
  Scenario s;
  s.law = square_law();
  s.compact_support = true;
  s.grid = {3.0, n};
  s.rho0 = {{1.0}, {1.0, 0.0}};
  s.mollifier_width = 0.2;
  s.delta_floor = 1e-6;
  s.solver.quasi_static_density = 0.01;
  s.t_end = 0.1;
  s.snapshot_dt = 0.01 * 128.0 / static_cast<double>(n);
  return s;
}

} // namespace

TEST(Hypotheses, RejectByContent) {
  auto law = square_law();
  EXPECT_NO_THROW(require_blowup_hypotheses(law));
  law.gamma = 1.0;
  law.beta = 1.0;
  try {
    require_blowup_hypotheses(law);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma > 1"), std::string::npos);
    EXPECT_EQ(e.key(), "law.gamma");
  }
  law = square_law();
  law.beta = 2.5;
  EXPECT_THROW(require_blowup_hypotheses(law), ConfigError);
  law.beta = 1.0;
  EXPECT_THROW(require_blowup_hypotheses(law), ConfigError);
  law = square_law();
  law.c_lam = 0.0;
  try {
    require_blowup_hypotheses(law);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "law.c_lam");
  }
}

TEST(HFunctional, SharpUnitDisk) {
  // int r^2 dx = pi/2 on the unit disk, 2A/(gamma-1) int rho^2 dx = 2 pi.
  const auto law = square_law();
  EXPECT_NEAR(H_functional(sharp_disk(), law, 0.0), 2.5 * pi, 1e-12);
  // At t = 1 the potential part gains (1+t)^2.
  EXPECT_NEAR(H_functional(sharp_disk(), law, 1.0), 0.5 * pi + 8.0 * pi, 1e-12);
}

TEST(HFunctional, RigidExpansionScalesKineticPart) {
  const auto law = square_law();
  auto st = sharp_disk();
  const double k = 0.3, t = 0.5;
  for (std::size_t f = 0; f < st.v.size(); ++f) st.v[f] = k * st.grid.face(f);
  const double c = 1.0 - (1.0 + t) * k;
  EXPECT_NEAR(H_functional(st, law, t), 0.5 * pi * c * c + 2.0 * (1.0 + t) * (1.0 + t) * pi, 1e-12);
  auto bad = law;
  bad.gamma = 1.0;
  EXPECT_THROW(H_functional(st, bad, 0.0), ConfigError);
}

TEST(HDerivative, WallTermVanishesWhenVelocityIsZeroOutside) {
  const auto law = square_law();
  auto st = sharp_disk();
  for (std::size_t f = 0; f <= 32; ++f) st.v[f] = 0.2 * std::sin(pi * st.grid.face(f));
  const auto b = blowup_integrals(st, law);
  EXPECT_EQ(b.wall_traction, 0.0);
  EXPECT_EQ(H_wall_term(b, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(b.wall_radius, 2.0);
}

TEST(HDerivative, FormulaHandValueForRigidExpansion) {
  // Unit disk, v = k r: div u = 2k, lambda = 1, int rho^2 = pi, wall traction zero beyond r = 1.
  const auto law = square_law();
  auto st = sharp_disk(128);
  const double k = 0.25;
  for (std::size_t f = 0; f <= 64; ++f) st.v[f] = k * st.grid.face(f);
  for (std::size_t f = 65; f <= 128; ++f) st.v[f] = k * st.grid.face(64);
  // The constant tail has nonzero divergence in vacuum; the oracle below sums it too.
  const auto b = blowup_integrals(st, law);
  double lam_div = 0.0, stress = 0.0;
  for (std::size_t i = 0; i < 128; ++i) {
    const double rc = st.grid.center(i), dr = st.grid.dr();
    const double d = (st.grid.face(i + 1) * st.v[i + 1] - st.grid.face(i) * st.v[i]) / (rc * dr);
    const double lam = st.rho[i] * st.rho[i];
    lam_div += lam * d * 2.0 * pi * rc * dr;
    stress += (lam + 0.2) * d * d * 2.0 * pi * rc * dr;
  }
  EXPECT_NEAR(b.lambda_div, lam_div, 1e-12);
  EXPECT_NEAR(b.lambda_div, pi * 2.0 * k, 1e-12);
  EXPECT_NEAR(b.stress_div2, stress, 1e-12);
  const double t = 0.2, s = 1.2;
  const double expect = 0.0 + 4.0 * s * lam_div - 2.0 * s * s * stress + H_wall_term(b, t);
  EXPECT_NEAR(H_derivative_formula(b, law, t), expect, 1e-12);
}

TEST(RhsBound, HandValueAndPointwiseDomination) {
  auto law = square_law();
  law.gamma = 3.0;
  law.beta = 2.0;
  law.c_lam = 0.5;
  // 4(2-3)(1+t)/2 * 1 * I + 2*0.5*2/3 I + 2*0.5*1/3 area.
  const double I = 1.7, area = 2.3, t = 0.4;
  EXPECT_NEAR(rhs_bound(law, I, area, t), -2.0 * 1.4 * I + (2.0 / 3.0) * I + area / 3.0, 1e-14);

  // Young's inequality: the formula without the wall term never exceeds the bound evaluated
  // with the current positive-density area.
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    RadialState st;
    st.grid = {2.0, 40};
    st.rho.resize(40);
    st.v.resize(41);
    for (auto& r : st.rho) r = U(gen) < 0.2 ? 0.0 : 3.0 * U(gen);
    st.v[0] = 0.0;
    for (std::size_t f = 1; f <= 40; ++f) st.v[f] = 2.0 * U(gen) - 1.0;
    double area = 0.0;
    for (std::size_t i = 0; i < 40; ++i) area += st.rho[i] > 0.0 ? st.grid.cell_area(i) : 0.0;
    const auto b = blowup_integrals(st, law);
    for (double tt : {0.0, 0.5, 3.0}) {
      const double lhs = H_derivative_formula(b, law, tt) - H_wall_term(b, tt);
      EXPECT_LE(lhs, rhs_bound(law, b.rho_gamma, area, tt) + 1e-12);
    }
  }
}

TEST(DecayBound, AuxFunction) {
  EXPECT_NEAR(aux_F(2.0, 0.7), 0.7, 1e-14);
  EXPECT_EQ(aux_F(2.5, 0.0), 0.0);
  for (double t : {0.1, 1.0, 10.0}) {
    EXPECT_NEAR(aux_F(1.5 + 1e-7, t), aux_F(1.5, t), 1e-5 * std::max(1.0, aux_F(1.5, t)));
    EXPECT_NEAR(aux_F(1.5 - 1e-7, t), aux_F(1.5, t), 1e-5 * std::max(1.0, aux_F(1.5, t)));
  }
}

TEST(DecayBound, EqualExponentsReduceToHFactor) {
  const auto law = square_law();
  for (double t : {0.0, 0.3, 2.0}) {
    EXPECT_NEAR(G_bound(law, 5.0, 1.0, t), 2.5 / ((1.0 + t) * (1.0 + t)), 1e-14);
  }
}

TEST(ContradictionTime, ClosedFormSharpDisk) {
  // gamma = beta = 2: admissible mass = pi sqrt(5) / (2 (1+t)) falls below pi at (1+t) = sqrt(5)/2.
  const auto law = square_law();
  const double H0 = H_functional(sharp_disk(), law, 0.0);
  const auto ct = contradiction_time(H0, law, pi, pi);
  ASSERT_TRUE(ct.reachable);
  EXPECT_NEAR(ct.T_star, std::sqrt(5.0) / 2.0 - 1.0, 1e-10);
  for (std::size_t k = 1; k < ct.G.size(); ++k) EXPECT_LE(ct.G[k], ct.G[k - 1] * (1.0 + 1e-14));
}

TEST(ContradictionTime, UnreachableWithinHorizonAndInvalidInput) {
  const auto law = square_law();
  const auto ct = contradiction_time(2.5 * pi, law, pi, pi, 0.1);
  EXPECT_FALSE(ct.reachable);
  EXPECT_TRUE(std::isinf(ct.T_star));
  EXPECT_THROW(contradiction_time(0.0, law, pi, pi), ConfigError);
  // Mass already beyond the bound at t = 0.
  const auto now = contradiction_time(2.5 * pi, law, 10.0, pi);
  EXPECT_TRUE(now.reachable);
  EXPECT_EQ(now.T_star, 0.0);
}

TEST(BlowupReport, CompactSupportRunRespectsBound) {
  auto tol = [](std::size_t n) {
    const Scenario s = compact_scenario(n);
    const auto out = run(s);
    const auto rep = blowup_report(out.snapshots, s.law, 1e-4, 0.02);
    EXPECT_TRUE(rep.margin_ok) << rep.min_margin << " " << rep.tol_discrete;
    EXPECT_GT(rep.min_margin, 0.0);
    EXPECT_TRUE(rep.contradiction.reachable);
    EXPECT_NEAR(rep.M0, total_mass(out.snapshots.front()), 1e-14);
    EXPECT_GE(rep.support_radius.back(), rep.support_radius.front());
    return rep.tol_discrete;
  };
  const double t1 = tol(128), t2 = tol(256);
  EXPECT_LT(t2, t1);
}

TEST(BlowupReport, InputErrors) {
  const Scenario s = compact_scenario(64);
  const auto out = run(s);
  std::vector<RadialState> two(out.snapshots.begin(), out.snapshots.begin() + 2);
  EXPECT_THROW(blowup_report(two, s.law, 1e-4), ConfigError);
  try {
    blowup_report(out.snapshots, s.law, 1e-4, 10.0);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "blowup.window_start");
  }
  auto bad = s.law;
  bad.gamma = 1.0;
  EXPECT_THROW(blowup_report(out.snapshots, bad, 1e-4), ConfigError);
}
