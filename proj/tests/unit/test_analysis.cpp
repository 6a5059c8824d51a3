#include <gtest/gtest.h>

#include "sdrift/analysis.hpp"

using namespace sdrift;

namespace {

const GridAndMask& fine_box() {
  static const auto gm = build_grid(Box{}, 0.02);
  return gm;
}

}  // namespace

TEST(Oscillation, ConstantHasNoOscillation) {
  const auto& gm = fine_box();
  const auto p = oscillation_profile(gm.mask, ScalarField(gm.grid, 2.0), {0.05, 0.1, 0.0}, 1.28, 2);
  for (const auto& s : p.scales) EXPECT_EQ(s.omega, 0.0);
  const auto fit = fit_holder(p);
  EXPECT_TRUE(fit.constant);
  for (double r : p.decay_ratios()) EXPECT_EQ(r, 0.0);
}

TEST(Oscillation, LinearFieldIsLipschitz) {
  const auto& gm = fine_box();
  const auto u = sample(gm.grid, Expression("x"));
  const auto p = oscillation_profile(gm.mask, u, {0.05, 0.1, 0.0}, 1.28, 2);
  EXPECT_EQ(p.cls, CenterClass::interior_off_axis);
  ASSERT_EQ(p.scales.size(), 3u);
  const double h = gm.grid.h();
  for (std::size_t j = 1; j < p.scales.size(); ++j) {
    EXPECT_LE(p.scales[j].omega, 2 * p.scales[j].rho);
    EXPECT_GE(p.scales[j].omega, 2 * p.scales[j].rho - 2 * h);
  }
  EXPECT_NEAR(fit_holder({p.scales[1].rho, p.scales[2].rho, p.scales[2].rho / 2},
                         {p.scales[1].omega, p.scales[2].omega, p.scales[2].omega / 2})
                  .mu,
              1.0, 0.05);
}

TEST(Oscillation, ExtremaAreNested) {
  const auto& gm = fine_box();
  const auto u = sample(gm.grid, Expression("sin(5*x)*cos(3*y)+z^2"));
  const auto p = oscillation_profile(gm.mask, u, {0.0, 0.0, 0.0}, 1.28, 2);
  for (std::size_t j = 1; j < p.scales.size(); ++j) {
    EXPECT_GE(p.scales[j].m, p.scales[j - 1].m);
    EXPECT_LE(p.scales[j].M, p.scales[j - 1].M);
    EXPECT_LT(p.scales[j].nodes, p.scales[j - 1].nodes);
  }
}

TEST(Oscillation, AffineInvariance) {
  const auto& gm = fine_box();
  const auto u = sample(gm.grid, Expression("sqrt(rho)"));
  ScalarField v = u;
  for (auto& x : v.v) x = -3.0 * x + 7.0;
  const auto a = oscillation_profile(gm.mask, u, {0.0, 0.0, 0.0}, 1.28, 2);
  const auto b = oscillation_profile(gm.mask, v, {0.0, 0.0, 0.0}, 1.28, 2);
  for (std::size_t j = 0; j < a.scales.size(); ++j) EXPECT_NEAR(b.scales[j].omega, 3.0 * a.scales[j].omega, 1e-12);
  const auto ra = a.decay_ratios(), rb = b.decay_ratios();
  for (std::size_t j = 0; j < ra.size(); ++j) EXPECT_NEAR(ra[j], rb[j], 1e-12);
  EXPECT_NEAR(fit_holder(a).mu, fit_holder(b).mu, 1e-12);
}

TEST(Oscillation, ResolutionFloor) {
  const auto gm = build_grid(Ball{}, 0.05);
  const auto u = ScalarField(gm.grid, 1.0);
  try {
    oscillation_profile(gm.mask, u, {0, 0, 0}, 0.5, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::resolution);
  }
  EXPECT_THROW(oscillation_profile(gm.mask, u, {0, 0, 0}, 0.5, 1), Error);
  EXPECT_THROW(oscillation_profile(gm.mask, u, {0, 0, 0}, -1.0, 2), Error);
}

TEST(Oscillation, TraceSamplesEnterExtrema) {
  const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, 0.025);
  const auto u = restrict_to(gm.mask, sample(gm.grid, Expression("1+r")));
  const auto axis = axis_samples(gm.mask);
  const auto tr = darboux_trace(axis, -1.0, u);
  for (double v : tr.values) EXPECT_EQ(v, 0.0);
  const auto with = oscillation_profile(gm.mask, u, {0, 0, 0}, 1.6, 2, &tr);
  const auto without = oscillation_profile(gm.mask, u, {0, 0, 0}, 1.6, 2);
  for (const auto& s : with.scales) EXPECT_EQ(s.m, 0.0);
  for (std::size_t j = 0; j < with.scales.size(); ++j) EXPECT_GE(with.scales[j].omega, without.scales[j].omega);
}

TEST(HolderFit, SyntheticPowers) {
  const std::vector<double> rho{1.0, 0.25, 0.0625, 0.015625};
  std::vector<double> lin, half, steep;
  for (double r : rho) {
    lin.push_back(3 * r);
    half.push_back(std::sqrt(r));
    steep.push_back(r * r);
  }
  EXPECT_NEAR(fit_holder(rho, lin).mu, 1.0, 1e-12);
  EXPECT_NEAR(fit_holder(rho, half).mu, 0.5, 1e-12);
  EXPECT_LE(fit_holder(rho, half).residual, 1e-12);
  EXPECT_EQ(fit_holder(rho, steep).mu, 1.0);
  EXPECT_NEAR(loglog_slope(rho, steep), 2.0, 1e-12);
  EXPECT_THROW(fit_holder({1.0, 0.5}, {1.0, 0.5}), Error);
  EXPECT_THROW(loglog_slope({1.0, 0.5}, {1.0, 0.0}), Error);
}

TEST(CenterClass, Classification) {
  const auto gm = build_grid(Ball{}, 0.05);
  EXPECT_EQ(classify_center(gm.mask, {0, 0, 0}), CenterClass::on_axis);
  EXPECT_EQ(classify_center(gm.mask, {0.5, 0, 0}), CenterClass::interior_off_axis);
  EXPECT_EQ(classify_center(gm.mask, {1.0, 0, 0}), CenterClass::boundary);
  EXPECT_EQ(classify_center(gm.mask, {0, 0, 0.99}), CenterClass::boundary);
  EXPECT_EQ(classify_center(gm.mask, {5, 5, 5}), CenterClass::boundary);
}

TEST(Linf, RatioProperties) {
  const auto gm = build_grid(Ball{}, 0.1);
  const VectorField zero(gm.grid);
  EXPECT_EQ(linf_ratio(gm.mask, ScalarField(gm.grid), zero, 4.0), 0.0);
  EXPECT_THROW(linf_ratio(gm.mask, ScalarField(gm.grid, 1.0), zero, 4.0), Error);
  const auto f = sample(gm.grid, VectorExpression("x,0,z"));
  const auto u = sample(gm.grid, Expression("1-rho^2"));
  ScalarField u10 = u;
  VectorField f10 = f;
  for (auto& x : u10.v) x *= 10.0;
  for (auto& x : f10.v) x = 10.0 * x;
  EXPECT_NEAR(linf_ratio(gm.mask, u10, f10, 4.0), linf_ratio(gm.mask, u, f, 4.0), 1e-12);
  EXPECT_THROW(linf_ratio(gm.mask, u, f, 3.0), Error);
}

TEST(Linf, CheckSpread) {
  const auto c = linf_check({1.0, 1.2, 0.9});
  EXPECT_NEAR(c.spread, 0.2, 1e-12);
  EXPECT_TRUE(c.pass);
  EXPECT_FALSE(linf_check({1.0, 1.3}).pass);
  EXPECT_TRUE(linf_check({0.0, 0.0}).pass);
  EXPECT_FALSE(linf_check({0.0, 1.0}).pass);
  EXPECT_THROW(linf_check({1.0}), Error);
}

TEST(Trace, InterpolationOnAxis) {
  const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, 0.1);
  const auto axis = axis_samples(gm.mask);
  const auto one = trace_on_gamma(gm.mask, ScalarField(gm.grid, 1.0), axis);
  EXPECT_EQ(one.max_abs, 1.0);
  EXPECT_EQ(one.values.size(), axis.size());
  const auto odd = trace_on_gamma(gm.mask, sample(gm.grid, Expression("x*z+y^3")), axis);
  EXPECT_NEAR(odd.max_abs, 0.0, 1e-15);
}

TEST(Density, Extremes) {
  const auto gm = build_grid(Ball{}, 0.05);
  EXPECT_EQ(density_condition(gm.mask, ScalarField(gm.grid, 0.5), {0, 0, 0}, 0.2, 0.5), 1.0);
  EXPECT_EQ(density_condition(gm.mask, ScalarField(gm.grid, 2.0), {0, 0, 0}, 0.2, 0.5), 0.0);
  const double half = density_condition(gm.mask, sample(gm.grid, Expression("x")), {0, 0, 0}, 0.2, 0.0);
  EXPECT_NEAR(half, 0.5, 0.1);
}

TEST(Manufactured, SourceMatchesFiniteDifferences) {
  const Manufactured ms{-1.5, Expression("pos(1-rho^2)^3*(1+z)")};
  const Vec3 x{0.3, -0.2, 0.1};
  const double d = 1e-3;
  double lap = 0.0;
  Vec3 grad{};
  for (std::size_t a = 0; a < 3; ++a) {
    Vec3 lo = x, hi = x;
    lo[a] -= d;
    hi[a] += d;
    lap += (ms.exact(hi) - 2 * ms.exact(x) + ms.exact(lo)) / (d * d);
    grad[a] = (ms.exact(hi) - ms.exact(lo)) / (2 * d);
  }
  const double r2 = x[0] * x[0] + x[1] * x[1];
  const double expect = -lap + 1.5 * (x[0] * grad[0] + x[1] * grad[1]) / r2;
  EXPECT_NEAR(ms.source(x), expect, 1e-4 * std::abs(expect));
}

TEST(Manufactured, ZeroProfileGivesZeroError) {
  KrylovConfig cg;
  KrylovConfig bi;
  bi.method = Method::bicgstab;
  const auto t = manufactured_study(Cylinder{1.0, -1.0, 1.0}, -1.0, Expression("0"), {0.2, 0.1}, cg, bi);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.weighted_max, 0.0);
    EXPECT_EQ(r.direct_max, 0.0);
    EXPECT_EQ(r.cross_l2, 0.0);
  }
  EXPECT_EQ(t.cross_rate, 0.0);
}

TEST(Manufactured, WeightedConverges) {
  KrylovConfig cg;
  cg.rtol = 1e-12;
  const auto t = manufactured_study(Cylinder{1.0, -1.0, 1.0}, -1.0, Expression("pos(1-rho^2)^3"), {0.1, 0.05}, cg,
                                    cg, false);
  EXPECT_GT(t.weighted_l2_rate, 1.5);
  EXPECT_LT(t.rows[1].weighted_max, t.rows[0].weighted_max);
}

TEST(Sobolev, NormOfLinearField) {
  const auto gm = build_grid(Ball{}, 0.05);
  const auto u = sample(gm.grid, Expression("2*x"));
  double s = 0.0;
  for (auto n : gm.mask.active_nodes()) s += std::pow(std::abs(u[n]), 3.0) + 8.0;
  EXPECT_NEAR(w1p_norm(gm.mask, u, 3.0), std::cbrt(s * gm.grid.cell_volume()), 1e-12);
  EXPECT_EQ(w1p_norm(gm.mask, ScalarField(gm.grid), 2.0), 0.0);
  EXPECT_THROW(w1p_norm(gm.mask, u, 0.5), Error);
}

TEST(Sobolev, SolutionNormsBoundedUnderRefinement) {
  KrylovConfig cg;
  cg.rtol = 1e-12;
  std::vector<std::vector<double>> norms;
  for (double h : {0.1, 0.05}) {
    const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, h);
    const auto u = solve_darboux(gm.mask, -1.0, sample(gm.grid, VectorExpression("x,0,z")), cg).solution;
    norms.push_back({w1p_norm(gm.mask, u, 2.0), w1p_norm(gm.mask, u, 3.0), w1p_norm(gm.mask, u, 4.0)});
  }
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(norms[1][k] / norms[0][k], 1.0, 0.25) << k;
}
