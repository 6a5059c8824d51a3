#include <gtest/gtest.h>

#include <sstream>

#include "sdrift/fields.hpp"

using namespace sdrift;

// ---------------------------------------------------------------------------
// Expressions

TEST(Expression, ArithmeticAndPrecedence) {
  const Vec3 x{1.5, -2.0, 0.5};
  EXPECT_DOUBLE_EQ(Expression("1+2*3")(x), 7.0);
  EXPECT_DOUBLE_EQ(Expression("2^3^2")(x), 512.0);
  EXPECT_DOUBLE_EQ(Expression("-2^2")(x), -4.0);
  EXPECT_DOUBLE_EQ(Expression("(x+y)*z")(x), -0.25);
  EXPECT_DOUBLE_EQ(Expression("r")(x), std::sqrt(1.5 * 1.5 + 4.0));
  EXPECT_DOUBLE_EQ(Expression("rho^2")(x), 1.5 * 1.5 + 4.0 + 0.25);
  EXPECT_DOUBLE_EQ(Expression("pos(-x)+pos(x)")(x), 1.5);
  EXPECT_DOUBLE_EQ(Expression("min(x,y)+max(x,z)")(x), -0.5);
  EXPECT_DOUBLE_EQ(Expression("pow(2,10)")(x), 1024.0);
  EXPECT_NEAR(Expression("cos(pi)+log(e)")(x), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(Expression("smoothstep(-1)+smoothstep(2)")(x), 1.0);
  EXPECT_DOUBLE_EQ(Expression("smoothstep(0.5)")(x), 0.5);
  EXPECT_TRUE(Expression("0").is_zero());
  EXPECT_FALSE(Expression("x").is_zero());
}

TEST(Expression, ParseErrors) {
  for (const char* bad : {"", "1+", "(x", "x)", "foo(x)", "q", "1 2", "sin()"}) {
    try {
      Expression e(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::parse) << bad;
    }
  }
  EXPECT_THROW(VectorExpression("x,y"), Error);
}

TEST(Expression, JetMatchesFiniteDifferences) {
  const Expression e("sin(x*y)*exp(z)+r^3*pos(1-rho^2)^3+atan(z/(1+x^2))");
  const Vec3 p{0.3, -0.4, 0.2};
  const Jet j = e.jet(p);
  EXPECT_NEAR(j.v, e(p), 1e-15);
  const double d = 1e-4;
  for (int a = 0; a < 3; ++a) {
    Vec3 lo = p, hi = p;
    lo[static_cast<std::size_t>(a)] -= d;
    hi[static_cast<std::size_t>(a)] += d;
    EXPECT_NEAR(j.d[a], (e(hi) - e(lo)) / (2 * d), 1e-7);
    EXPECT_NEAR(j.dd[a], (e(hi) - 2 * e(p) + e(lo)) / (d * d), 1e-5);
  }
}

TEST(Expression, VectorSplitsAtTopLevelAndCurl) {
  const VectorExpression v("max(x,y),min(y,z),x*y");
  const Vec3 p{1.0, 2.0, 3.0};
  EXPECT_EQ(v(p)[0], 2.0);
  EXPECT_EQ(v(p)[1], 2.0);
  const VectorExpression psi("0,0,x*y");
  const Vec3 c = psi.curl(p);
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  EXPECT_DOUBLE_EQ(c[1], -2.0);
  EXPECT_DOUBLE_EQ(c[2], 0.0);
}

// ---------------------------------------------------------------------------
// Drift

TEST(Drift, ZeroSpecGivesZeroField) {
  const auto gm = build_grid(Ball{}, 0.2);
  const auto b = sample_singular_drift(gm.mask, DriftSpec{});
  for (const auto& v : b.v) EXPECT_EQ(norm(v), 0.0);
}

TEST(Drift, PaperFormulaAtPoint) {
  DriftSpec s;
  s.alpha = -2.0;
  const Vec3 b = singular_drift(s, {0.5, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(b[0], 4.0);
  EXPECT_DOUBLE_EQ(b[1], 0.0);
  EXPECT_DOUBLE_EQ(b[2], 0.0);
  s.singular = Singularity::point;
  s.alpha = -3.0;
  const Vec3 q = singular_drift(s, {0.0, 0.0, 0.5});
  EXPECT_DOUBLE_EQ(q[2], 6.0);
}

TEST(Drift, CurlMatchesCentralDifferenceOfPotential) {
  const VectorExpression psi("0,0,x*y");
  const auto gm = build_grid(Box{{-1, -1, -1}, {1, 1, 1}}, 0.1);
  DriftSpec s;
  s.divfree = CurlPotential{psi};
  const auto b = sample_divfree(gm.mask, s);
  const auto p = sample(gm.grid, psi);
  const Grid& g = gm.grid;
  const double inv = 0.5 / g.h();
  for (auto n : gm.mask.active_nodes()) {
    const double dzdy = (p[n + g.stride(1)][2] - p[n - g.stride(1)][2]) * inv;
    const double dzdx = (p[n + g.stride(0)][2] - p[n - g.stride(0)][2]) * inv;
    EXPECT_NEAR(b[n][0], dzdy, 1e-12);
    EXPECT_NEAR(b[n][1], -dzdx, 1e-12);
  }
}

TEST(Drift, SampledCurlDivergenceIsSecondOrder) {
  const VectorExpression psi("sin(y)*z,cos(x*z),x*y^2");
  DriftSpec s;
  s.divfree = CurlPotential{psi};
  std::vector<double> hs{0.2, 0.1, 0.05}, err;
  for (double h : hs) {
    const auto gm = build_grid(Ball{{0, 0, 0}, 1.0}, h);
    const auto d = divergence(gm.mask, sample_divfree(gm.mask, s));
    double m = 0.0;
    for (auto n : gm.mask.active_nodes()) m = std::max(m, std::abs(d[n]));
    err.push_back(m);
  }
  EXPECT_GT(err[0] / err[1], 3.0);
  EXPECT_GT(err[1] / err[2], 3.0);
}

TEST(Drift, RegularizedDriftIsBounded) {
  const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, 0.05);
  DriftSpec s;
  s.alpha = -2.0;
  s.epsilon = 0.1;
  s.divfree = CurlPotential{VectorExpression("0,0.5*x*z,0.5*x*y")};
  const auto b = sample_divfree(gm.mask, s);
  const auto b0 = sample_singular_drift(gm.mask, s);
  double bmax = 0.0;
  for (auto n : gm.mask.active_nodes()) bmax = std::max(bmax, norm(b[n]));
  for (auto n : gm.mask.active_nodes()) EXPECT_LE(norm(b0[n]), 2.0 / (2 * 0.1) + bmax + 1e-12);
}

TEST(Drift, GridSamplesMustMatchGrid) {
  const auto a = build_grid(Ball{}, 0.2);
  const auto b = build_grid(Ball{}, 0.25);
  DriftSpec s;
  s.divfree = GridSamples{VectorField(b.grid)};
  EXPECT_THROW(sample_divfree(a.mask, s), Error);
  VectorField bad(a.grid);
  bad[a.mask.active_nodes()[3]] = {std::nan(""), 0, 0};
  s.divfree = GridSamples{bad};
  EXPECT_THROW(sample_divfree(a.mask, s), Error);
}

// ---------------------------------------------------------------------------
// Mollification

namespace {
bool deep(const DomainMask& m, std::size_t n, double r) {
  const Vec3 x = m.grid().node(n);
  return std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2])}) < 1.0 - r - m.grid().h();
}
}  // namespace

TEST(Mollify, KernelIsNormalized) {
  double s = 0.0;
  for (const auto& t : mollifier_taps(0.1, 0.35)) {
    s += t.w;
    EXPECT_GT(t.w, 0.0);
  }
  EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(Mollify, RadiusZeroIsIdentity) {
  const auto gm = build_grid(Box{}, 0.1);
  const auto f = sample(gm.grid, Expression("sin(3*x)*y"));
  EXPECT_EQ(mollify(gm.mask, f, 0.0).v, f.v);
}

TEST(Mollify, ConstantsAndLinearFieldsPreservedInside) {
  const auto gm = build_grid(Box{}, 0.1);
  const double r = 0.2;
  const auto c = mollify(gm.mask, ScalarField(gm.grid, 2.5), r);
  const auto lin = mollify(gm.mask, sample(gm.grid, Expression("x")), r);
  for (auto n : gm.mask.active_nodes()) {
    if (!deep(gm.mask, n, r)) continue;
    EXPECT_NEAR(c[n], 2.5, 1e-13);
    EXPECT_NEAR(lin[n], gm.grid.node(n)[0], 1e-12);
  }
}

TEST(Mollify, LinearPositiveAndShiftCommuting) {
  const auto gm = build_grid(Box{}, 0.1);
  const double r = 0.3;
  const auto a = sample(gm.grid, Expression("pos(x)*y^2"));
  const auto b = sample(gm.grid, Expression("exp(z)"));
  ScalarField sum(gm.grid), shifted(gm.grid);
  for (std::size_t n = 0; n < sum.size(); ++n) {
    sum[n] = 2.0 * a[n] - 3.0 * b[n];
    shifted[n] = a[n] + 1.0;
  }
  const auto ma = mollify(gm.mask, a, r), mb = mollify(gm.mask, b, r);
  const auto ms = mollify(gm.mask, sum, r), mshift = mollify(gm.mask, shifted, r);
  for (auto n : gm.mask.active_nodes()) {
    EXPECT_NEAR(ms[n], 2.0 * ma[n] - 3.0 * mb[n], 1e-12);
    EXPECT_GE(ma[n], 0.0);
    if (deep(gm.mask, n, r)) EXPECT_NEAR(mshift[n], ma[n] + 1.0, 1e-12);
  }
}

TEST(Mollify, RadiusBeyondDiameterFails) {
  const auto gm = build_grid(Ball{}, 0.2);
  EXPECT_THROW(mollify(gm.mask, ScalarField(gm.grid, 1.0), 10.0), Error);
  EXPECT_THROW(mollify(gm.mask, VectorField(gm.grid), -1.0), Error);
}

// ---------------------------------------------------------------------------
// Norms

TEST(WeakLp, InverseAxisDistanceOnCylinder) {
  const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, 0.05);
  const auto f = sample(gm.grid, Expression("1/r"));
  EXPECT_NEAR(weak_lp_norm(f, 2.0, gm.mask).value / std::sqrt(2 * pi), 1.0, 0.10);
}

TEST(WeakLp, ConstantFieldSingleLevelSet) {
  const auto gm = build_grid(Ball{}, 0.1);
  const ScalarField c(gm.grid, 3.0);
  const double V = gm.mask.interior_volume();
  EXPECT_DOUBLE_EQ(weak_lp_norm(c, 2.0, gm.mask, LevelRule::inclusive).value, 3.0 * std::sqrt(V));
  EXPECT_NEAR(weak_lp_norm(c, 2.0, gm.mask, LevelRule::inclusive).value, 3.0 * std::sqrt(ball_volume(1.0)), 0.1);
  EXPECT_EQ(weak_lp_norm(c, 2.0, gm.mask, LevelRule::strict).value, 0.0);
}

TEST(WeakLp, ZeroAndScaling) {
  const auto gm = build_grid(Ball{}, 0.1);
  EXPECT_EQ(weak_lp_norm(ScalarField(gm.grid), 2.0, gm.mask).value, 0.0);
  const auto f = sample(gm.grid, Expression("1/rho"));
  ScalarField g = f;
  for (auto& v : g.v) v *= -4.0;
  EXPECT_DOUBLE_EQ(weak_lp_norm(g, 3.0, gm.mask).value, 4.0 * weak_lp_norm(f, 3.0, gm.mask).value);
  EXPECT_THROW(weak_lp_norm(f, 0.5, gm.mask), Error);
}

TEST(WeakMorrey, StableUnderRefinement) {
  std::vector<double> vals;
  for (double h : {0.1, 0.05}) {
    const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, h);
    const auto f = sample(gm.grid, Expression("1/r"));
    vals.push_back(weak_morrey_norm(f, 2.0, 1.0, gm.mask, {{0, 0, 0}, {0.5, 0, 0}}, {1, 0.5, 0.25}).value);
  }
  EXPECT_NEAR(vals[1] / vals[0], 1.0, 0.15);
}

TEST(WeakMorrey, MonotoneInCentersAndRadii) {
  const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, 0.1);
  const auto f = sample(gm.grid, Expression("1/r"));
  const std::vector<Vec3> off{{0.5, 0, 0}, {0, 0.6, 0.3}};
  std::vector<Vec3> all = off;
  all.push_back({0, 0, 0});
  const double sub = weak_morrey_norm(f, 2, 1, gm.mask, off, {0.5, 0.25}).value;
  EXPECT_LE(sub, weak_morrey_norm(f, 2, 1, gm.mask, all, {0.5, 0.25}).value);
  EXPECT_LE(sub, weak_morrey_norm(f, 2, 1, gm.mask, off, {1, 0.5, 0.25, 0.125}).value);
  EXPECT_EQ(weak_morrey_norm(ScalarField(gm.grid), 2, 1, gm.mask, all, {0.5}).value, 0.0);
  EXPECT_THROW(weak_morrey_norm(f, 2, 1, gm.mask, {{5, 5, 5}}, {0.5}), Error);
}

TEST(Morrey, ConstantWithFullDimension) {
  const auto gm = build_grid(Box{{-2, -2, -2}, {2, 2, 2}}, 0.1);
  const ScalarField c(gm.grid, 2.0);
  const auto r = morrey_norm(c, 2.0, 3.0, gm.mask, {{0, 0, 0}}, {1.0, 0.5});
  EXPECT_NEAR(r.value / (2.0 * std::sqrt(ball_volume(1.0))), 1.0, 0.05);
  EXPECT_EQ(morrey_norm(ScalarField(gm.grid), 2.0, 3.0, gm.mask, {{0, 0, 0}}, {1.0}).value, 0.0);
}

TEST(Morrey, StrongBelowWeakOnSingularDrift) {
  std::vector<double> ratio;
  for (double h : {0.1, 0.05}) {
    const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, h);
    const auto f = sample(gm.grid, Expression("1/r"));
    const std::vector<Vec3> cs{{0, 0, 0}, {0.5, 0, 0}};
    const std::vector<double> rs{1, 0.5, 0.25};
    ratio.push_back(morrey_norm(f, 1.5, 1.5, gm.mask, cs, rs).value /
                    weak_morrey_norm(f, 2.0, 1.0, gm.mask, cs, rs).value);
  }
  EXPECT_LT(ratio[0], 5.0);
  EXPECT_NEAR(ratio[1] / ratio[0], 1.0, 0.15);
}

TEST(Lq, ConstantField) {
  const auto gm = build_grid(Ball{}, 0.1);
  EXPECT_NEAR(lq_norm(ScalarField(gm.grid, 2.0), 4.0, gm.mask), 2.0 * std::pow(gm.mask.interior_volume(), 0.25),
              1e-12);
}

TEST(NormCsv, Columns) {
  std::ostringstream os;
  NormReport r;
  r.kind = NormKind::weak_morrey;
  r.value = 1.5;
  write_norm_csv(os, {r});
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "kind,p,lambda,value,argmax_center,argmax_radius");
}

// ---------------------------------------------------------------------------
// Field files

TEST(FieldFile, RoundTrip) {
  const auto gm = build_grid(Ball{}, 0.25);
  const auto s = sample(gm.grid, Expression("sin(x)/3"));
  const auto v = sample(gm.grid, VectorExpression("x,y/7,exp(z)"));
  std::stringstream a, b;
  write_field(a, s);
  write_field(b, v);
  EXPECT_EQ(read_scalar_field(a, gm.grid).v, s.v);
  const auto vb = read_vector_field(b, gm.grid);
  EXPECT_EQ(vb.v, v.v);
  std::stringstream c;
  write_field(c, s);
  EXPECT_THROW(read_vector_field(c, gm.grid), Error);
  std::stringstream d("field 2 1\n0");
  std::vector<double> vals;
  EXPECT_THROW(read_field_values(d, vals), Error);
}
