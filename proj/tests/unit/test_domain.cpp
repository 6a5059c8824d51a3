#include <gtest/gtest.h>

#include <sstream>

#include "sdrift/domain.hpp"

using namespace sdrift;

namespace {

std::size_t brute_count(const GridAndMask& gm, const std::function<bool(const Vec3&)>& in) {
  std::size_t c = 0;
  for (std::size_t n = 0; n < gm.grid.size(); ++n)
    if (in(gm.grid.node(n))) ++c;
  return c;
}

}  // namespace

TEST(Grid, BallCoarseInteriorIsInsideNodes) {
  const auto gm = build_grid(Ball{{0, 0, 0}, 1.0}, 0.5);
  EXPECT_EQ(gm.grid.n1(), 6);  // 4 cells plus a halo layer on each side
  EXPECT_EQ(gm.mask.active_count(), 32u);
  for (std::size_t n = 0; n < gm.grid.size(); ++n)
    EXPECT_EQ(gm.mask.interior(n), norm(gm.grid.node(n)) < 1.0);
}

TEST(Grid, CylinderCountMatchesBruteForce) {
  const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, 0.25);
  const auto expect = brute_count(gm, [](const Vec3& x) {
    return x[0] * x[0] + x[1] * x[1] < 1.0 && x[2] > -1.0 && x[2] < 1.0;
  });
  EXPECT_EQ(gm.mask.active_count(), expect);
}

TEST(Grid, ThinBoxUnderflowsResolution) {
  try {
    build_grid(Box{{0, 0, 0}, {1, 1, 0.05}}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::resolution);
  }
}

TEST(Grid, RejectsBadSpacingAndBudget) {
  EXPECT_THROW(build_grid(Ball{}, 0.0), Error);
  EXPECT_THROW(build_grid(Ball{}, -1.0), Error);
  try {
    build_grid(Ball{}, 0.01, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::budget);
  }
}

TEST(Grid, NodesStayOffAxis) {
  for (double h : {0.3, 0.1, 0.07}) {
    const auto gm = build_grid(Cylinder{1.0, -0.5, 0.5}, h);
    double dmin = 1e300;
    for (std::size_t n = 0; n < gm.grid.size(); ++n) dmin = std::min(dmin, axis_distance(gm.grid.node(n)));
    EXPECT_GE(dmin, h / 2 * std::sqrt(2.0) - 1e-15);
  }
}

TEST(Grid, NodesAreBitReproducible) {
  const auto a = build_grid(Ball{{0, 0, 0}, 1.0}, 0.1);
  const auto b = build_grid(Ball{{0, 0, 0}, 1.0}, 0.1);
  EXPECT_TRUE(a.mask.same_nodes(b.mask));
  const Grid& g = a.grid;
  const auto c = g.ijk(1234);
  EXPECT_EQ(g.node(1234)[0], g.coord(0, c[0]));
  EXPECT_EQ(g.index(c[0], c[1], c[2]), 1234u);
}

TEST(Mask, InteriorHasFullStencilAndContainsOrigin) {
  const auto gm = build_grid(Ball{{0, 0, 0}, 1.0}, 0.1);
  const Grid& g = gm.grid;
  for (auto n : gm.mask.active_nodes())
    for (int a = 0; a < 3; ++a) {
      EXPECT_NE(gm.mask.cls(n + g.stride(a)), NodeClass::exterior);
      EXPECT_NE(gm.mask.cls(n - g.stride(a)), NodeClass::exterior);
    }
  bool near_origin = false;
  for (auto n : gm.mask.active_nodes()) near_origin = near_origin || norm(g.node(n)) < g.h();
  EXPECT_TRUE(near_origin);
}

TEST(Axis, CylinderLength) {
  const auto gm = build_grid(Cylinder{1.0, -1.0, 1.0}, 0.25);
  EXPECT_NEAR(axis_samples(gm.mask).length(), 2.0, 0.25);
}

TEST(Axis, BallChordLength) {
  const auto gm = build_grid(Ball{{0, 0, 0}, 1.0}, 0.1);
  const auto ax = axis_samples(gm.mask);
  EXPECT_NEAR(ax.length(), 2.0, 0.2);
  for (std::size_t i = 1; i < ax.size(); ++i) EXPECT_NEAR(ax.z[i] - ax.z[i - 1], 0.1, 1e-12);
}

TEST(Axis, BoxAwayFromAxisFails) {
  const auto gm = build_grid(Box{{0.5, 0.5, 0}, {1.5, 1.5, 1}}, 0.1);
  try {
    axis_samples(gm.mask);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::no_axis);
  }
}

TEST(Shrink, ZeroIsIdentity) {
  const auto gm = build_grid(Ball{{0, 0, 0}, 1.0}, 0.1);
  EXPECT_TRUE(shrink_domain(gm.mask, 0.0).same_nodes(gm.mask));
}

TEST(Shrink, BallMatchesBruteForceBand) {
  const auto gm = build_grid(Ball{{0, 0, 0}, 1.0}, 0.1);
  const auto s = shrink_domain(gm.mask, 0.3);
  for (std::size_t n = 0; n < gm.grid.size(); ++n) {
    const double r = norm(gm.grid.node(n));
    if (r < 1.0 - 0.3 - 0.1) EXPECT_TRUE(s.interior(n)) << r;
    if (r > 1.0 - 0.3 + 0.1) EXPECT_FALSE(s.interior(n)) << r;
  }
}

TEST(Shrink, DiameterEmptiesInterior) {
  const auto gm = build_grid(Ball{{0, 0, 0}, 1.0}, 0.1);
  try {
    shrink_domain(gm.mask, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_domain);
  }
}

TEST(Shrink, Monotone) {
  const auto gm = build_grid(Box{{-1, -1, -1}, {1, 1, 1}}, 0.1);
  const double eps[] = {0.05, 0.1, 0.2, 0.35, 0.5};
  for (std::size_t i = 1; i < std::size(eps); ++i)
    EXPECT_TRUE(subset(shrink_domain(gm.mask, eps[i]), shrink_domain(gm.mask, eps[i - 1])));
}

TEST(Sequence, NestedAndExhaustive) {
  const auto gm = build_grid(Ball{{0, 0, 0}, 1.0}, 0.1);
  const auto seq = domain_sequence(gm.mask, {0.1, 0.4, 0.2});
  ASSERT_EQ(seq.masks.size(), 4u);
  for (std::size_t i = 1; i < seq.masks.size(); ++i) {
    EXPECT_TRUE(subset(seq.masks[i - 1], seq.masks[i]));
    EXPECT_LT(seq.masks[i - 1].active_count(), seq.masks[i].active_count());
  }
  EXPECT_TRUE(seq.masks.back().same_nodes(gm.mask));
  EXPECT_THROW(domain_sequence(gm.mask, {0.0}), Error);
}

TEST(MaskFile, RoundTrip) {
  const auto gm = build_grid(Cylinder{0.7, -0.3, 0.6}, 0.1);
  std::stringstream ss;
  write_mask(ss, gm.mask);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header.rfind("grid ", 0), 0u);
  ss.seekg(0);
  const auto back = read_mask(ss);
  EXPECT_TRUE(back.same_nodes(gm.mask));
}

TEST(MaskFile, RejectsGarbage) {
  std::stringstream a("grod 1 1 1 0.1 0 0 0\nI");
  EXPECT_THROW(read_mask(a), Error);
  std::stringstream b("grid 2 1 1 0.1 0.05 0.05 0.05\nE");
  EXPECT_THROW(read_mask(b), Error);
}
