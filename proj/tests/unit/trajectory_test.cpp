#include <cmath>

#include <gtest/gtest.h>

#include "mlcd/trajectory.hpp"

namespace mlcd {
namespace {

TEST(HelixReference, KnownPoints) {
  EXPECT_EQ(helix_reference(0.0, 0.01), Vec3(0, 0, 0.6));
  const Vec3 a = helix_reference(50.0, 0.01);
  EXPECT_NEAR(a.x(), 0.2, 1e-15);
  EXPECT_NEAR(a.y(), 0.4, 1e-15);
  EXPECT_NEAR(a.z(), 0.0, 1e-15);
  const Vec3 b = helix_reference(100.0, 0.01);
  EXPECT_NEAR(b.x(), 0.4, 1e-15);
  EXPECT_NEAR(b.y(), 0.0, 1e-15);
  EXPECT_NEAR(b.z(), -0.6, 1e-15);
}

TEST(HelixReference, CustomAmplitudes) {
  const Vec3 p = helix_reference(25.0, HelixParameters{0.02, Vec3(1, 2, 3)});
  EXPECT_NEAR(p.x(), 0.5, 1e-15);
  EXPECT_NEAR(p.y(), 2.0, 1e-15);
  EXPECT_NEAR(p.z(), 0.0, 1e-15);
}

TEST(ReferenceTrajectory, HelixDuration) {
  auto h = ReferenceTrajectory::helix({}, 1000.0);
  EXPECT_EQ(h.kind(), ReferenceTrajectory::Kind::kHelix);
  EXPECT_EQ(h.duration(), 1000.0);
  EXPECT_EQ(h.position(50.0), helix_reference(50.0, 0.01));
  h.set_duration(0.0);
  EXPECT_EQ(h.duration(), 0.0);
  EXPECT_THROW(h.set_duration(-1.0), InputError);
  EXPECT_THROW(h.set_duration(std::nan("")), InputError);
}

TEST(ReferenceTrajectory, SplineInterpolatesWaypoints) {
  const auto s = ReferenceTrajectory::waypoint_spline(
      {{0.0, Vec3(0, 0, 0)}, {1.0, Vec3(1, 0, 0)}, {3.0, Vec3(1, 2, 0)}, {4.0, Vec3(0, 2, 1)}});
  EXPECT_EQ(s.kind(), ReferenceTrajectory::Kind::kWaypointSpline);
  EXPECT_EQ(s.duration(), 4.0);
  EXPECT_EQ(s.position(0.0), Vec3(0, 0, 0));
  EXPECT_LT((s.position(1.0) - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((s.position(3.0) - Vec3(1, 2, 0)).norm(), 1e-15);
  EXPECT_EQ(s.position(4.0), Vec3(0, 2, 1));
  EXPECT_EQ(s.position(10.0), Vec3(0, 2, 1));
  EXPECT_EQ(s.position(-1.0), Vec3(0, 0, 0));
  // Continuity across a knot.
  EXPECT_LT((s.position(1.0 - 1e-9) - s.position(1.0 + 1e-9)).norm(), 1e-8);
}

TEST(ReferenceTrajectory, SplineReproducesLines) {
  // Collinear, evenly timed waypoints give exact linear motion.
  const auto s = ReferenceTrajectory::waypoint_spline(
      {{0.0, Vec3(0, 0, 0)}, {1.0, Vec3(1, 2, 3)}, {2.0, Vec3(2, 4, 6)}, {3.0, Vec3(3, 6, 9)}});
  for (double t : {0.25, 1.5, 2.75}) EXPECT_LT((s.position(t) - t * Vec3(1, 2, 3)).norm(), 1e-14);
}

TEST(ReferenceTrajectory, SplineErrors) {
  EXPECT_THROW(ReferenceTrajectory::waypoint_spline({}), InputError);
  EXPECT_THROW(ReferenceTrajectory::waypoint_spline({{1.0, Vec3::Zero()}}), InputError);
  EXPECT_THROW(ReferenceTrajectory::waypoint_spline({{0.0, Vec3::Zero()}, {0.0, Vec3::Ones()}}),
               InputError);
  EXPECT_THROW(
      ReferenceTrajectory::waypoint_spline({{0.0, Vec3::Zero()}, {1.0, Vec3::Constant(INFINITY)}}),
      InputError);
}

TEST(TimeGrid, Basics) {
  const auto g = time_grid(1000.0, 0.1);
  ASSERT_EQ(g.size(), 10001u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1000.0);
  EXPECT_EQ(g[5000], 500.0);
  for (std::size_t i = 1; i < g.size(); ++i) ASSERT_GT(g[i], g[i - 1]);
  EXPECT_EQ(time_grid(0.0, 0.1), std::vector<double>{0.0});
  EXPECT_EQ(time_grid(1.0, 0.5), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(TimeGrid, Errors) {
  try {
    time_grid(10.0, 0.0);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("nonpositive step"), std::string::npos);
  }
  EXPECT_THROW(time_grid(10.0, -0.1), InputError);
  EXPECT_THROW(time_grid(1.0, 0.3), InputError);
  EXPECT_THROW(time_grid(-1.0, 0.1), InputError);
}

}  // namespace
}  // namespace mlcd
