#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "tomap/error.hpp"
#include "tomap/view_planner.hpp"

namespace tomap {
namespace {

using Poly = std::vector<Eigen::Vector2d>;

Poly rect(double w, double h) { return {{0, 0}, {w, 0}, {w, h}, {0, h}}; }

double yaw_error_to_axis(const Waypoint& w, const Eigen::Vector2d& axis) {
  const Eigen::Vector2d d = axis - w.position.head<2>();
  return std::abs(wrap_angle(std::atan2(d.y(), d.x()) - w.yaw));
}

TEST(WrapAngle, Range) {
  EXPECT_DOUBLE_EQ(wrap_angle(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(wrap_angle(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(wrap_angle(0.25 + 8 * std::numbers::pi), 0.25, 1e-12);
}

TEST(Lawnmower, SquareGivesSixSerpentineLanes) {
  const Poly sq = rect(100, 100);
  const auto wps = lawnmower(sq, 20, 30);
  ASSERT_EQ(wps.size(), 12u);
  for (int lane = 0; lane < 6; ++lane) {
    const Waypoint& a = wps[2 * lane];
    const Waypoint& b = wps[2 * lane + 1];
    EXPECT_DOUBLE_EQ(a.position.x(), 20.0 * lane);
    EXPECT_DOUBLE_EQ(b.position.x(), 20.0 * lane);
    EXPECT_DOUBLE_EQ(a.position.z(), 30.0);
    const bool up = lane % 2 == 0;
    EXPECT_DOUBLE_EQ(a.position.y(), up ? 0.0 : 100.0);
    EXPECT_DOUBLE_EQ(b.position.y(), up ? 100.0 : 0.0);
    // Heading along the direction of travel.
    EXPECT_NEAR(a.yaw, up ? std::numbers::pi / 2 : -std::numbers::pi / 2, 1e-15);
    EXPECT_EQ(a.yaw, b.yaw);
  }
}

TEST(Lawnmower, ThinPolygonGivesOneLane) {
  const auto wps = lawnmower(rect(5, 80), 20, 30);
  ASSERT_EQ(wps.size(), 2u);
  EXPECT_DOUBLE_EQ(wps[0].position.x(), 2.5);
}

TEST(Lawnmower, LeadInExtendsLaneEntry) {
  const auto wps = lawnmower(rect(100, 100), 50, 30, 7.0);
  EXPECT_DOUBLE_EQ(wps[0].position.y(), -7.0);
  EXPECT_DOUBLE_EQ(wps[1].position.y(), 100.0);
  EXPECT_DOUBLE_EQ(wps[2].position.y(), 107.0);
  EXPECT_DOUBLE_EQ(wps[3].position.y(), 0.0);
}

TEST(Lawnmower, Errors) {
  const Poly two{{0, 0}, {1, 1}};
  const Poly line{{0, 0}, {1, 1}, {2, 2}};
  for (const Poly& p : {two, line}) {
    try {
      lawnmower(p, 10, 30);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::EmptyPolygon);
    }
  }
  EXPECT_THROW(lawnmower(rect(10, 10), 0.0, 30), Error);
}

// Ground footprint swept by the forward camera along each lane, rasterized
// on a 1 m grid: the ground point must fall between the two scanning rays
// and inside the horizontal field of view at some UAV position on the lane.
double footprint_coverage(const PlannerConfig& cfg, const CameraIntrinsics& k) {
  const auto wps = search_plan(cfg);
  const double alt = cfg.search_altitude;
  const double s_lo = alt / std::tan(cfg.lower_ray_depression());
  const double s_hi = alt / std::tan(cfg.upper_ray_depression());
  const double half_fov_slope = k.cx / k.fx;
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& v : cfg.survey_polygon) {
    x_lo = std::min(x_lo, v.x()), x_hi = std::max(x_hi, v.x());
    y_lo = std::min(y_lo, v.y()), y_hi = std::max(y_hi, v.y());
  }
  int total = 0, covered = 0;
  for (double x = x_lo + 0.5; x < x_hi; x += 1.0) {
    for (double y = y_lo + 0.5; y < y_hi; y += 1.0) {
      ++total;
      for (std::size_t i = 0; i + 1 < wps.size(); i += 2) {
        const double dir = wps[i + 1].position.y() > wps[i].position.y() ? 1.0 : -1.0;
        // Along-track distances reachable from positions on the lane.
        const double a = dir * (y - wps[i + 1].position.y());
        const double b = dir * (y - wps[i].position.y());
        const double s = std::min(b, s_hi);
        if (s < std::max(a, s_lo)) continue;
        const double depth = s * std::cos(cfg.gamma) + alt * std::sin(cfg.gamma);
        if (std::abs(x - wps[i].position.x()) <= half_fov_slope * depth) {
          ++covered;
          break;
        }
      }
    }
  }
  return static_cast<double>(covered) / total;
}

TEST(SearchPlan, FootprintsCoverSurvey) {
  const CameraIntrinsics k;
  PlannerConfig cfg;
  for (const Poly& p : {rect(200, 200), rect(60, 100), rect(130, 70)}) {
    cfg.survey_polygon = p;
    EXPECT_GE(footprint_coverage(cfg, k), 0.99);
  }
}

TEST(EstimationCircle, RadiusAndStart) {
  const WorldPoint c(10, 20, 0);
  const auto wps = estimation_circle(c, 30, deg_to_rad(45), {10, 100, 30});
  ASSERT_EQ(wps.size(), 25u);
  for (const Waypoint& w : wps) {
    EXPECT_NEAR((w.position.head<2>() - c.head<2>()).norm(), 30.0, 1e-9);
    EXPECT_DOUBLE_EQ(w.position.z(), 30.0);
    EXPECT_LT(yaw_error_to_axis(w, c.head<2>()), 1e-9);
  }
  EXPECT_LT((wps.front().position - WorldPoint(10, 50, 30)).norm(), 1e-9);
  EXPECT_LT((wps.back().position - wps.front().position).norm(), 1e-9);
}

TEST(EstimationCircle, RaysPassThroughAxis) {
  Rng rng(81);
  for (int trial = 0; trial < 200; ++trial) {
    const WorldPoint c(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 5));
    const double alt = rng.uniform(10, 40);
    const double g0 = rng.uniform(0.3, 1.2);
    const auto wps = estimation_circle(c, alt, g0, test::random_vector(rng, -60, 60));
    EXPECT_NEAR((wps[0].position.head<2>() - c.head<2>()).norm(), (alt - c.z()) / std::tan(g0), 1e-9);
    for (const Waypoint& w : wps) {
      const Eigen::Vector3d dir(std::cos(g0) * std::cos(w.yaw), std::cos(g0) * std::sin(w.yaw), -std::sin(g0));
      // Distance between the ray and the vertical line through c.
      const Eigen::Vector3d n = dir.cross(Eigen::Vector3d::UnitZ());
      const double dist = std::abs((c - w.position).dot(n)) / n.norm();
      ASSERT_LT(dist, 1e-6);
      // The ray meets the axis at the centre height.
      const double s = (w.position.head<2>() - c.head<2>()).norm() / std::cos(g0);
      ASSERT_NEAR((w.position + s * dir - c).norm(), 0.0, 1e-6);
    }
  }
}

TEST(EstimationCircle, TargetAbovePlaneThrows) {
  try {
    estimation_circle({0, 0, 31}, 30, deg_to_rad(45), {0, 0, 30});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TargetAboveSearchPlane);
  }
}

TEST(MappingCircles, RadiusIsCylinderPlusStandoff) {
  PlannerConfig cfg;
  const BCylinder cyl{{0, 0, 1.5}, 1.0, 3.0};
  EXPECT_DOUBLE_EQ(mapping_layout(cyl, cfg).radius, 5.0);
}

TEST(MappingCircles, FirstAltitudeAndSingleCircle) {
  PlannerConfig cfg;
  const BCylinder cyl{{3, 4, 1.5}, 1.0, 3.0};
  const MappingLayout layout = mapping_layout(cyl, cfg);
  ASSERT_EQ(layout.altitudes.size(), 1u);
  EXPECT_NEAR(layout.altitudes[0], 4.0 * std::tan(deg_to_rad(80)), 1e-12);
  EXPECT_NEAR(layout.altitudes[0], 22.69, 0.005);
  const auto wps = mapping_circles(cyl, cfg, 0.3);
  ASSERT_EQ(wps.size(), 25u);
  for (const Waypoint& w : wps) {
    EXPECT_NEAR((w.position.head<2>() - cyl.center.head<2>()).norm(), 5.0, 1e-12);
    EXPECT_LT(yaw_error_to_axis(w, cyl.center.head<2>()), 1e-9);
  }
}

TEST(MappingCircles, StackSpacingAndTermination) {
  PlannerConfig cfg;
  const BCylinder cyl{{0, 0, 25}, 1.0, 50.0};
  const MappingLayout layout = mapping_layout(cyl, cfg);
  const double tl = std::tan(cfg.lower_ray_depression());
  const double tu = std::tan(cfg.upper_ray_depression());
  ASSERT_GE(layout.altitudes.size(), 2u);
  for (std::size_t i = 1; i < layout.altitudes.size(); ++i) {
    EXPECT_NEAR(layout.altitudes[i] - layout.altitudes[i - 1], cfg.r_m * (tl - tu), 1e-9);
  }
  // The newest circle's upper ray reaches the top centre; the one before did not.
  EXPECT_GE(layout.altitudes.back() - layout.radius * tu, cyl.top_z());
  EXPECT_LT(layout.altitudes[layout.altitudes.size() - 2] - layout.radius * tu, cyl.top_z());
}

TEST(MappingCircles, WedgesCoverWall) {
  const CameraIntrinsics k;
  PlannerConfig cfg;
  Rng rng(82);
  for (int trial = 0; trial < 30; ++trial) {
    const BCylinder cyl{{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(0, 5)}, rng.uniform(0.5, 3),
                        rng.uniform(1, 6)};
    const auto wps = mapping_circles(cyl, cfg, rng.uniform(-3, 3));
    const auto samples = test::cylinder_wall_samples(cyl, 20, 72, 6);
    EXPECT_EQ(test::uncovered_count(samples, wps, cfg, k), 0);
  }
}

TEST(MappingCircles, WedgeOracleDetectsGaps) {
  // Removing every circle but the first leaves a tall cylinder's upper wall unseen.
  const CameraIntrinsics k;
  PlannerConfig cfg;
  const BCylinder cyl{{0, 0, 20}, 1.0, 40.0};
  auto wps = mapping_circles(cyl, cfg);
  ASSERT_GT(wps.size(), 25u);
  wps.resize(25);
  EXPECT_GT(test::uncovered_count(test::cylinder_wall_samples(cyl, 20, 36, 3), wps, cfg, k), 0);
}

TEST(MappingCircles, InvalidScanGeometry) {
  const BCylinder cyl{{0, 0, 1}, 1.0, 2.0};
  PlannerConfig flat;
  flat.gamma = deg_to_rad(20);
  flat.beta = deg_to_rad(40);
  PlannerConfig steep;
  steep.gamma = deg_to_rad(80);
  steep.beta = deg_to_rad(30);
  for (const PlannerConfig& cfg : {flat, steep}) {
    try {
      mapping_layout(cyl, cfg);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidScanGeometry);
    }
  }
}

TEST(PlannerConfig, Validation) {
  PlannerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.beta = 2.5 * c.gamma;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.r_m = 0;
  EXPECT_THROW(c.validate(), Error);
}

}  // namespace
}  // namespace tomap
