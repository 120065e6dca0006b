#include "tomap/view_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tomap/error.hpp"

namespace tomap {

namespace {

int steps_per_turn(double spacing) {
  return std::max(3, static_cast<int>(std::lround(2.0 * std::numbers::pi / spacing)));
}

void append_circle(std::vector<Waypoint>& out, const Eigen::Vector2d& center, double radius, double z,
                   double start_angle, int steps) {
  for (int i = 0; i <= steps; ++i) {
    const double a = start_angle + 2.0 * std::numbers::pi * i / steps;
    const Eigen::Vector2d xy = center + radius * Eigen::Vector2d(std::cos(a), std::sin(a));
    out.push_back({WorldPoint(xy.x(), xy.y(), z), wrap_angle(a + std::numbers::pi)});
  }
}

double polygon_area(std::span<const Eigen::Vector2d> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

}  // namespace

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

void PlannerConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  require(gamma > 0.0 && gamma <= 0.5 * std::numbers::pi, "gamma must lie in (0, pi/2]");
  require(gamma0 > 0.0 && gamma0 < 0.5 * std::numbers::pi, "gamma0 must lie in (0, pi/2)");
  require(beta > 0.0 && beta < 2.0 * gamma, "beta must lie in (0, 2 gamma)");
  require(r_m > 0.0, "r_m must be > 0");
  require(search_altitude > 0.0, "search_altitude must be > 0");
  require(lane_spacing > 0.0, "lane_spacing must be > 0");
  require(waypoint_spacing > 0.0 && waypoint_spacing <= std::numbers::pi, "waypoint_spacing must lie in (0, pi]");
}

std::vector<Waypoint> lawnmower(std::span<const Eigen::Vector2d> polygon, double lane_spacing,
                                double altitude, double lead_in) {
  if (polygon.size() < 3 || !(polygon_area(polygon) > 0.0)) {
    throw Error(ErrorCode::EmptyPolygon, "survey polygon has no area");
  }
  if (!(lane_spacing > 0.0)) throw Error(ErrorCode::InvalidArgument, "lane spacing must be > 0");

  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : polygon) {
    x_min = std::min(x_min, p.x());
    x_max = std::max(x_max, p.x());
  }
  const double width = x_max - x_min;
  std::vector<double> lanes;
  if (width < lane_spacing) {
    lanes.push_back(0.5 * (x_min + x_max));
  } else {
    const int n = static_cast<int>(std::floor(width / lane_spacing + 1e-9));
    for (int i = 0; i <= n; ++i) lanes.push_back(x_min + i * lane_spacing);
    if (x_max - lanes.back() > 1e-9 * std::max(1.0, width)) lanes.push_back(x_max);
  }

  std::vector<Waypoint> out;
  bool forward = true;
  for (double x : lanes) {
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < polygon.size(); ++i) {
      const auto& a = polygon[i];
      const auto& b = polygon[(i + 1) % polygon.size()];
      if (x < std::min(a.x(), b.x()) - 1e-9 || x > std::max(a.x(), b.x()) + 1e-9) continue;
      if (std::abs(b.x() - a.x()) < 1e-12) {
        y_lo = std::min({y_lo, a.y(), b.y()});
        y_hi = std::max({y_hi, a.y(), b.y()});
      } else {
        const double t = std::clamp((x - a.x()) / (b.x() - a.x()), 0.0, 1.0);
        const double y = a.y() + t * (b.y() - a.y());
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
    if (!(y_lo <= y_hi)) continue;
    const double yaw = forward ? 0.5 * std::numbers::pi : -0.5 * std::numbers::pi;
    const double y_start = forward ? y_lo - lead_in : y_hi + lead_in;
    const double y_end = forward ? y_hi : y_lo;
    out.push_back({WorldPoint(x, y_start, altitude), yaw});
    out.push_back({WorldPoint(x, y_end, altitude), yaw});
    forward = !forward;
  }
  return out;
}

std::vector<Waypoint> search_plan(const PlannerConfig& cfg) {
  const double lead_in = cfg.search_altitude / std::tan(cfg.lower_ray_depression());
  return lawnmower(cfg.survey_polygon, cfg.lane_spacing, cfg.search_altitude, lead_in);
}

std::vector<Waypoint> estimation_circle(const WorldPoint& center, double altitude, double gamma0,
                                        const Eigen::Vector3d& current_position, double waypoint_spacing) {
  const double dz = altitude - center.z();
  if (!(dz > 0.0)) throw Error(ErrorCode::TargetAboveSearchPlane, "target centre is not below the search plane");
  const double radius = dz / std::tan(gamma0);
  const Eigen::Vector2d offset = current_position.head<2>() - center.head<2>();
  const double start = offset.norm() > 0.0 ? std::atan2(offset.y(), offset.x()) : 0.0;
  std::vector<Waypoint> out;
  append_circle(out, center.head<2>(), radius, altitude, start, steps_per_turn(waypoint_spacing));
  return out;
}

MappingLayout mapping_layout(const BCylinder& cyl, const PlannerConfig& cfg) {
  const double upper = cfg.upper_ray_depression();
  const double lower = cfg.lower_ray_depression();
  if (!(upper > 0.0)) throw Error(ErrorCode::InvalidScanGeometry, "upper scanning ray does not descend");
  if (!(lower < 0.5 * std::numbers::pi)) throw Error(ErrorCode::InvalidScanGeometry, "lower scanning ray is not forward");
  if (!(cyl.radius > 0.0) || !(cyl.height > 0.0)) throw Error(ErrorCode::InvalidArgument, "invalid cylinder");

  MappingLayout layout;
  layout.radius = cyl.radius + cfg.r_m;
  const double first = cyl.bottom_z() + cfg.r_m * std::tan(lower);
  const double spacing = cfg.r_m * (std::tan(lower) - std::tan(upper));
  constexpr int kMaxCircles = 10000;
  for (int i = 0; i < kMaxCircles; ++i) {
    const double z = first + i * spacing;
    layout.altitudes.push_back(z);
    if (z - layout.radius * std::tan(upper) >= cyl.top_z()) break;
  }
  return layout;
}

std::vector<Waypoint> mapping_circles(const BCylinder& cyl, const PlannerConfig& cfg, double start_angle) {
  const MappingLayout layout = mapping_layout(cyl, cfg);
  std::vector<Waypoint> out;
  const int steps = steps_per_turn(cfg.waypoint_spacing);
  for (double z : layout.altitudes) append_circle(out, cyl.center.head<2>(), layout.radius, z, start_angle, steps);
  return out;
}

}  // namespace tomap
