#pragma once

#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tomap/bcylinder.hpp"
#include "tomap/geometry.hpp"

namespace tomap {

struct Waypoint {
  WorldPoint position = WorldPoint::Zero();
  double yaw = 0.0;
};

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

struct PlannerConfig {
  /// Camera depression below the horizon (rad).
  double gamma = deg_to_rad(60.0);
  /// Depression of the line from the estimation circle to the target centre.
  double gamma0 = deg_to_rad(45.0);
  /// Vertical scanning field of view (rad).
  double beta = deg_to_rad(40.0);
  /// Stand-off from the cylinder surface during mapping (m).
  double r_m = 4.0;
  double search_altitude = 30.0;
  std::vector<Eigen::Vector2d> survey_polygon;
  double lane_spacing = 40.0;
  /// Angular spacing of circle waypoints (rad).
  double waypoint_spacing = deg_to_rad(15.0);

  double lower_ray_depression() const { return gamma + 0.5 * beta; }
  double upper_ray_depression() const { return gamma - 0.5 * beta; }
  void validate() const;
};

/// Boustrophedon lanes parallel to +y over a convex polygon, spaced along x.
/// Each lane is extended by `lead_in` metres before its entry edge. Throws
/// EmptyPolygon for fewer than three vertices or zero area.
std::vector<Waypoint> lawnmower(std::span<const Eigen::Vector2d> polygon, double lane_spacing,
                                double altitude, double lead_in = 0.0);

/// Lawn-mower plan for the configured survey. The lead-in is the ground
/// distance to the lower scanning ray, so each lane's footprint starts at
/// the polygon boundary.
std::vector<Waypoint> search_plan(const PlannerConfig& cfg);

/// Constant-altitude orbit above `center` with radius (altitude - z) / tan(gamma0),
/// starting at the point closest to `current_position` and closing the loop.
/// Throws TargetAboveSearchPlane when altitude <= center.z.
std::vector<Waypoint> estimation_circle(const WorldPoint& center, double altitude, double gamma0,
                                        const Eigen::Vector3d& current_position,
                                        double waypoint_spacing = deg_to_rad(15.0));

/// Geometry of the mapping circle stack.
struct MappingLayout {
  double radius = 0.0;
  std::vector<double> altitudes;
};

/// Circles of radius r_e + r_m; the first one puts the lower scanning ray on
/// the wall base, successive ones are spaced so wall bands abut, and the
/// stack stops once the upper ray from the newest circle reaches the top
/// centre at or above the top. Throws InvalidScanGeometry unless
/// 0 < gamma - beta/2 and gamma + beta/2 < pi/2.
MappingLayout mapping_layout(const BCylinder& cyl, const PlannerConfig& cfg);

std::vector<Waypoint> mapping_circles(const BCylinder& cyl, const PlannerConfig& cfg, double start_angle = 0.0);

}  // namespace tomap
