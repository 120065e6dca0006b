#pragma once

#include <Eigen/Dense>

#include "tomap/geometry.hpp"
#include "tomap/rng.hpp"
#include "tomap/view_planner.hpp"

namespace tomap {

struct UavConfig {
  double v_max = 1.0;
  double a_max = 1.0;
  /// Per-axis sigma of the position estimate error; truncated at 3 sigma in norm.
  double pose_noise_sigma = 0.0;
  double yaw_rate_max = 0.2;
  double dt = 0.1;
  double reach_tolerance = 0.2;
  double yaw_tolerance = 0.05;

  void validate() const;
};

/// Kinematic hovering UAV: position, heading and velocity; roll and pitch
/// are not modelled.
struct UavState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d estimated_position = Eigen::Vector3d::Zero();
  double estimated_yaw = 0.0;

  Pose true_pose() const;
  Pose estimated_pose() const;
};

/// One dt of flight toward `target`: speed follows a trapezoidal profile
/// bounded by v_max and a_max, yaw slews at most yaw_rate_max.
UavState step(const UavState& state, const Waypoint& target, const UavConfig& cfg, Rng& rng);

bool reached(const UavState& state, const Waypoint& target, const UavConfig& cfg);

/// Level-attitude pose from a position and heading.
Pose body_pose(const Eigen::Vector3d& position, double yaw);

}  // namespace tomap
