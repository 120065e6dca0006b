#include "tomap/uav_sim.hpp"

#include <algorithm>
#include <cmath>

#include "tomap/error.hpp"

namespace tomap {

void UavConfig::validate() const {
  if (!(v_max > 0.0 && a_max > 0.0 && yaw_rate_max > 0.0 && dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "UAV limits and dt must be positive");
  }
  if (!(pose_noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "pose noise sigma must be >= 0");
  if (!(reach_tolerance > 0.0 && yaw_tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "reach tolerances must be positive");
  }
}

Pose body_pose(const Eigen::Vector3d& position, double yaw) {
  return Pose(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix(), position);
}

Pose UavState::true_pose() const { return body_pose(position, yaw); }
Pose UavState::estimated_pose() const { return body_pose(estimated_position, estimated_yaw); }

UavState step(const UavState& state, const Waypoint& target, const UavConfig& cfg, Rng& rng) {
  UavState next = state;
  const double dv_max = cfg.a_max * cfg.dt;

  const Eigen::Vector3d to_target = target.position - state.position;
  const double dist = to_target.norm();
  Eigen::Vector3d desired = Eigen::Vector3d::Zero();
  if (dist > 0.0) {
    // Largest speed from which stepwise braking at a_max stops within dist:
    // v^2 / (2a) + v dt / 2 = dist.
    const double half = 0.5 * cfg.a_max * cfg.dt;
    const double brake = -half + std::sqrt(half * half + 2.0 * cfg.a_max * dist);
    desired = to_target / dist * std::min(cfg.v_max, brake);
  }
  Eigen::Vector3d dv = desired - state.velocity;
  if (dv.norm() > dv_max) dv *= dv_max / dv.norm();
  next.velocity = state.velocity + dv;
  if (next.velocity.norm() > cfg.v_max) next.velocity *= cfg.v_max / next.velocity.norm();
  const Eigen::Vector3d move = next.velocity * cfg.dt;
  // Stop on the waypoint when this step would reach it and stopping is
  // within one step of acceleration.
  if (move.dot(to_target) >= dist * dist && state.velocity.norm() <= dv_max + 1e-12) {
    next.position = target.position;
    next.velocity.setZero();
  } else {
    next.position = state.position + move;
  }

  const double yaw_error = wrap_angle(target.yaw - state.yaw);
  const double max_turn = cfg.yaw_rate_max * cfg.dt;
  next.yaw = wrap_angle(state.yaw + std::clamp(yaw_error, -max_turn, max_turn));

  next.estimated_position = next.position;
  next.estimated_yaw = next.yaw;
  if (cfg.pose_noise_sigma > 0.0) {
    const double bound = 3.0 * cfg.pose_noise_sigma;
    Eigen::Vector3d noise;
    do {
      const double x = rng.normal(), y = rng.normal(), z = rng.normal();
      noise = cfg.pose_noise_sigma * Eigen::Vector3d(x, y, z);
    } while (noise.norm() > bound);
    next.estimated_position += noise;
  }
  return next;
}

bool reached(const UavState& state, const Waypoint& target, const UavConfig& cfg) {
  return (state.position - target.position).norm() <= cfg.reach_tolerance &&
         std::abs(wrap_angle(target.yaw - state.yaw)) <= cfg.yaw_tolerance;
}

}  // namespace tomap
