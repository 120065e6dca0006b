#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tomap/geometry.hpp"
#include "tomap/rng.hpp"
#include "tomap/view_planner.hpp"

namespace tomap::test {

inline Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

inline Eigen::Vector3d random_vector(Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

/// world_from_cam of a level camera at `eye` whose optical axis passes through `target`.
inline Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d d = target - eye;
  return camera_pose_from_body(eye, std::atan2(d.y(), d.x()), std::atan2(-d.z(), d.head<2>().norm()));
}

/// Independent pinhole projection used as an oracle: x_c = R^T (x_w - t).
inline Eigen::Vector3d oracle_project(const Eigen::Vector3d& p, const Pose& world_from_cam,
                                      const CameraIntrinsics& k) {
  const Eigen::Vector3d c = world_from_cam.rotation().transpose() * (p - world_from_cam.translation());
  return {k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy, c.z()};
}

/// Random box with corners drawn inside the image, at least `min_size` on each side.
inline BBox random_box(Rng& rng, const CameraIntrinsics& k, double min_size = 10.0, double margin = 5.0) {
  const double w = rng.uniform(min_size, k.width / 3.0);
  const double h = rng.uniform(min_size, k.height / 3.0);
  const double u0 = rng.uniform(margin, k.width - margin - w);
  const double v0 = rng.uniform(margin, k.height - margin - h);
  return {u0, v0, u0 + w, v0 + h};
}

/// True when `p` (surface normal `n`) faces the camera at `w` and lies inside
/// its scan wedge: bearing within the horizontal half-FOV of the heading and
/// depression between the upper and lower scanning rays.
inline bool in_scan_wedge(const Eigen::Vector3d& p, const Eigen::Vector3d& n, const Waypoint& w,
                          const PlannerConfig& cfg, const CameraIntrinsics& k, double tol = 1e-9) {
  const Eigen::Vector3d d = w.position - p;
  if (n.dot(d) <= 0.0) return false;
  const Eigen::Vector3d to_p = -d;
  const double horizontal = to_p.head<2>().norm();
  if (horizontal > 0.0) {
    double bearing = std::atan2(to_p.y(), to_p.x()) - w.yaw;
    bearing = std::remainder(bearing, 2.0 * std::numbers::pi);
    if (std::abs(bearing) > std::atan(k.cx / k.fx) + tol) return false;
  }
  const double depression = std::atan2(d.z(), horizontal);
  return depression >= cfg.upper_ray_depression() - tol && depression <= cfg.lower_ray_depression() + tol;
}

struct SurfaceSample {
  Eigen::Vector3d point;
  Eigen::Vector3d normal;
};

/// Side wall and top disk of a vertical cylinder; the bottom disk is omitted.
inline std::vector<SurfaceSample> cylinder_wall_samples(const BCylinder& c, int rings, int per_ring, int top_rings) {
  std::vector<SurfaceSample> out;
  for (int i = 0; i <= rings; ++i) {
    const double z = c.bottom_z() + c.height * i / rings;
    for (int j = 0; j < per_ring; ++j) {
      const double a = 2.0 * std::numbers::pi * (j + 0.5 * (i % 2)) / per_ring;
      const Eigen::Vector3d n(std::cos(a), std::sin(a), 0.0);
      out.push_back({Eigen::Vector3d(c.center.x(), c.center.y(), z) + c.radius * n, n});
    }
  }
  for (int i = 0; i < top_rings; ++i) {
    const double r = c.radius * i / top_rings;
    const int count = i == 0 ? 1 : per_ring;
    for (int j = 0; j < count; ++j) {
      const double a = 2.0 * std::numbers::pi * j / count;
      out.push_back({Eigen::Vector3d(c.center.x() + r * std::cos(a), c.center.y() + r * std::sin(a), c.top_z()),
                     Eigen::Vector3d::UnitZ()});
    }
  }
  return out;
}

/// Number of samples outside every waypoint's scan wedge.
inline int uncovered_count(std::span<const SurfaceSample> samples, std::span<const Waypoint> waypoints,
                           const PlannerConfig& cfg, const CameraIntrinsics& k) {
  int uncovered = 0;
  for (const SurfaceSample& s : samples) {
    bool hit = false;
    for (const Waypoint& w : waypoints) {
      if (in_scan_wedge(s.point, s.normal, w, cfg, k)) {
        hit = true;
        break;
      }
    }
    uncovered += !hit;
  }
  return uncovered;
}

}  // namespace tomap::test
