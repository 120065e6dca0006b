#pragma once

#include <array>
#include <optional>

#include <Eigen/Dense>

namespace tomap {

using WorldPoint = Eigen::Vector3d;

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole intrinsics. Pixel coordinates are continuous; (0,0) is the
/// top-left image corner and (width,height) the bottom-right one.
struct CameraIntrinsics {
  double fx = 400.0;
  double fy = 400.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const;

  Eigen::Matrix3d matrix() const;
  /// K^-1 [u v 1]^T; the z component is always 1.
  Eigen::Vector3d normalized(const PixelPoint& p) const {
    return {(p.u - cx) / fx, (p.v - cy) / fy, 1.0};
  }
  bool in_image(const PixelPoint& p) const {
    return p.u >= 0.0 && p.u <= width && p.v >= 0.0 && p.v <= height;
  }
};

/// Rigid transform mapping points from a source frame into a target frame:
/// x_target = rotation * x_source + translation. Named by convention as
/// `target_from_source`, e.g. `cam_from_world`.
class Pose {
 public:
  Pose() = default;
  /// Throws InvalidArgument unless rotation is orthonormal with det +1 (1e-9).
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose identity() { return {}; }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return rotation_ * x + translation_; }
  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;

  static bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

/// Angle (rad) of the relative rotation between two poses.
double rotation_angle_between(const Pose& a, const Pose& b);

/// world_from_cam for a level (hovering) body at `position` with heading
/// `yaw` (rad, about world +z) carrying a forward camera tilted down by
/// `depression` (rad below horizontal). Camera axes: x right, y down, z forward.
Pose camera_pose_from_body(const Eigen::Vector3d& position, double yaw, double depression);

/// Axis-aligned image rectangle (u_min, v_min, u_max, v_max).
struct BBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const { return width() * height(); }
  PixelPoint center() const { return {0.5 * (u_min + u_max), 0.5 * (v_min + v_max)}; }
  bool valid() const { return u_min < u_max && v_min < v_max; }
  /// Closed-box membership.
  bool contains(const PixelPoint& p) const {
    return p.u >= u_min && p.u <= u_max && p.v >= v_min && p.v <= v_max;
  }
  /// Corners in order (u_min,v_min), (u_max,v_min), (u_max,v_max), (u_min,v_max).
  std::array<PixelPoint, 4> corners() const;
  /// Grows each side by frac * extent / 2 (total growth frac), clipped to the image.
  BBox enlarged(double frac, const CameraIntrinsics& k) const;
  BBox clipped(const CameraIntrinsics& k) const;
  /// True when any side lies within `margin` pixels of the image border.
  bool touches_edge(const CameraIntrinsics& k, double margin) const;

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Projection {
  PixelPoint pixel;
  double depth = 0.0;
};

/// Projects a world point. Throws NonPositiveDepth if the point is at or
/// behind the camera plane.
Projection project(const WorldPoint& p, const Pose& cam_from_world, const CameraIntrinsics& k);

/// Non-throwing variant for hot loops; nullopt when depth <= 0.
inline std::optional<Projection> try_project(const WorldPoint& p, const Pose& cam_from_world,
                                             const CameraIntrinsics& k) {
  const Eigen::Vector3d c = cam_from_world.apply(p);
  if (!(c.z() > 0.0)) return std::nullopt;
  return Projection{{k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy}, c.z()};
}

struct Ray {
  WorldPoint origin;
  Eigen::Vector3d direction;  // unit length

  WorldPoint at(double mu) const { return origin + mu * direction; }
  double distance_to(const WorldPoint& p) const;
};

/// Ray through a pixel; origin is the camera centre in the world frame.
Ray back_project_ray(const PixelPoint& p, const Pose& world_from_cam, const CameraIntrinsics& k);

/// World point on the pixel's ray at the given camera-frame depth.
WorldPoint back_project_at_depth(const PixelPoint& p, double depth, const Pose& world_from_cam,
                                 const CameraIntrinsics& k);

/// Convex combination sum(alpha_i K^-1 l_i) of back-projected corner rays, in
/// the camera frame and un-normalized. Throws InvalidConvexWeights unless all
/// alpha_i >= 0 and they sum to 1 within 1e-12.
Eigen::Vector3d convex_ray_direction(const std::array<PixelPoint, 4>& corners,
                                     const std::array<double, 4>& alphas,
                                     const CameraIntrinsics& k);

/// A camera observation: pose plus intrinsics, with the inverse cached.
class CameraFrame {
 public:
  CameraFrame(const Pose& world_from_cam, const CameraIntrinsics& k)
      : world_from_cam_(world_from_cam), cam_from_world_(world_from_cam.inverse()), k_(k) {}

  const Pose& world_from_cam() const { return world_from_cam_; }
  const Pose& cam_from_world() const { return cam_from_world_; }
  const CameraIntrinsics& intrinsics() const { return k_; }

 private:
  Pose world_from_cam_;
  Pose cam_from_world_;
  CameraIntrinsics k_;
};

}  // namespace tomap
