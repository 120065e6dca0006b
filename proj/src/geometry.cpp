#include "tomap/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "tomap/error.hpp"

namespace tomap {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point must lie inside the image");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

bool Pose::is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation_)) throw Error(ErrorCode::InvalidArgument, "rotation is not orthonormal");
  if (!translation_.allFinite()) throw Error(ErrorCode::InvalidArgument, "translation is not finite");
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.rotation_ = rotation_ * rhs.rotation_;
  out.translation_ = rotation_ * rhs.translation_ + translation_;
  return out;
}

double rotation_angle_between(const Pose& a, const Pose& b) {
  const Eigen::Matrix3d rel = a.rotation().transpose() * b.rotation();
  const double c = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  return std::acos(c);
}

Pose camera_pose_from_body(const Eigen::Vector3d& position, double yaw, double depression) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cg = std::cos(depression), sg = std::sin(depression);
  const Eigen::Vector3d forward(cg * cy, cg * sy, -sg);
  const Eigen::Vector3d right(sy, -cy, 0.0);
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return Pose(r, position);
}

std::array<PixelPoint, 4> BBox::corners() const {
  return {PixelPoint{u_min, v_min}, PixelPoint{u_max, v_min}, PixelPoint{u_max, v_max},
          PixelPoint{u_min, v_max}};
}

BBox BBox::clipped(const CameraIntrinsics& k) const {
  return {std::clamp(u_min, 0.0, double(k.width)), std::clamp(v_min, 0.0, double(k.height)),
          std::clamp(u_max, 0.0, double(k.width)), std::clamp(v_max, 0.0, double(k.height))};
}

BBox BBox::enlarged(double frac, const CameraIntrinsics& k) const {
  const double du = 0.5 * frac * width();
  const double dv = 0.5 * frac * height();
  return BBox{u_min - du, v_min - dv, u_max + du, v_max + dv}.clipped(k);
}

bool BBox::touches_edge(const CameraIntrinsics& k, double margin) const {
  return u_min <= margin || v_min <= margin || u_max >= k.width - margin ||
         v_max >= k.height - margin;
}

Projection project(const WorldPoint& p, const Pose& cam_from_world, const CameraIntrinsics& k) {
  auto proj = try_project(p, cam_from_world, k);
  if (!proj) throw Error(ErrorCode::NonPositiveDepth, "point is at or behind the camera plane");
  return *proj;
}

double Ray::distance_to(const WorldPoint& p) const {
  const Eigen::Vector3d d = p - origin;
  return (d - d.dot(direction) * direction).norm();
}

Ray back_project_ray(const PixelPoint& p, const Pose& world_from_cam, const CameraIntrinsics& k) {
  const Eigen::Vector3d dir_cam = k.normalized(p).normalized();
  return {world_from_cam.translation(), world_from_cam.rotation() * dir_cam};
}

WorldPoint back_project_at_depth(const PixelPoint& p, double depth, const Pose& world_from_cam,
                                 const CameraIntrinsics& k) {
  return world_from_cam.apply(depth * k.normalized(p));
}

Eigen::Vector3d convex_ray_direction(const std::array<PixelPoint, 4>& corners,
                                     const std::array<double, 4>& alphas,
                                     const CameraIntrinsics& k) {
  double sum = 0.0;
  for (double a : alphas) {
    if (!(a >= 0.0)) throw Error(ErrorCode::InvalidConvexWeights, "weights must be non-negative");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorCode::InvalidConvexWeights, "weights must sum to 1");
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < 4; ++i) v += alphas[i] * k.normalized(corners[i]);
  return v;
}

}  // namespace tomap
