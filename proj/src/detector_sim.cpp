#include "tomap/detector_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tomap/error.hpp"

namespace tomap {

TargetModel TargetModel::ellipsoid(int id, const WorldPoint& center, const Eigen::Vector3d& semi_axes,
                                   std::size_t surface_samples) {
  if (!(semi_axes.array() > 0.0).all()) throw Error(ErrorCode::InvalidArgument, "semi-axes must be positive");
  TargetModel t;
  t.id = id;
  t.center = center;
  t.semi_axes = semi_axes;
  t.surface_points = t.sample_surface(surface_samples);
  return t;
}

std::vector<WorldPoint> TargetModel::sample_surface(std::size_t n) const {
  std::vector<WorldPoint> out;
  out.reserve(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    const Eigen::Vector3d unit(r * std::cos(phi), r * std::sin(phi), z);
    out.emplace_back(center + semi_axes.cwiseProduct(unit));
  }
  return out;
}

bool TargetModel::contains(const WorldPoint& p, double tol) const {
  return (p - center).cwiseQuotient(semi_axes).squaredNorm() <= 1.0 + tol;
}

Eigen::Vector3d TargetModel::outward_normal(const WorldPoint& surface_point) const {
  const Eigen::Vector3d a2 = semi_axes.cwiseProduct(semi_axes);
  return (surface_point - center).cwiseQuotient(a2).normalized();
}

void DetectorConfig::validate() const {
  if (!(fp_rate >= 0.0 && fp_rate <= 1.0) || !(fn_rate >= 0.0 && fn_rate <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "detector rates must lie in [0,1]");
  }
  if (!(pixel_noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "pixel noise sigma must be >= 0");
  if (!(fp_min_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "fp_min_size must be > 0");
}

std::optional<BBox> projected_bbox(const TargetModel& target, const CameraFrame& frame) {
  const CameraIntrinsics& k = frame.intrinsics();
  const Pose& cam_from_world = frame.cam_from_world();

  // Cheap rejection with the bounding sphere before touching every sample.
  const Eigen::Vector3d c = cam_from_world.apply(target.center);
  const double radius = target.bounding_radius();
  if (c.z() <= radius) return std::nullopt;
  const double u = k.fx * c.x() / c.z() + k.cx;
  const double v = k.fy * c.y() / c.z() + k.cy;
  const double reach = std::max(k.fx, k.fy) * radius / (c.z() - radius);
  if (u + reach < 0.0 || u - reach > k.width || v + reach < 0.0 || v - reach > k.height) {
    return std::nullopt;
  }

  BBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const WorldPoint& p : target.surface_points) {
    const auto proj = try_project(p, cam_from_world, k);
    if (!proj || !k.in_image(proj->pixel)) return std::nullopt;
    box.u_min = std::min(box.u_min, proj->pixel.u);
    box.v_min = std::min(box.v_min, proj->pixel.v);
    box.u_max = std::max(box.u_max, proj->pixel.u);
    box.v_max = std::max(box.v_max, proj->pixel.v);
  }
  if (!box.valid()) return std::nullopt;
  return box;
}

std::vector<Detection> detect(const CameraFrame& frame, std::span<const TargetModel> targets,
                              const DetectorConfig& cfg, Rng& rng, std::uint64_t frame_id) {
  const CameraIntrinsics& k = frame.intrinsics();
  std::vector<Detection> out;
  for (const TargetModel& target : targets) {
    const auto box = projected_bbox(target, frame);
    if (!box) continue;
    if (rng.bernoulli(cfg.fn_rate)) continue;
    BBox b = *box;
    if (cfg.pixel_noise_sigma > 0.0) {
      const double du0 = rng.normal(), dv0 = rng.normal(), du1 = rng.normal(), dv1 = rng.normal();
      b.u_min += cfg.pixel_noise_sigma * du0;
      b.v_min += cfg.pixel_noise_sigma * dv0;
      b.u_max += cfg.pixel_noise_sigma * du1;
      b.v_max += cfg.pixel_noise_sigma * dv1;
      if (b.u_min > b.u_max) std::swap(b.u_min, b.u_max);
      if (b.v_min > b.v_max) std::swap(b.v_min, b.v_max);
      b = b.clipped(k);
      if (!b.valid()) continue;
    }
    out.push_back({b, 1.0, frame_id, target.id});
  }
  if (rng.bernoulli(cfg.fp_rate)) {
    const double max_w = std::max(cfg.fp_min_size, 0.25 * k.width);
    const double max_h = std::max(cfg.fp_min_size, 0.25 * k.height);
    const double w = rng.uniform(cfg.fp_min_size, max_w);
    const double h = rng.uniform(cfg.fp_min_size, max_h);
    const double u0 = rng.uniform(0.0, k.width - w);
    const double v0 = rng.uniform(0.0, k.height - h);
    const double score = rng.uniform(0.3, 0.9);
    out.push_back({BBox{u0, v0, u0 + w, v0 + h}, score, frame_id, std::nullopt});
  }
  return out;
}

}  // namespace tomap
