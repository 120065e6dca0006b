#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tomap/geometry.hpp"
#include "tomap/rng.hpp"

namespace tomap {

/// Ground-truth target: an ellipsoid with axis-aligned semi-axes.
struct TargetModel {
  int id = 0;
  WorldPoint center = WorldPoint::Zero();
  Eigen::Vector3d semi_axes = Eigen::Vector3d::Ones();
  /// Dense sample of the surface; its projection defines the detected box.
  std::vector<WorldPoint> surface_points;

  static TargetModel ellipsoid(int id, const WorldPoint& center, const Eigen::Vector3d& semi_axes,
                               std::size_t surface_samples = 800);

  /// Deterministic near-uniform (Fibonacci lattice) surface sample.
  std::vector<WorldPoint> sample_surface(std::size_t n) const;
  bool contains(const WorldPoint& p, double tol = 1e-9) const;
  Eigen::Vector3d outward_normal(const WorldPoint& surface_point) const;
  double bounding_radius() const { return semi_axes.maxCoeff(); }
  double bottom_z() const { return center.z() - semi_axes.z(); }
};

struct Detection {
  BBox bbox;
  double score = 1.0;
  std::uint64_t frame_id = 0;
  /// Simulation annotation: id of the target that produced the box, or
  /// nullopt for an injected false positive. The perception pipeline never
  /// reads it; only metrics do.
  std::optional<int> truth_id;
};

struct DetectorConfig {
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  double pixel_noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double fp_min_size = 8.0;

  void validate() const;
};

/// Tight box around the projected surface samples, or nullopt unless every
/// sample has positive depth and lies inside the image.
std::optional<BBox> projected_bbox(const TargetModel& target, const CameraFrame& frame);

/// Simulated detector. Consumes `rng`; output is a pure function of the
/// inputs and the rng state.
std::vector<Detection> detect(const CameraFrame& frame, std::span<const TargetModel> targets,
                              const DetectorConfig& cfg, Rng& rng, std::uint64_t frame_id = 0);

}  // namespace tomap
