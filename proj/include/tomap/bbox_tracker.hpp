#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tomap/detector_sim.hpp"
#include "tomap/geometry.hpp"

namespace tomap {

/// Intersection over union; 0 when either box is empty.
double iou(const BBox& a, const BBox& b);

struct TrackerConfig {
  int t_bbox_hit = 3;
  int t_bbox_missing = 5;
  double iou_min = 0.3;
  // Kalman noise, SORT reference values.
  double measurement_var_center = 1.0;
  double measurement_var_shape = 10.0;
  double initial_var_box = 10.0;
  double initial_var_velocity = 1e4;
  double process_var_box = 1.0;
  double process_var_velocity = 1e-2;
  double process_var_scale_velocity = 1e-4;

  void validate() const;
};

using BoxState = Eigen::Matrix<double, 7, 1>;
using BoxCovariance = Eigen::Matrix<double, 7, 7>;

/// Constant-velocity Kalman filter over (u, v, area, aspect, du, dv, darea).
class KalmanBoxFilter {
 public:
  KalmanBoxFilter(const BBox& initial, const TrackerConfig& cfg);

  void predict();
  void update(const BBox& measurement);

  BBox box() const;
  const BoxState& state() const { return x_; }
  const BoxCovariance& covariance() const { return p_; }

  static Eigen::Vector4d measurement_from_box(const BBox& b);

 private:
  BoxState x_;
  BoxCovariance p_;
  BoxCovariance f_;
  BoxCovariance q_;
  Eigen::Matrix4d r_;
};

struct TrackedBox {
  int track_id = 0;
  BBox bbox;
  BoxState state;
  BoxCovariance covariance;
  int hit_streak = 0;
  int miss_streak = 0;
  bool registered = false;
  /// Index into this frame's detection list, when one was associated.
  std::optional<std::size_t> detection_index;
};

/// SORT-style tracker with registration after t_bbox_hit consecutive hits
/// and deletion after t_bbox_missing consecutive misses. Registration is
/// sticky for the lifetime of a track.
class BoxTracker {
 public:
  explicit BoxTracker(const TrackerConfig& cfg = {});

  /// Advances one frame; returns the registered tracks' current boxes.
  std::vector<TrackedBox> step(std::span<const Detection> detections);

  /// All live tracks, registered or provisional.
  std::vector<TrackedBox> tracks() const;
  const TrackerConfig& config() const { return cfg_; }

 private:
  struct Track {
    int id;
    KalmanBoxFilter kf;
    int hit_streak = 1;
    int miss_streak = 0;
    bool registered = false;
    std::optional<std::size_t> detection_index;
  };

  TrackedBox snapshot(const Track& t) const;

  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
};

}  // namespace tomap
