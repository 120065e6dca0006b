#include "tomap/bbox_tracker.hpp"

#include <algorithm>
#include <cmath>

#include "tomap/error.hpp"
#include "tomap/hungarian.hpp"

namespace tomap {

double iou(const BBox& a, const BBox& b) {
  if (!a.valid() || !b.valid()) return 0.0;
  const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

void TrackerConfig::validate() const {
  if (t_bbox_hit < 1 || t_bbox_missing < 1) {
    throw Error(ErrorCode::InvalidArgument, "tracker thresholds must be >= 1");
  }
  if (!(iou_min > 0.0 && iou_min < 1.0)) throw Error(ErrorCode::InvalidArgument, "iou_min must lie in (0,1)");
  for (double var : {measurement_var_center, measurement_var_shape, initial_var_box, initial_var_velocity,
                     process_var_box, process_var_velocity, process_var_scale_velocity}) {
    if (!(var > 0.0)) throw Error(ErrorCode::InvalidArgument, "tracker variances must be positive");
  }
}

Eigen::Vector4d KalmanBoxFilter::measurement_from_box(const BBox& b) {
  const double w = b.width();
  const double h = b.height();
  return {b.u_min + 0.5 * w, b.v_min + 0.5 * h, w * h, w / h};
}

KalmanBoxFilter::KalmanBoxFilter(const BBox& initial, const TrackerConfig& cfg) {
  x_.setZero();
  x_.head<4>() = measurement_from_box(initial);

  f_.setIdentity();
  f_(0, 4) = f_(1, 5) = f_(2, 6) = 1.0;

  p_.setZero();
  q_.setZero();
  for (int i = 0; i < 4; ++i) {
    p_(i, i) = cfg.initial_var_box;
    q_(i, i) = cfg.process_var_box;
  }
  for (int i = 4; i < 7; ++i) p_(i, i) = cfg.initial_var_velocity;
  q_(4, 4) = q_(5, 5) = cfg.process_var_velocity;
  q_(6, 6) = cfg.process_var_scale_velocity;

  r_ = Eigen::Vector4d(cfg.measurement_var_center, cfg.measurement_var_center, cfg.measurement_var_shape,
                       cfg.measurement_var_shape)
           .asDiagonal();
}

void KalmanBoxFilter::predict() {
  if (x_(2) + x_(6) <= 0.0) x_(6) = 0.0;
  x_ = f_ * x_;
  p_ = f_ * p_ * f_.transpose() + q_;
}

void KalmanBoxFilter::update(const BBox& measurement) {
  const Eigen::Vector4d z = measurement_from_box(measurement);
  const Eigen::Matrix4d s = p_.topLeftCorner<4, 4>() + r_;
  const Eigen::Matrix<double, 7, 4> gain = p_.leftCols<4>() * s.inverse();
  x_ += gain * (z - x_.head<4>());
  p_ = (BoxCovariance::Identity() - gain * Eigen::Matrix<double, 4, 7>::Identity()) * p_;
  p_ = 0.5 * (p_ + p_.transpose()).eval();
}

BBox KalmanBoxFilter::box() const {
  const double s = std::max(x_(2), 1e-9);
  const double r = std::max(x_(3), 1e-9);
  const double w = std::sqrt(s * r);
  const double h = s / w;
  return {x_(0) - 0.5 * w, x_(1) - 0.5 * h, x_(0) + 0.5 * w, x_(1) + 0.5 * h};
}

BoxTracker::BoxTracker(const TrackerConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

TrackedBox BoxTracker::snapshot(const Track& t) const {
  return {t.id, t.kf.box(), t.kf.state(), t.kf.covariance(), t.hit_streak, t.miss_streak, t.registered,
          t.detection_index};
}

std::vector<TrackedBox> BoxTracker::step(std::span<const Detection> detections) {
  for (Track& t : tracks_) t.kf.predict();

  const int n_det = static_cast<int>(detections.size());
  const int n_trk = static_cast<int>(tracks_.size());
  Eigen::MatrixXd score(n_det, n_trk);
  for (int i = 0; i < n_det; ++i) {
    for (int j = 0; j < n_trk; ++j) score(i, j) = iou(detections[i].bbox, tracks_[j].kf.box());
  }
  std::vector<bool> det_matched(n_det, false), trk_matched(n_trk, false);
  for (const auto& [i, j] : hungarian_assign(score, /*maximize=*/true).pairs) {
    if (score(i, j) < cfg_.iou_min) continue;
    det_matched[i] = true;
    trk_matched[j] = true;
    Track& t = tracks_[j];
    t.kf.update(detections[i].bbox);
    ++t.hit_streak;
    t.miss_streak = 0;
    t.detection_index = static_cast<std::size_t>(i);
  }
  for (int j = 0; j < n_trk; ++j) {
    if (trk_matched[j]) continue;
    ++tracks_[j].miss_streak;
    tracks_[j].hit_streak = 0;
    tracks_[j].detection_index.reset();
  }
  std::erase_if(tracks_, [&](const Track& t) { return t.miss_streak >= cfg_.t_bbox_missing; });

  for (int i = 0; i < n_det; ++i) {
    if (det_matched[i] || !detections[i].bbox.valid()) continue;
    tracks_.push_back(Track{next_id_++, KalmanBoxFilter(detections[i].bbox, cfg_), 1, 0, false,
                            static_cast<std::size_t>(i)});
  }

  std::vector<TrackedBox> out;
  for (Track& t : tracks_) {
    if (t.hit_streak >= cfg_.t_bbox_hit) t.registered = true;
    if (t.registered) out.push_back(snapshot(t));
  }
  return out;
}

std::vector<TrackedBox> BoxTracker::tracks() const {
  std::vector<TrackedBox> out;
  out.reserve(tracks_.size());
  for (const Track& t : tracks_) out.push_back(snapshot(t));
  return out;
}

}  // namespace tomap
