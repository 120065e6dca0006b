#include "tomap/points_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tomap/error.hpp"
#include "tomap/hungarian.hpp"

namespace tomap {

std::string_view to_string(TargetState s) {
  switch (s) {
    case TargetState::Tracking: return "tracking";
    case TargetState::Converging: return "converging";
    case TargetState::Converged: return "converged";
    case TargetState::Mapped: return "mapped";
  }
  return "unknown";
}

std::string_view to_string(FilterEventKind k) {
  switch (k) {
    case FilterEventKind::Spawned: return "spawned";
    case FilterEventKind::Converging: return "converging";
    case FilterEventKind::Converged: return "converged";
    case FilterEventKind::Deregistered: return "deregistered";
  }
  return "unknown";
}

void FilterConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  require(m >= 1, "m must be >= 1");
  require(d_m > 0.0, "d_m must be > 0");
  require(enlarge_frac >= 0.0, "enlarge_frac must be >= 0");
  require(sigma_update >= 0.0, "sigma_update must be >= 0");
  require(w1 >= 0.0 && w2 >= 0.0 && std::abs(w1 + w2 - 1.0) <= 1e-12, "w1, w2 must be >= 0 and sum to 1");
  require(std::isfinite(h_c), "h_c must be finite");
  require(kld_threshold > 0.0, "kld_threshold must be > 0");
  require(n_kld >= 1, "n_kld must be >= 1");
  require(n_pts >= 0, "n_pts must be >= 0");
  require(t_pts_missing >= 1, "t_pts_missing must be >= 1");
  require(keyframe_min_translation > 0.0 && keyframe_min_rotation > 0.0, "keyframe thresholds must be > 0");
  require(edge_margin >= 0.0, "edge_margin must be >= 0");
  require(timer_period >= 1, "timer_period must be >= 1");
}

std::vector<WorldPoint> generate_points_from(const Eigen::Matrix<double, 4, Eigen::Dynamic>& a,
                                             const Eigen::RowVectorXd& depth_scales,
                                             const std::array<PixelPoint, 4>& corners,
                                             const Pose& world_from_cam, const CameraIntrinsics& k) {
  if (a.cols() != depth_scales.cols()) throw Error(ErrorCode::InvalidArgument, "weight/depth size mismatch");
  if ((a.array() < 0.0).any()) throw Error(ErrorCode::InvalidConvexWeights, "weights must be non-negative");

  const Eigen::RowVectorXd l1 = a.colwise().sum();  // entries are non-negative
  if ((l1.array() <= 0.0).any()) throw Error(ErrorCode::InvalidConvexWeights, "zero weight column");
  const Eigen::Matrix<double, 4, Eigen::Dynamic> a_bar = a * l1.cwiseInverse().asDiagonal();

  Eigen::Matrix<double, 3, 4> c;
  for (int i = 0; i < 4; ++i) c.col(i) = k.normalized(corners[i]);

  const Eigen::Matrix<double, 3, Eigen::Dynamic> p_cam = c * a_bar * depth_scales.asDiagonal();
  const Eigen::Matrix<double, 3, Eigen::Dynamic> p_world =
      (world_from_cam.rotation() * p_cam).colwise() + world_from_cam.translation();

  std::vector<WorldPoint> out(static_cast<std::size_t>(p_world.cols()));
  for (Eigen::Index j = 0; j < p_world.cols(); ++j) out[j] = p_world.col(j);
  return out;
}

std::vector<WorldPoint> generate_points(const BBox& enlarged_box, const Pose& world_from_cam,
                                        const CameraIntrinsics& k, int m, double d_m, Rng& rng) {
  if (!enlarged_box.valid()) throw Error(ErrorCode::DegenerateBox, "box has zero area");
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  Eigen::Matrix<double, 4, Eigen::Dynamic> a(4, m);
  Eigen::RowVectorXd delta(m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < 4; ++i) a(i, j) = rng.uniform_open_low();
  }
  for (int j = 0; j < m; ++j) delta(j) = d_m * rng.uniform_open_low();
  return generate_points_from(a, delta, enlarged_box.corners(), world_from_cam, k);
}

double weight(const PixelPoint& p, const BBox& box, const FilterConfig& cfg) {
  const PixelPoint c = box.center();
  const double su = 0.5 * box.width();
  const double sv = 0.5 * box.height();
  double gaussian = 0.0;
  if (su > 0.0 && sv > 0.0) {
    const double du = (p.u - c.u) / su;
    const double dv = (p.v - c.v) / sv;
    gaussian = std::exp(-0.5 * (du * du + dv * dv)) / (2.0 * std::numbers::pi * su * sv);
  }
  const double uniform = (box.area() > 0.0 && box.contains(p)) ? 1.0 / box.area() : 0.0;
  return cfg.w1 * gaussian + cfg.w2 * uniform;
}

UpdateResult update_points(PointTarget& target, const BBox& box, const CameraFrame& frame,
                           const FilterConfig& cfg, Rng& rng) {
  const std::size_t m = target.points.size();
  if (m == 0) throw Error(ErrorCode::AllZeroWeights, "target has no points");
  const double sd = std::sqrt(cfg.sigma_update);
  const CameraIntrinsics& k = frame.intrinsics();

  std::vector<WorldPoint> perturbed(m);
  std::vector<double> cumulative(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double nx = rng.normal(), ny = rng.normal(), nz = rng.normal();
    perturbed[i] = target.points[i] + sd * Eigen::Vector3d(nx, ny, nz);
    const auto proj = try_project(perturbed[i], frame.cam_from_world(), k);
    if (proj && k.in_image(proj->pixel)) total += weight(proj->pixel, box, cfg);
    cumulative[i] = total;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::AllZeroWeights, "no perturbed point carries weight");
  }

  // Systematic (low-variance) resampling.
  std::vector<WorldPoint> resampled(m);
  const double step = total / static_cast<double>(m);
  double u = rng.uniform() * step;
  std::size_t j = 0;
  for (std::size_t i = 0; i < m; ++i, u += step) {
    while (j + 1 < m && cumulative[j] <= u) ++j;
    resampled[i] = perturbed[j];
  }

  const GaussianSummary updated = GaussianSummary::from_points(resampled);
  double kld = std::numeric_limits<double>::infinity();
  try {
    kld = kl_divergence(updated, target.summary);
  } catch (const Error&) {
    // Degenerate covariance: leave kld infinite so the streak resets.
  }

  target.points = std::move(resampled);
  target.summary = updated;
  target.entropy = differential_entropy(updated);
  target.last_kld = kld;
  target.kld_streak = kld < cfg.kld_threshold ? target.kld_streak + 1 : 0;
  target.last_keyframe = frame.world_from_cam();
  ++target.update_count;
  return {kld, target.entropy};
}

int count_inside(std::span<const WorldPoint> points, const BBox& box, const CameraFrame& frame) {
  int n = 0;
  for (const WorldPoint& p : points) {
    const auto proj = try_project(p, frame.cam_from_world(), frame.intrinsics());
    if (proj && box.contains(proj->pixel)) ++n;
  }
  return n;
}

AssociationResult associate(std::span<const BBox> boxes, std::span<const PointTarget> targets,
                            const CameraFrame& frame, const FilterConfig& cfg) {
  AssociationResult out;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (!boxes[i].valid() || boxes[i].touches_edge(frame.intrinsics(), cfg.edge_margin)) {
      out.dropped_boxes.push_back(i);
    } else {
      kept.push_back(i);
    }
  }
  if (kept.empty()) return out;
  if (targets.empty()) {
    out.unmatched_boxes = kept;
    return out;
  }

  Eigen::MatrixXd counts(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(targets.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    for (std::size_t c = 0; c < targets.size(); ++c) {
      counts(r, c) = count_inside(targets[c].points, boxes[kept[r]], frame);
    }
  }
  std::vector<bool> matched(kept.size(), false);
  const int gate = cfg.association_gate();
  for (const auto& [r, c] : hungarian_assign(counts, /*maximize=*/true).pairs) {
    const int count = static_cast<int>(counts(r, c));
    if (count < gate) continue;
    matched[r] = true;
    out.matches.push_back({kept[r], static_cast<std::size_t>(c), count});
  }
  for (std::size_t r = 0; r < kept.size(); ++r) {
    if (!matched[r]) out.unmatched_boxes.push_back(kept[r]);
  }
  return out;
}

bool check_already_mapped(const WorldPoint& candidate_center, std::span<const WorldPoint> mapped_centers,
                          double threshold) {
  return std::any_of(mapped_centers.begin(), mapped_centers.end(), [&](const WorldPoint& c) {
    return (c - candidate_center).norm() < threshold;
  });
}

PointsFilter::PointsFilter(const FilterConfig& cfg, const CameraIntrinsics& k) : cfg_(cfg), k_(k) {
  cfg_.validate();
  k_.validate();
}

const PointTarget* PointsFilter::find(int id) const {
  auto it = std::find_if(targets_.begin(), targets_.end(), [&](const PointTarget& t) { return t.target_id == id; });
  return it == targets_.end() ? nullptr : &*it;
}

PointTarget* PointsFilter::find(int id) {
  return const_cast<PointTarget*>(std::as_const(*this).find(id));
}

bool PointsFilter::is_keyframe(const PointTarget& t, const Pose& world_from_cam) const {
  const double moved = (world_from_cam.translation() - t.last_keyframe.translation()).norm();
  return moved > cfg_.keyframe_min_translation ||
         rotation_angle_between(world_from_cam, t.last_keyframe) > cfg_.keyframe_min_rotation;
}

TickResult PointsFilter::tick(std::span<const BBox> boxes, const Pose& world_from_cam, Rng& rng) {
  TickResult result;
  const CameraFrame frame(world_from_cam, k_);
  const AssociationResult assoc = associate(boxes, targets_, frame, cfg_);

  std::vector<bool> touched(targets_.size(), false);
  for (const BoxMatch& match : assoc.matches) {
    PointTarget& t = targets_[match.target_index];
    result.assignments.emplace_back(match.box_index, t.target_id);
    touched[match.target_index] = true;
    if (t.state == TargetState::Mapped) continue;  // consumed, no further processing
    result.associated.push_back(t.target_id);

    if (!is_keyframe(t, world_from_cam)) {
      t.miss_counter = 0;
      continue;
    }
    try {
      const UpdateResult u = update_points(t, boxes[match.box_index], frame, cfg_, rng);
      t.miss_counter = 0;
      result.updates.push_back({t.target_id, u.kld, u.entropy});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllZeroWeights) throw;
      ++t.miss_counter;
      continue;
    }

    if (t.state == TargetState::Tracking) {
      const bool compact = cfg_.converging_below_h_c ? t.entropy < cfg_.h_c : t.entropy > cfg_.h_c;
      if (compact) {
        t.state = TargetState::Converging;
        t.kld_streak = 0;
        result.events.push_back({FilterEventKind::Converging, t.target_id, std::nullopt});
      }
    } else if (t.state == TargetState::Converging && t.kld_streak >= cfg_.n_kld) {
      t.state = TargetState::Converged;
      result.events.push_back({FilterEventKind::Converged, t.target_id, std::nullopt});
    }
  }

  for (std::size_t i = 0; i < targets_.size(); ++i) {
    PointTarget& t = targets_[i];
    const bool can_expire = t.state == TargetState::Tracking || t.state == TargetState::Converging;
    if (!touched[i] && can_expire) ++t.miss_counter;
  }
  std::erase_if(targets_, [&](const PointTarget& t) {
    const bool can_expire = t.state == TargetState::Tracking || t.state == TargetState::Converging;
    if (can_expire && t.miss_counter >= cfg_.t_pts_missing) {
      result.events.push_back({FilterEventKind::Deregistered, t.target_id, std::nullopt});
      return true;
    }
    return false;
  });

  for (std::size_t box_index : assoc.unmatched_boxes) {
    const BBox enlarged = boxes[box_index].enlarged(cfg_.enlarge_frac, k_);
    if (!enlarged.valid()) continue;
    PointTarget t;
    t.target_id = next_id_++;
    t.points = generate_points(enlarged, world_from_cam, k_, cfg_.m, cfg_.d_m, rng);
    t.last_keyframe = world_from_cam;
    t.summary = GaussianSummary::from_points(t.points);
    t.entropy = differential_entropy(t.summary);
    result.events.push_back({FilterEventKind::Spawned, t.target_id, box_index});
    targets_.push_back(std::move(t));
  }
  return result;
}

bool PointsFilter::deregister(int id) {
  auto it = std::find_if(targets_.begin(), targets_.end(), [&](const PointTarget& t) { return t.target_id == id; });
  if (it == targets_.end() || it->state == TargetState::Mapped) return false;
  targets_.erase(it);
  return true;
}

void PointsFilter::mark_mapped(int id, std::vector<WorldPoint> cloud) {
  PointTarget* t = find(id);
  if (!t) throw Error(ErrorCode::UnknownTarget, "no target with id " + std::to_string(id));
  t->state = TargetState::Mapped;
  t->mapped_cloud = std::move(cloud);
}

std::vector<WorldPoint> PointsFilter::mapped_centers() const {
  std::vector<WorldPoint> out;
  for (const PointTarget& t : targets_) {
    if (t.state == TargetState::Mapped) out.push_back(t.summary.mean);
  }
  return out;
}

}  // namespace tomap
