#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tomap/gaussian_stats.hpp"
#include "tomap/geometry.hpp"
#include "tomap/rng.hpp"

namespace tomap {

enum class TargetState { Tracking, Converging, Converged, Mapped };

std::string_view to_string(TargetState s);

struct FilterConfig {
  int m = 1000;
  /// Maximum generation depth along the camera z axis (m).
  double d_m = 50.0;
  double enlarge_frac = 0.15;
  /// Variance (m^2) of the isotropic perturbation applied before reweighting.
  double sigma_update = 0.01;
  double w1 = 0.5;
  double w2 = 0.5;
  double h_c = 3.5;
  /// When true a target starts converging once its entropy drops below h_c;
  /// when false, once it rises above.
  bool converging_below_h_c = true;
  double kld_threshold = 0.01;
  int n_kld = 40;
  /// Association gate; 0 selects m / 10.
  int n_pts = 0;
  int t_pts_missing = 300;
  double keyframe_min_translation = 1.0;
  double keyframe_min_rotation = 0.1;
  /// Boxes within this many pixels of the border are dropped.
  double edge_margin = 1.0;
  /// Frames between deregistration-only ticks when no boxes arrive.
  int timer_period = 1;

  int association_gate() const { return n_pts > 0 ? n_pts : m / 10; }
  void validate() const;
};

struct PointTarget {
  int target_id = 0;
  std::vector<WorldPoint> points;
  TargetState state = TargetState::Tracking;
  /// world_from_cam at the last generation or update.
  Pose last_keyframe;
  int kld_streak = 0;
  int miss_counter = 0;
  int update_count = 0;
  GaussianSummary summary;
  double entropy = 0.0;
  std::optional<double> last_kld;
  std::optional<std::vector<WorldPoint>> mapped_cloud;
};

/// Core of point generation: given weight columns `a` (4 x m, non-negative,
/// each column normalized by its L1 norm here) and per-point depth scales
/// (1 x m), returns C * Abar * Diag(delta) lifted to the world frame.
std::vector<WorldPoint> generate_points_from(const Eigen::Matrix<double, 4, Eigen::Dynamic>& a,
                                             const Eigen::RowVectorXd& depth_scales,
                                             const std::array<PixelPoint, 4>& corners,
                                             const Pose& world_from_cam, const CameraIntrinsics& k);

/// Samples m points inside the cone back-projected from `enlarged_box`,
/// depths uniform in (0, d_m]. Throws DegenerateBox for a zero-area box.
std::vector<WorldPoint> generate_points(const BBox& enlarged_box, const Pose& world_from_cam,
                                        const CameraIntrinsics& k, int m, double d_m, Rng& rng);

/// Gaussian/uniform mixture density of a projected point given a box.
double weight(const PixelPoint& p, const BBox& box, const FilterConfig& cfg);

struct UpdateResult {
  double kld = 0.0;
  double entropy = 0.0;
};

/// Perturb, reweight against `box`, and systematically resample the target's
/// points. Throws AllZeroWeights (target left unchanged) when no perturbed
/// point carries weight.
UpdateResult update_points(PointTarget& target, const BBox& box, const CameraFrame& frame,
                           const FilterConfig& cfg, Rng& rng);

/// Number of points with positive depth projecting inside `box`.
int count_inside(std::span<const WorldPoint> points, const BBox& box, const CameraFrame& frame);

struct BoxMatch {
  std::size_t box_index = 0;
  std::size_t target_index = 0;
  int count = 0;
};

struct AssociationResult {
  std::vector<BoxMatch> matches;
  /// Boxes left for new target generation.
  std::vector<std::size_t> unmatched_boxes;
  /// Boxes on the image edge; ignored entirely.
  std::vector<std::size_t> dropped_boxes;
};

AssociationResult associate(std::span<const BBox> boxes, std::span<const PointTarget> targets,
                            const CameraFrame& frame, const FilterConfig& cfg);

/// True iff some mapped centre lies strictly closer than `threshold`.
bool check_already_mapped(const WorldPoint& candidate_center, std::span<const WorldPoint> mapped_centers,
                          double threshold);

enum class FilterEventKind { Spawned, Converging, Converged, Deregistered };

std::string_view to_string(FilterEventKind k);

struct FilterEvent {
  FilterEventKind kind;
  int target_id = 0;
  /// For Spawned: index of the source box in the tick's input.
  std::optional<std::size_t> box_index;
};

struct TargetUpdate {
  int target_id = 0;
  double kld = 0.0;
  double entropy = 0.0;
};

struct TickResult {
  std::vector<FilterEvent> events;
  /// Targets (not Mapped) that were assigned a box this tick.
  std::vector<int> associated;
  /// (box index, target id) for every accepted assignment, Mapped included.
  std::vector<std::pair<std::size_t, int>> assignments;
  std::vector<TargetUpdate> updates;
};

/// Multi-target 3D points tracker. One mutator at a time; tick() calls
/// must arrive in frame order.
class PointsFilter {
 public:
  PointsFilter(const FilterConfig& cfg, const CameraIntrinsics& k);

  /// One tracking iteration. `boxes` are the registered tracked boxes of the
  /// frame (empty for a timer tick); `world_from_cam` is the estimated pose.
  TickResult tick(std::span<const BBox> boxes, const Pose& world_from_cam, Rng& rng);

  const std::vector<PointTarget>& targets() const { return targets_; }
  const PointTarget* find(int id) const;
  PointTarget* find(int id);

  /// Removes a non-mapped target; returns false if absent or Mapped.
  bool deregister(int id);
  /// Marks a target permanently registered with its mapped cloud.
  void mark_mapped(int id, std::vector<WorldPoint> cloud);
  std::vector<WorldPoint> mapped_centers() const;

  const FilterConfig& config() const { return cfg_; }
  const CameraIntrinsics& intrinsics() const { return k_; }

 private:
  bool is_keyframe(const PointTarget& t, const Pose& world_from_cam) const;

  FilterConfig cfg_;
  CameraIntrinsics k_;
  std::vector<PointTarget> targets_;
  int next_id_ = 1;
};

}  // namespace tomap
