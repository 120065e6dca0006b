#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tomap/bcylinder.hpp"
#include "tomap/detector_sim.hpp"
#include "tomap/points_filter.hpp"
#include "tomap/view_planner.hpp"

namespace tomap {

enum class MotionMode { Search, Estimation, Mapping };

std::string_view to_string(MotionMode m);

/// Edges of the motion state diagram, plus Search -> Mapping for targets that
/// were already converged when search resumed.
bool is_legal_transition(MotionMode from, MotionMode to);

struct MissionConfig {
  /// Converged targets closer than this to a mapped centre are not remapped.
  double dedup_distance = 3.0;
  /// Start estimation for a queued converging target as soon as mapping
  /// ends, instead of waiting for it to be re-detected during search.
  bool estimate_queued_immediately = false;

  void validate() const;
};

enum class MissionEventKind {
  ModeChanged,
  EstimationFailed,
  TargetDeregistered,
  TargetMapped,
  TargetMerged,
};

std::string_view to_string(MissionEventKind k);

struct MissionEvent {
  MissionEventKind kind;
  int target_id = 0;
  MotionMode from = MotionMode::Search;
  MotionMode to = MotionMode::Search;
};

struct MissionState {
  MotionMode mode = MotionMode::Search;
  std::optional<int> active_target;
  /// Targets awaiting service, FIFO.
  std::deque<int> queue;
  /// Index of the next lawn-mower waypoint to visit.
  std::size_t search_cursor = 0;
  std::unordered_map<int, TargetState> target_states;
  std::optional<BCylinder> active_cylinder;
};

/// Produces the downsampled mapped cloud for a target once its mapping
/// circles are flown. Stands in for the SLAM back end.
using MappingService = std::function<std::vector<WorldPoint>(const PointTarget&, std::span<const Waypoint>)>;

/// Motion-state machine. Owns the active waypoint plan; the caller flies
/// it and reports arrivals.
class Mission {
 public:
  Mission(const PlannerConfig& planner, const MissionConfig& cfg, MappingService mapper);

  /// Consumes one perception tick's events. Throws UnknownTarget for events
  /// about ids never announced by a Spawned event.
  void on_perception(const TickResult& tick, PointsFilter& filter, const Eigen::Vector3d& position);
  /// The current waypoint was reached; advances and handles plan completion.
  void on_waypoint_reached(PointsFilter& filter, const Eigen::Vector3d& position);

  /// nullptr once the plan is exhausted (only in Search at the end of the survey).
  const Waypoint* current_waypoint() const;
  bool search_exhausted() const;

  const MissionState& state() const { return state_; }
  std::span<const Waypoint> plan() const { return plan_; }
  std::size_t plan_index() const { return plan_index_; }
  std::span<const Waypoint> search_waypoints() const { return search_waypoints_; }

  std::vector<MissionEvent> take_events();

 private:
  void switch_mode(MotionMode to, std::optional<int> target);
  void leave_search(const Eigen::Vector3d& position);
  void resume_search(PointsFilter& filter, const Eigen::Vector3d& position);
  bool start_mapping(int id, PointsFilter& filter, const Eigen::Vector3d& position);
  bool start_estimation(int id, PointsFilter& filter, const Eigen::Vector3d& position);
  void drop_target(int id);
  void enqueue(int id);
  TargetState known_state(int id) const;
  void build_search_plan();

  PlannerConfig planner_;
  MissionConfig cfg_;
  MappingService mapper_;
  MissionState state_;
  std::vector<Waypoint> search_waypoints_;
  std::vector<Waypoint> plan_;
  std::size_t plan_index_ = 0;
  /// Where search was interrupted; flown to before the next lane waypoint.
  std::optional<Waypoint> resume_point_;
  bool plan_starts_with_resume_ = false;
  std::vector<MissionEvent> events_;
};

struct MappingOutput {
  /// Visible surface samples of the matched ground-truth target.
  std::vector<WorldPoint> dense;
  /// `dense` thinned so no two points are closer than the voxel size.
  std::vector<WorldPoint> downsampled;
  std::optional<int> truth_id;
};

/// Synthetic mapping: samples the surface of the ground-truth target nearest
/// to the point target's centre and keeps points that face, and fall inside
/// the vertical scan wedge of, at least one mapping view. Empty when no
/// ground-truth target lies within `match_slack` of its own bounding radius.
MappingOutput synthesize_mapping(const PointTarget& target, std::span<const TargetModel> world,
                                 std::span<const Waypoint> views, const PlannerConfig& planner,
                                 std::size_t dense_samples, double voxel, double match_slack = 3.0);

/// Greedy minimum-distance thinning on a voxel hash: keeps points in input
/// order unless a kept point lies closer than `voxel`.
std::vector<WorldPoint> downsample_min_distance(std::span<const WorldPoint> points, double voxel);

}  // namespace tomap
