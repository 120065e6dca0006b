#include "tomap/mission.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "tomap/error.hpp"

namespace tomap {

std::string_view to_string(MotionMode m) {
  switch (m) {
    case MotionMode::Search: return "search";
    case MotionMode::Estimation: return "estimation";
    case MotionMode::Mapping: return "mapping";
  }
  return "unknown";
}

std::string_view to_string(MissionEventKind k) {
  switch (k) {
    case MissionEventKind::ModeChanged: return "mode_changed";
    case MissionEventKind::EstimationFailed: return "estimation_failed";
    case MissionEventKind::TargetDeregistered: return "target_deregistered";
    case MissionEventKind::TargetMapped: return "mapped";
    case MissionEventKind::TargetMerged: return "merged";
  }
  return "unknown";
}

bool is_legal_transition(MotionMode from, MotionMode to) {
  using enum MotionMode;
  return (from == Search && (to == Estimation || to == Mapping)) ||
         (from == Estimation && (to == Mapping || to == Search)) || (from == Mapping && to == Search);
}

void MissionConfig::validate() const {
  if (!(dedup_distance > 0.0)) throw Error(ErrorCode::InvalidArgument, "dedup_distance must be > 0");
}

Mission::Mission(const PlannerConfig& planner, const MissionConfig& cfg, MappingService mapper)
    : planner_(planner), cfg_(cfg), mapper_(std::move(mapper)) {
  planner_.validate();
  cfg_.validate();
  search_waypoints_ = search_plan(planner_);
  build_search_plan();
}

const Waypoint* Mission::current_waypoint() const {
  return plan_index_ < plan_.size() ? &plan_[plan_index_] : nullptr;
}

bool Mission::search_exhausted() const {
  return state_.mode == MotionMode::Search && state_.search_cursor >= search_waypoints_.size() &&
         plan_index_ >= plan_.size();
}

std::vector<MissionEvent> Mission::take_events() {
  std::vector<MissionEvent> out;
  out.swap(events_);
  return out;
}

TargetState Mission::known_state(int id) const {
  auto it = state_.target_states.find(id);
  if (it == state_.target_states.end()) {
    throw Error(ErrorCode::UnknownTarget, "event for unknown target " + std::to_string(id));
  }
  return it->second;
}

void Mission::build_search_plan() {
  plan_.clear();
  plan_index_ = 0;
  plan_starts_with_resume_ = resume_point_.has_value() && state_.search_cursor < search_waypoints_.size();
  if (plan_starts_with_resume_) plan_.push_back(*resume_point_);
  plan_.insert(plan_.end(), search_waypoints_.begin() + static_cast<std::ptrdiff_t>(state_.search_cursor),
               search_waypoints_.end());
}

void Mission::switch_mode(MotionMode to, std::optional<int> target) {
  const MotionMode from = state_.mode;
  state_.mode = to;
  state_.active_target = target;
  if (to != MotionMode::Mapping) state_.active_cylinder.reset();
  events_.push_back({MissionEventKind::ModeChanged, target.value_or(0), from, to});
}

void Mission::leave_search(const Eigen::Vector3d& position) {
  // Keep an earlier resume point if we never made it back to it.
  const bool on_resume_leg = plan_starts_with_resume_ && plan_index_ == 0;
  if (!on_resume_leg && state_.search_cursor < search_waypoints_.size()) {
    resume_point_ = Waypoint{position, search_waypoints_[state_.search_cursor].yaw};
  }
}

void Mission::enqueue(int id) {
  if (std::find(state_.queue.begin(), state_.queue.end(), id) == state_.queue.end()) state_.queue.push_back(id);
}

void Mission::drop_target(int id) {
  state_.target_states.erase(id);
  std::erase(state_.queue, id);
}

bool Mission::start_estimation(int id, PointsFilter& filter, const Eigen::Vector3d& position) {
  const PointTarget* t = filter.find(id);
  if (!t) {
    drop_target(id);
    return false;
  }
  std::vector<Waypoint> circle;
  try {
    circle = estimation_circle(t->summary.mean, planner_.search_altitude, planner_.gamma0, position,
                               planner_.waypoint_spacing);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TargetAboveSearchPlane) throw;
    filter.deregister(id);
    drop_target(id);
    events_.push_back({MissionEventKind::TargetDeregistered, id, state_.mode, state_.mode});
    return false;
  }
  std::erase(state_.queue, id);
  if (state_.mode == MotionMode::Search) leave_search(position);
  switch_mode(MotionMode::Estimation, id);
  plan_ = std::move(circle);
  plan_index_ = 0;
  return true;
}

bool Mission::start_mapping(int id, PointsFilter& filter, const Eigen::Vector3d& position) {
  const PointTarget* t = filter.find(id);
  if (!t) {
    drop_target(id);
    return false;
  }
  std::erase(state_.queue, id);
  const std::vector<WorldPoint> mapped = filter.mapped_centers();
  if (check_already_mapped(t->summary.mean, mapped, cfg_.dedup_distance)) {
    filter.mark_mapped(id, {});
    state_.target_states[id] = TargetState::Mapped;
    events_.push_back({MissionEventKind::TargetMerged, id, state_.mode, state_.mode});
    return false;
  }
  BCylinder cyl;
  try {
    cyl = fit_bcylinder(t->points);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegeneratePoints) throw;
    filter.deregister(id);
    drop_target(id);
    events_.push_back({MissionEventKind::TargetDeregistered, id, state_.mode, state_.mode});
    return false;
  }
  const Eigen::Vector2d offset = position.head<2>() - cyl.center.head<2>();
  const double start = offset.norm() > 0.0 ? std::atan2(offset.y(), offset.x()) : 0.0;
  if (state_.mode == MotionMode::Search) leave_search(position);
  switch_mode(MotionMode::Mapping, id);
  state_.active_cylinder = cyl;
  plan_ = mapping_circles(cyl, planner_, start);
  plan_index_ = 0;
  return true;
}

void Mission::resume_search(PointsFilter& filter, const Eigen::Vector3d& position) {
  if (state_.mode != MotionMode::Search) switch_mode(MotionMode::Search, std::nullopt);
  build_search_plan();

  // Converged targets outrank waiting converging ones.
  for (bool progressed = true; progressed;) {
    progressed = false;
    for (int id : std::vector<int>(state_.queue.begin(), state_.queue.end())) {
      if (state_.target_states[id] != TargetState::Converged) continue;
      if (start_mapping(id, filter, position)) return;
      progressed = true;
      break;
    }
  }
  if (cfg_.estimate_queued_immediately) {
    for (int id : std::vector<int>(state_.queue.begin(), state_.queue.end())) {
      if (state_.target_states[id] == TargetState::Converging && start_estimation(id, filter, position)) return;
    }
  }
}

void Mission::on_perception(const TickResult& tick, PointsFilter& filter, const Eigen::Vector3d& position) {
  bool active_converged = false;
  bool active_lost = false;
  for (const FilterEvent& ev : tick.events) {
    switch (ev.kind) {
      case FilterEventKind::Spawned:
        state_.target_states[ev.target_id] = TargetState::Tracking;
        break;
      case FilterEventKind::Converging:
        known_state(ev.target_id);
        state_.target_states[ev.target_id] = TargetState::Converging;
        if (state_.active_target != ev.target_id) enqueue(ev.target_id);
        break;
      case FilterEventKind::Converged:
        known_state(ev.target_id);
        state_.target_states[ev.target_id] = TargetState::Converged;
        if (state_.mode == MotionMode::Estimation && state_.active_target == ev.target_id) {
          active_converged = true;
        } else if (state_.active_target != ev.target_id) {
          enqueue(ev.target_id);
        }
        break;
      case FilterEventKind::Deregistered:
        known_state(ev.target_id);
        drop_target(ev.target_id);
        if (state_.active_target == ev.target_id) active_lost = true;
        break;
    }
  }

  if (state_.mode == MotionMode::Estimation) {
    const int id = *state_.active_target;
    if (active_lost) {
      events_.push_back({MissionEventKind::TargetDeregistered, id, state_.mode, state_.mode});
      resume_search(filter, position);
    } else if (active_converged) {
      if (!start_mapping(id, filter, position)) resume_search(filter, position);
    }
    return;
  }
  if (state_.mode != MotionMode::Search) return;

  // Search: pending converged targets first, then a converging target seen this tick.
  for (int id : std::vector<int>(state_.queue.begin(), state_.queue.end())) {
    if (state_.target_states[id] == TargetState::Converged && start_mapping(id, filter, position)) return;
  }
  for (int id : std::vector<int>(state_.queue.begin(), state_.queue.end())) {
    if (state_.target_states[id] != TargetState::Converging) continue;
    const bool seen = std::find(tick.associated.begin(), tick.associated.end(), id) != tick.associated.end();
    if ((seen || cfg_.estimate_queued_immediately) && start_estimation(id, filter, position)) return;
  }
}

void Mission::on_waypoint_reached(PointsFilter& filter, const Eigen::Vector3d& position) {
  if (plan_index_ >= plan_.size()) return;
  if (state_.mode == MotionMode::Search) {
    if (plan_starts_with_resume_ && plan_index_ == 0) {
      resume_point_.reset();
    } else {
      ++state_.search_cursor;
    }
  }
  ++plan_index_;
  if (plan_index_ < plan_.size()) return;

  switch (state_.mode) {
    case MotionMode::Search:
      break;
    case MotionMode::Estimation: {
      const int id = *state_.active_target;
      filter.deregister(id);
      drop_target(id);
      events_.push_back({MissionEventKind::EstimationFailed, id, state_.mode, state_.mode});
      resume_search(filter, position);
      break;
    }
    case MotionMode::Mapping: {
      const int id = *state_.active_target;
      const PointTarget* t = filter.find(id);
      std::vector<WorldPoint> cloud;
      if (t && mapper_) cloud = mapper_(*t, plan_);
      if (t) filter.mark_mapped(id, std::move(cloud));
      state_.target_states[id] = TargetState::Mapped;
      std::erase(state_.queue, id);
      events_.push_back({MissionEventKind::TargetMapped, id, state_.mode, state_.mode});
      resume_search(filter, position);
      break;
    }
  }
}

std::vector<WorldPoint> downsample_min_distance(std::span<const WorldPoint> points, double voxel) {
  if (!(voxel > 0.0)) return {points.begin(), points.end()};
  struct KeyHash {
    std::size_t operator()(const Eigen::Vector3i& k) const {
      return (static_cast<std::size_t>(k.x()) * 73856093u) ^ (static_cast<std::size_t>(k.y()) * 19349663u) ^
             (static_cast<std::size_t>(k.z()) * 83492791u);
    }
  };
  struct KeyEq {
    bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const { return a == b; }
  };
  std::unordered_map<Eigen::Vector3i, std::vector<std::size_t>, KeyHash, KeyEq> grid;
  std::vector<WorldPoint> kept;
  for (const WorldPoint& p : points) {
    const Eigen::Vector3i key = (p / voxel).array().floor().cast<int>();
    bool clear = true;
    for (int dx = -1; dx <= 1 && clear; ++dx) {
      for (int dy = -1; dy <= 1 && clear; ++dy) {
        for (int dz = -1; dz <= 1 && clear; ++dz) {
          auto it = grid.find(key + Eigen::Vector3i(dx, dy, dz));
          if (it == grid.end()) continue;
          for (std::size_t idx : it->second) {
            if ((kept[idx] - p).norm() < voxel) {
              clear = false;
              break;
            }
          }
        }
      }
    }
    if (!clear) continue;
    grid[key].push_back(kept.size());
    kept.push_back(p);
  }
  return kept;
}

MappingOutput synthesize_mapping(const PointTarget& target, std::span<const TargetModel> world,
                                 std::span<const Waypoint> views, const PlannerConfig& planner,
                                 std::size_t dense_samples, double voxel, double match_slack) {
  MappingOutput out;
  const TargetModel* best = nullptr;
  double best_dist = 0.0;
  for (const TargetModel& m : world) {
    const double d = (m.center - target.summary.mean).norm();
    if (d <= m.bounding_radius() + match_slack && (!best || d < best_dist)) {
      best = &m;
      best_dist = d;
    }
  }
  if (!best) return out;
  out.truth_id = best->id;

  const double upper = planner.upper_ray_depression();
  const double lower = planner.lower_ray_depression();
  for (const WorldPoint& p : best->sample_surface(dense_samples)) {
    const Eigen::Vector3d n = best->outward_normal(p);
    const bool seen = std::any_of(views.begin(), views.end(), [&](const Waypoint& w) {
      const Eigen::Vector3d to_cam = w.position - p;
      if (n.dot(to_cam) <= 0.0) return false;
      const double depression = std::atan2(to_cam.z(), to_cam.head<2>().norm());
      return depression >= upper && depression <= lower;
    });
    if (seen) out.dense.push_back(p);
  }
  out.downsampled = downsample_min_distance(out.dense, voxel);
  return out;
}

}  // namespace tomap
