#include "tomap/simulation.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "tomap/bbox_tracker.hpp"
#include "tomap/detector_sim.hpp"
#include "tomap/mission.hpp"
#include "tomap/points_filter.hpp"
#include "tomap/rng.hpp"
#include "tomap/uav_sim.hpp"

namespace tomap {

namespace {

constexpr std::uint64_t kDetectorStream = 1;
constexpr std::uint64_t kFilterStream = 2;
constexpr std::uint64_t kUavStream = 3;

// Guards against a plan whose consecutive waypoints coincide.
constexpr int kMaxArrivalsPerFrame = 16;

Eigen::Vector3d quantized(const Eigen::Vector3d& v) {
  return {quantize_pose(v.x()), quantize_pose(v.y()), quantize_pose(v.z())};
}

std::optional<int> lookup(const std::unordered_map<int, std::optional<int>>& m, int key) {
  auto it = m.find(key);
  return it == m.end() ? std::nullopt : it->second;
}

nlohmann::json opt_json(const std::optional<int>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::string_view to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::Complete: return "complete";
    case RunOutcome::SearchExhausted: return "search_exhausted";
    case RunOutcome::Timeout: return "timeout";
  }
  return "unknown";
}

nlohmann::json RunResult::summary_json() const {
  nlohmann::json mapped_j = nlohmann::json::array();
  for (const auto& m : mapped) {
    mapped_j.push_back({{"target", m.target_id},
                        {"source", opt_json(m.source)},
                        {"truth", opt_json(m.truth_id)},
                        {"t", m.t},
                        {"dense_points", m.dense.size()},
                        {"points", m.downsampled.size()}});
  }
  nlohmann::json conv_j = nlohmann::json::array();
  for (const auto& c : converged) {
    conv_j.push_back({{"target", c.target_id},
                      {"source", opt_json(c.source)},
                      {"centroid", {c.centroid.x(), c.centroid.y(), c.centroid.z()}},
                      {"t", c.t}});
  }
  return {{"outcome", to_string(outcome)},
          {"success", success},
          {"sim_time", sim_time},
          {"frames", frames},
          {"metrics", metrics_to_json(metrics)},
          {"converged", conv_j},
          {"mapped", mapped_j}};
}

nlohmann::json truth_json(const Scenario& scenario) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : scenario.world.targets) {
    out.push_back({{"id", t.id},
                   {"center", {t.center.x(), t.center.y(), t.center.z()}},
                   {"semi_axes", {t.semi_axes.x(), t.semi_axes.y(), t.semi_axes.z()}}});
  }
  return out;
}

RunResult run_simulation(const Scenario& sc, const RunOptions& options) {
  sc.validate();
  const CameraIntrinsics& k = sc.camera;
  const double dt = 1.0 / sc.frame_rate;
  UavConfig uav_cfg = sc.uav;
  uav_cfg.dt = dt;

  Rng det_rng = Rng::stream(sc.seed, kDetectorStream);
  Rng filter_rng = Rng::stream(sc.seed, kFilterStream);
  Rng uav_rng = Rng::stream(sc.seed, kUavStream);

  std::vector<int> truth_ids;
  for (const auto& t : sc.world.targets) truth_ids.push_back(t.id);

  MappingOutput last_mapping;
  MappingService mapper = [&](const PointTarget& target, std::span<const Waypoint> views) {
    last_mapping = synthesize_mapping(target, sc.world.targets, views, sc.planner, sc.mapping_samples,
                                      sc.mapping_voxel);
    return last_mapping.downsampled;
  };

  Mission mission(sc.planner, sc.mission, mapper);
  BoxTracker tracker(sc.tracker);
  PointsFilter filter(sc.filter, k);
  MetricsAccumulator metrics(truth_ids);

  UavState uav;
  const auto search = mission.search_waypoints();
  uav.position = sc.start_position.value_or(search.empty() ? Eigen::Vector3d::Zero() : search.front().position);
  uav.yaw = sc.start_yaw.value_or(search.empty() ? 0.0 : search.front().yaw);
  uav.estimated_position = uav.position;
  uav.estimated_yaw = uav.yaw;

  if (options.trace) options.trace->header(scenario_to_json(sc), truth_json(sc));

  std::unordered_map<int, std::optional<int>> track_label;
  std::unordered_map<int, std::optional<int>> target_source;
  std::set<int> truth_mapped;
  RunResult result;

  for (std::uint64_t frame = 1;; ++frame) {
    const double t = static_cast<double>(frame) * dt;
    if (t > sc.max_sim_time + 1e-9) {
      result.outcome = RunOutcome::Timeout;
      break;
    }
    const Waypoint* wp = mission.current_waypoint();
    if (!wp) {
      result.outcome = RunOutcome::SearchExhausted;
      break;
    }
    uav = step(uav, *wp, uav_cfg, uav_rng);
    result.frames = frame;
    result.sim_time = t;

    const CameraFrame true_frame(camera_pose_from_body(uav.position, uav.yaw, sc.planner.gamma), k);
    const Pose est_world_from_cam = camera_pose_from_body(uav.estimated_position, uav.estimated_yaw, sc.planner.gamma);

    TraceRecord rec;
    rec.frame = frame;
    rec.t = t;
    rec.true_position = quantized(uav.position);
    rec.true_yaw = quantize_pose(uav.yaw);
    rec.estimated_position = quantized(uav.estimated_position);
    rec.estimated_yaw = quantize_pose(uav.estimated_yaw);

    std::vector<Detection> dets = detect(true_frame, sc.world.targets, sc.detector, det_rng, frame);
    for (const Detection& d : dets) rec.detections.push_back({quantize(d.bbox), quantize_stat(d.score), d.truth_id});
    for (const TargetModel& target : sc.world.targets) {
      if (auto box = projected_bbox(target, true_frame)) {
        rec.ground_truth.push_back({target.id, quantize(*box), box->touches_edge(k, sc.metrics_edge_margin)});
      }
    }

    const std::vector<TrackedBox> registered = tracker.step(dets);
    std::set<int> live;
    for (const TrackedBox& tb : tracker.tracks()) {
      live.insert(tb.track_id);
      if (tb.detection_index) track_label[tb.track_id] = dets[*tb.detection_index].truth_id;
    }
    std::erase_if(track_label, [&](const auto& kv) { return !live.count(kv.first); });
    std::vector<BBox> boxes;
    for (const TrackedBox& tb : registered) {
      boxes.push_back(tb.bbox);
      rec.tracks.push_back({tb.track_id, quantize(tb.bbox), lookup(track_label, tb.track_id)});
    }

    TickResult tick;
    if (!boxes.empty() || frame % static_cast<std::uint64_t>(sc.filter.timer_period) == 0) {
      tick = filter.tick(boxes, est_world_from_cam, filter_rng);
    }
    for (const FilterEvent& e : tick.events) {
      if (e.kind == FilterEventKind::Spawned && e.box_index) {
        target_source[e.target_id] = lookup(track_label, registered[*e.box_index].track_id);
      }
      const auto source = lookup(target_source, e.target_id);
      rec.events.push_back({std::string(to_string(e.kind)), e.target_id, source, std::nullopt, std::nullopt});
      if (e.kind == FilterEventKind::Converged) {
        if (const PointTarget* pt = filter.find(e.target_id)) {
          result.converged.push_back({e.target_id, source, pt->summary.mean, t});
        }
      }
    }

    mission.on_perception(tick, filter, uav.estimated_position);
    for (int i = 0; i < kMaxArrivalsPerFrame; ++i) {
      const Waypoint* next = mission.current_waypoint();
      if (!next || !reached(uav, *next, uav_cfg)) break;
      mission.on_waypoint_reached(filter, uav.estimated_position);
    }

    for (const MissionEvent& e : mission.take_events()) {
      const auto source = lookup(target_source, e.target_id);
      EventRecord er{std::string(to_string(e.kind)), e.target_id, source, std::nullopt, std::nullopt};
      if (e.kind == MissionEventKind::ModeChanged) {
        er.from = e.from;
        er.to = e.to;
      }
      rec.events.push_back(std::move(er));
      if (e.kind == MissionEventKind::TargetMapped) {
        MappedTarget m{e.target_id, source, last_mapping.truth_id, t, {}, {}};
        if (options.keep_clouds) {
          m.dense = last_mapping.dense;
          m.downsampled = last_mapping.downsampled;
        }
        if (last_mapping.truth_id) truth_mapped.insert(*last_mapping.truth_id);
        result.mapped.push_back(std::move(m));
      }
    }

    for (const PointTarget& pt : filter.targets()) {
      TargetRecord tr;
      tr.target_id = pt.target_id;
      tr.state = pt.state;
      tr.mean = quantized(pt.summary.mean);
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) tr.covariance(r, c) = quantize_stat(pt.summary.covariance(r, c));
      }
      tr.entropy = quantize_stat(pt.entropy);
      if (pt.last_kld) tr.kld = quantize_stat(*pt.last_kld);
      tr.kld_streak = pt.kld_streak;
      tr.miss_counter = pt.miss_counter;
      tr.source = lookup(target_source, pt.target_id);
      rec.targets.push_back(std::move(tr));
    }
    rec.mode = mission.state().mode;
    rec.active_target = mission.state().active_target;

    metrics.add(rec);
    if (options.trace) options.trace->frame(rec);
    if (options.on_frame) options.on_frame(rec);

    if (!truth_ids.empty() && truth_mapped.size() == truth_ids.size()) {
      result.outcome = RunOutcome::Complete;
      break;
    }
  }

  result.success = truth_mapped.size() == truth_ids.size();
  result.metrics = metrics.finish();
  if (options.trace) options.trace->summary(result.summary_json());
  return result;
}

}  // namespace tomap
