#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tomap/bbox_tracker.hpp"
#include "tomap/detector_sim.hpp"
#include "tomap/geometry.hpp"
#include "tomap/mission.hpp"
#include "tomap/points_filter.hpp"
#include "tomap/uav_sim.hpp"
#include "tomap/view_planner.hpp"

namespace tomap {

struct WorldConfig {
  std::vector<Eigen::Vector2d> survey_polygon;
  double ground_z = 0.0;
  std::vector<TargetModel> targets;
};

/// Everything one simulated mission needs. Loaded from JSON; see
/// scenarios/*.json for the schema.
struct Scenario {
  std::uint64_t seed = 0;
  double frame_rate = 10.0;
  double max_sim_time = 3600.0;
  CameraIntrinsics camera;
  WorldConfig world;
  DetectorConfig detector;
  TrackerConfig tracker;
  FilterConfig filter;
  PlannerConfig planner;
  UavConfig uav;
  MissionConfig mission;
  /// Surface samples per target used by the detector.
  std::size_t surface_samples = 800;
  /// Surface samples per target for the synthetic dense map.
  std::size_t mapping_samples = 20000;
  double mapping_voxel = 0.1;
  /// Ground-truth boxes this close to the border are excluded from detection metrics.
  double metrics_edge_margin = 2.0;
  /// Defaults to the first search waypoint.
  std::optional<Eigen::Vector3d> start_position;
  std::optional<double> start_yaw;

  /// Throws ScenarioInvalid naming the first violated constraint.
  void validate() const;
};

/// Parses and validates; unknown keys are rejected with ScenarioInvalid.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const Scenario& s);

}  // namespace tomap
