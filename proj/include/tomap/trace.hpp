#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tomap/geometry.hpp"
#include "tomap/mission.hpp"
#include "tomap/points_filter.hpp"

namespace tomap {

struct DetectionRecord {
  BBox bbox;
  double score = 1.0;
  std::optional<int> truth_id;
};

/// A ground-truth target fully inside the true camera image this frame.
struct GroundTruthRecord {
  int truth_id = 0;
  BBox bbox;
  /// Within the metrics edge margin; excluded from detection scoring.
  bool near_edge = false;
};

struct TrackRecord {
  int track_id = 0;
  BBox bbox;
  std::optional<int> truth_id;
};

struct TargetRecord {
  int target_id = 0;
  TargetState state = TargetState::Tracking;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double entropy = 0.0;
  std::optional<double> kld;
  int kld_streak = 0;
  int miss_counter = 0;
  std::optional<int> source;
};

/// Filter and mission events share one record type. `kind` is one of
/// spawned, converging, converged, deregistered (filter) and mode_changed,
/// estimation_failed, target_deregistered, mapped, merged (mission).
struct EventRecord {
  std::string kind;
  int target_id = 0;
  /// Ground-truth id the target was spawned from, nullopt for a false positive.
  std::optional<int> source;
  std::optional<MotionMode> from;
  std::optional<MotionMode> to;

  bool operator==(const EventRecord&) const = default;
};

struct TraceRecord {
  std::uint64_t frame = 0;
  double t = 0.0;
  Eigen::Vector3d true_position = Eigen::Vector3d::Zero();
  double true_yaw = 0.0;
  Eigen::Vector3d estimated_position = Eigen::Vector3d::Zero();
  double estimated_yaw = 0.0;
  std::vector<DetectionRecord> detections;
  std::vector<GroundTruthRecord> ground_truth;
  std::vector<TrackRecord> tracks;
  std::vector<TargetRecord> targets;
  MotionMode mode = MotionMode::Search;
  std::optional<int> active_target;
  std::vector<EventRecord> events;
};

/// Rounds to a fixed grid so values survive a JSON round trip unchanged.
double quantize(double x, double step);
BBox quantize(const BBox& b);
double quantize_pose(double x);
double quantize_stat(double x);

nlohmann::json to_json(const TraceRecord& r);
TraceRecord trace_record_from_json(const nlohmann::json& j);

/// Writes header, frame and summary records as JSON lines.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out) : out_(out) {}
  void header(const nlohmann::json& scenario, const nlohmann::json& truth);
  void frame(const TraceRecord& r);
  void summary(const nlohmann::json& s);

 private:
  std::ostream& out_;
};

struct LoadedTrace {
  nlohmann::json header;
  std::vector<TraceRecord> frames;
  std::optional<nlohmann::json> summary;
};

/// Throws ScenarioInvalid on malformed lines.
LoadedTrace read_trace(std::istream& in);

}  // namespace tomap
