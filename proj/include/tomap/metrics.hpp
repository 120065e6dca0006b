#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "tomap/trace.hpp"

namespace tomap {

/// Counts for one stage. For event stages `tp`/`fp` count events by whether
/// their source is a real target, while `reached`/`fn` count distinct real
/// targets; for detection `reached == tp`.
struct StageScore {
  int tp = 0;
  int fp = 0;
  int reached = 0;
  int fn = 0;

  /// nullopt when the denominator is zero.
  std::optional<double> precision() const;
  std::optional<double> recall() const;
  bool operator==(const StageScore&) const = default;
};

struct StageMetrics {
  /// Worst window (lowest F1) of per-frame detection scoring; a window runs
  /// from the end of one mapping to the next converged event.
  StageScore detection;
  StageScore detection_overall;
  StageScore generation;
  StageScore converging;
  StageScore converged;
  StageScore mapped;
  /// Number of completed detection windows.
  int detection_windows = 0;

  bool operator==(const StageMetrics&) const = default;
};

/// IoU above which a detection matches a ground-truth box.
inline constexpr double kDetectionIou = 0.5;

/// Per-frame detection counts: Hungarian on IoU, matches need IoU > 0.5;
/// matches to near-edge ground truth are ignored, unmatched near-edge
/// ground truth is not a miss.
StageScore score_detections(const TraceRecord& r);

/// Streaming metrics over trace frames in order.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(std::vector<int> truth_ids);

  void add(const TraceRecord& r);
  StageMetrics finish() const;

 private:
  std::vector<int> truth_ids_;
  StageScore overall_;
  std::vector<StageScore> windows_;
  StageScore current_;
  bool collecting_ = true;
  StageScore events_[4];
  std::vector<int> reached_[4];
};

StageMetrics compute_metrics(std::span<const TraceRecord> frames, std::vector<int> truth_ids);

nlohmann::json metrics_to_json(const StageMetrics& m);

}  // namespace tomap
