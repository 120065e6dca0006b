#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tomap/metrics.hpp"
#include "tomap/scenario.hpp"
#include "tomap/trace.hpp"

namespace tomap {

enum class RunOutcome {
  /// Every ground-truth target was mapped.
  Complete,
  /// The survey finished; successful only if nothing was left unmapped.
  SearchExhausted,
  /// max_sim_time elapsed.
  Timeout,
};

std::string_view to_string(RunOutcome o);

struct MappedTarget {
  int target_id = 0;
  /// Ground-truth id of the detections that spawned the point target.
  std::optional<int> source;
  /// Ground-truth target the synthetic mapper matched.
  std::optional<int> truth_id;
  double t = 0.0;
  std::vector<WorldPoint> dense;
  std::vector<WorldPoint> downsampled;
};

struct ConvergedTarget {
  int target_id = 0;
  std::optional<int> source;
  WorldPoint centroid = WorldPoint::Zero();
  double t = 0.0;
};

struct RunResult {
  RunOutcome outcome = RunOutcome::Timeout;
  /// All ground-truth targets mapped (vacuously true with none).
  bool success = false;
  double sim_time = 0.0;
  std::uint64_t frames = 0;
  StageMetrics metrics;
  std::vector<MappedTarget> mapped;
  std::vector<ConvergedTarget> converged;

  nlohmann::json summary_json() const;
};

struct RunOptions {
  TraceWriter* trace = nullptr;
  /// Drop dense clouds from the result to save memory.
  bool keep_clouds = true;
  std::function<void(const TraceRecord&)> on_frame;
};

/// Runs the closed loop at the scenario frame rate until every target is
/// mapped, the survey ends, or max_sim_time elapses. Per frame: UAV step,
/// detection from the true pose, box tracking, points filter tick with the
/// estimated pose, mission update, trace record.
RunResult run_simulation(const Scenario& scenario, const RunOptions& options = {});

/// Ground-truth list written into the trace header.
nlohmann::json truth_json(const Scenario& scenario);

}  // namespace tomap
