#include "tomap/metrics.hpp"

#include <algorithm>

#include "tomap/bbox_tracker.hpp"
#include "tomap/hungarian.hpp"

namespace tomap {

namespace {

enum Stage { kGeneration = 0, kConverging = 1, kConverged = 2, kMapped = 3 };

std::optional<Stage> stage_of(const std::string& kind) {
  if (kind == "spawned") return kGeneration;
  if (kind == "converging") return kConverging;
  if (kind == "converged") return kConverged;
  if (kind == "mapped") return kMapped;
  return std::nullopt;
}

double f1(const StageScore& s) {
  const int denom = 2 * s.tp + s.fp + s.fn;
  return denom == 0 ? 1.0 : 2.0 * s.tp / denom;
}

void accumulate(StageScore& into, const StageScore& s) {
  into.tp += s.tp;
  into.fp += s.fp;
  into.fn += s.fn;
  into.reached += s.reached;
}

nlohmann::json score_json(const StageScore& s) {
  auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json("N/A"); };
  return {{"precision", opt(s.precision())},
          {"recall", opt(s.recall())},
          {"tp", s.tp},
          {"fp", s.fp},
          {"reached", s.reached},
          {"fn", s.fn}};
}

}  // namespace

std::optional<double> StageScore::precision() const {
  if (tp + fp == 0) return std::nullopt;
  return static_cast<double>(tp) / (tp + fp);
}

std::optional<double> StageScore::recall() const {
  if (reached + fn == 0) return std::nullopt;
  return static_cast<double>(reached) / (reached + fn);
}

StageScore score_detections(const TraceRecord& r) {
  StageScore s;
  const auto nd = static_cast<Eigen::Index>(r.detections.size());
  const auto ng = static_cast<Eigen::Index>(r.ground_truth.size());
  std::vector<bool> det_matched(r.detections.size(), false);
  std::vector<bool> gt_matched(r.ground_truth.size(), false);
  if (nd > 0 && ng > 0) {
    Eigen::MatrixXd m(nd, ng);
    for (Eigen::Index i = 0; i < nd; ++i) {
      for (Eigen::Index j = 0; j < ng; ++j) {
        m(i, j) = iou(r.detections[static_cast<std::size_t>(i)].bbox, r.ground_truth[static_cast<std::size_t>(j)].bbox);
      }
    }
    for (const auto& [i, j] : hungarian_assign(m, true).pairs) {
      if (m(i, j) <= kDetectionIou) continue;
      det_matched[static_cast<std::size_t>(i)] = true;
      gt_matched[static_cast<std::size_t>(j)] = true;
      if (!r.ground_truth[static_cast<std::size_t>(j)].near_edge) ++s.tp;
    }
  }
  for (bool matched : det_matched) {
    if (!matched) ++s.fp;
  }
  for (std::size_t j = 0; j < r.ground_truth.size(); ++j) {
    if (!gt_matched[j] && !r.ground_truth[j].near_edge) ++s.fn;
  }
  s.reached = s.tp;
  return s;
}

MetricsAccumulator::MetricsAccumulator(std::vector<int> truth_ids) : truth_ids_(std::move(truth_ids)) {}

void MetricsAccumulator::add(const TraceRecord& r) {
  const StageScore det = score_detections(r);
  accumulate(overall_, det);
  if (collecting_) accumulate(current_, det);

  for (const EventRecord& e : r.events) {
    const bool real =
        e.source && std::find(truth_ids_.begin(), truth_ids_.end(), *e.source) != truth_ids_.end();
    if (auto stage = stage_of(e.kind)) {
      StageScore& s = events_[*stage];
      if (real) {
        ++s.tp;
        auto& reached = reached_[*stage];
        if (std::find(reached.begin(), reached.end(), *e.source) == reached.end()) reached.push_back(*e.source);
      } else {
        ++s.fp;
      }
    }
    if (e.kind == "converged" && real && collecting_) {
      windows_.push_back(current_);
      current_ = {};
      collecting_ = false;
    } else if ((e.kind == "mapped" || e.kind == "merged") && !collecting_) {
      collecting_ = true;
    }
  }
}

StageMetrics MetricsAccumulator::finish() const {
  StageMetrics m;
  m.detection_overall = overall_;
  m.detection_windows = static_cast<int>(windows_.size());
  std::vector<StageScore> windows = windows_;
  if (windows.empty() && collecting_) windows.push_back(current_);
  std::optional<StageScore> worst;
  for (const StageScore& w : windows) {
    if (w.tp + w.fp + w.fn == 0) continue;
    if (!worst || f1(w) < f1(*worst)) worst = w;
  }
  if (worst) m.detection = *worst;

  StageScore* stages[4] = {&m.generation, &m.converging, &m.converged, &m.mapped};
  const int n_truth = static_cast<int>(truth_ids_.size());
  for (int k = 0; k < 4; ++k) {
    *stages[k] = events_[k];
    stages[k]->reached = static_cast<int>(reached_[k].size());
    stages[k]->fn = n_truth - stages[k]->reached;
  }
  return m;
}

StageMetrics compute_metrics(std::span<const TraceRecord> frames, std::vector<int> truth_ids) {
  MetricsAccumulator acc(std::move(truth_ids));
  for (const TraceRecord& r : frames) acc.add(r);
  return acc.finish();
}

nlohmann::json metrics_to_json(const StageMetrics& m) {
  return {{"detection", score_json(m.detection)},
          {"detection_overall", score_json(m.detection_overall)},
          {"detection_windows", m.detection_windows},
          {"generation", score_json(m.generation)},
          {"converging", score_json(m.converging)},
          {"converged", score_json(m.converged)},
          {"mapped", score_json(m.mapped)}};
}

}  // namespace tomap
