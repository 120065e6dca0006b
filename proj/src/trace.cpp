#include "tomap/trace.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "tomap/error.hpp"

namespace tomap {

using nlohmann::json;

namespace {

constexpr double kPixelStep = 1e-3;
constexpr double kPoseStep = 1e-4;
constexpr double kStatStep = 1e-6;

// JSON has no infinities; they travel as strings.
json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw Error(ErrorCode::ScenarioInvalid, "bad number '" + s + "' in trace");
  }
  return j.get<double>();
}

json box_json(const BBox& b) { return json::array({b.u_min, b.v_min, b.u_max, b.v_max}); }
BBox box_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}
json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }
Eigen::Vector3d vec_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }
std::optional<int> opt_int_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

TargetState state_from(const std::string& s) {
  for (auto st : {TargetState::Tracking, TargetState::Converging, TargetState::Converged, TargetState::Mapped}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::ScenarioInvalid, "unknown target state '" + s + "' in trace");
}

MotionMode mode_from(const std::string& s) {
  for (auto m : {MotionMode::Search, MotionMode::Estimation, MotionMode::Mapping}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorCode::ScenarioInvalid, "unknown mode '" + s + "' in trace");
}

}  // namespace

double quantize(double x, double step) {
  if (!std::isfinite(x)) return x;
  return std::round(x / step) * step;
}

BBox quantize(const BBox& b) {
  return {quantize(b.u_min, kPixelStep), quantize(b.v_min, kPixelStep), quantize(b.u_max, kPixelStep),
          quantize(b.v_max, kPixelStep)};
}

json to_json(const TraceRecord& r) {
  json dets = json::array();
  for (const auto& d : r.detections) {
    dets.push_back({{"bbox", box_json(d.bbox)}, {"score", d.score}, {"truth", opt_int(d.truth_id)}});
  }
  json gt = json::array();
  for (const auto& g : r.ground_truth) {
    gt.push_back({{"id", g.truth_id}, {"bbox", box_json(g.bbox)}, {"near_edge", g.near_edge}});
  }
  json tracks = json::array();
  for (const auto& t : r.tracks) {
    tracks.push_back({{"id", t.track_id}, {"bbox", box_json(t.bbox)}, {"truth", opt_int(t.truth_id)}});
  }
  json targets = json::array();
  for (const auto& t : r.targets) {
    const auto& c = t.covariance;
    targets.push_back({{"id", t.target_id},
                       {"state", to_string(t.state)},
                       {"mean", vec_json(t.mean)},
                       {"cov", json::array({c(0, 0), c(0, 1), c(0, 2), c(1, 1), c(1, 2), c(2, 2)})},
                       {"entropy", number(t.entropy)},
                       {"kld", t.kld ? number(*t.kld) : json(nullptr)},
                       {"kld_streak", t.kld_streak},
                       {"miss", t.miss_counter},
                       {"source", opt_int(t.source)}});
  }
  json events = json::array();
  for (const auto& e : r.events) {
    json ej = {{"kind", e.kind}, {"target", e.target_id}, {"source", opt_int(e.source)}};
    if (e.from) ej["from"] = to_string(*e.from);
    if (e.to) ej["to"] = to_string(*e.to);
    events.push_back(std::move(ej));
  }
  return {{"type", "frame"},
          {"frame", r.frame},
          {"t", r.t},
          {"true_position", vec_json(r.true_position)},
          {"true_yaw", r.true_yaw},
          {"estimated_position", vec_json(r.estimated_position)},
          {"estimated_yaw", r.estimated_yaw},
          {"detections", dets},
          {"ground_truth", gt},
          {"tracks", tracks},
          {"targets", targets},
          {"mode", to_string(r.mode)},
          {"active_target", opt_int(r.active_target)},
          {"events", events}};
}

TraceRecord trace_record_from_json(const json& j) {
  TraceRecord r;
  try {
    r.frame = j.at("frame").get<std::uint64_t>();
    r.t = j.at("t").get<double>();
    r.true_position = vec_from(j.at("true_position"));
    r.true_yaw = j.at("true_yaw").get<double>();
    r.estimated_position = vec_from(j.at("estimated_position"));
    r.estimated_yaw = j.at("estimated_yaw").get<double>();
    for (const auto& d : j.at("detections")) {
      r.detections.push_back({box_from(d.at("bbox")), d.at("score").get<double>(), opt_int_from(d.at("truth"))});
    }
    for (const auto& g : j.at("ground_truth")) {
      r.ground_truth.push_back({g.at("id").get<int>(), box_from(g.at("bbox")), g.at("near_edge").get<bool>()});
    }
    for (const auto& t : j.at("tracks")) {
      r.tracks.push_back({t.at("id").get<int>(), box_from(t.at("bbox")), opt_int_from(t.at("truth"))});
    }
    for (const auto& t : j.at("targets")) {
      TargetRecord tr;
      tr.target_id = t.at("id").get<int>();
      tr.state = state_from(t.at("state").get<std::string>());
      tr.mean = vec_from(t.at("mean"));
      const auto& c = t.at("cov");
      tr.covariance << c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>(), c.at(1).get<double>(),
          c.at(3).get<double>(), c.at(4).get<double>(), c.at(2).get<double>(), c.at(4).get<double>(),
          c.at(5).get<double>();
      tr.entropy = number_from(t.at("entropy"));
      if (!t.at("kld").is_null()) tr.kld = number_from(t.at("kld"));
      tr.kld_streak = t.at("kld_streak").get<int>();
      tr.miss_counter = t.at("miss").get<int>();
      tr.source = opt_int_from(t.at("source"));
      r.targets.push_back(tr);
    }
    r.mode = mode_from(j.at("mode").get<std::string>());
    r.active_target = opt_int_from(j.at("active_target"));
    for (const auto& e : j.at("events")) {
      EventRecord er;
      er.kind = e.at("kind").get<std::string>();
      er.target_id = e.at("target").get<int>();
      er.source = opt_int_from(e.at("source"));
      if (e.contains("from")) er.from = mode_from(e.at("from").get<std::string>());
      if (e.contains("to")) er.to = mode_from(e.at("to").get<std::string>());
      r.events.push_back(std::move(er));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ScenarioInvalid, std::string("malformed trace frame: ") + e.what());
  }
  return r;
}

void TraceWriter::header(const json& scenario, const json& truth) {
  out_ << json{{"type", "header"}, {"scenario", scenario}, {"truth", truth}}.dump() << '\n';
}

void TraceWriter::frame(const TraceRecord& r) { out_ << to_json(r).dump() << '\n'; }

void TraceWriter::summary(const json& s) {
  json j = s;
  j["type"] = "summary";
  out_ << j.dump() << '\n';
}

LoadedTrace read_trace(std::istream& in) {
  LoadedTrace out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ScenarioInvalid, "trace line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      out.header = std::move(j);
    } else if (type == "frame") {
      out.frames.push_back(trace_record_from_json(j));
    } else if (type == "summary") {
      out.summary = std::move(j);
    } else {
      throw Error(ErrorCode::ScenarioInvalid, "trace line " + std::to_string(lineno) + ": unknown record type");
    }
  }
  if (out.header.is_null()) throw Error(ErrorCode::ScenarioInvalid, "trace has no header record");
  return out;
}

double quantize_pose(double x) { return quantize(x, kPoseStep); }
double quantize_stat(double x) { return quantize(x, kStatStep); }

}  // namespace tomap
