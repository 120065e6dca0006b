#include "tomap/scenario.hpp"

#include <fstream>
#include <set>

#include "tomap/error.hpp"

namespace tomap {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ScenarioInvalid, msg); }

// Reads fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      invalid(path_ + "." + key + ": " + e.what());
    }
  }

  void get_deg(const char* key, double& out_rad) {
    double deg = rad_to_deg(out_rad);
    get(key, deg);
    out_rad = deg_to_rad(deg);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) invalid(path_ + ": unknown key '" + k + "'");
    }
  }

  const std::string& path() const { return path_; }

 private:
  static double rad_to_deg(double r) { return r * 180.0 / kPi; }
  static constexpr double kPi = 3.14159265358979323846;

  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

Eigen::Vector3d vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) invalid(path + ": expected [x, y, z]");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) invalid(path + ": expected numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

bool inside_polygon(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      in = !in;
    }
  }
  return in;
}

void rethrow_as_invalid(const char* section, const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    invalid(std::string(section) + ": " + e.what());
  }
}

}  // namespace

void Scenario::validate() const {
  if (!(frame_rate > 0.0)) invalid("frame_rate must be positive");
  if (!(max_sim_time > 0.0)) invalid("max_sim_time must be positive");
  if (surface_samples < 50) invalid("world.surface_samples must be at least 50");
  if (mapping_samples < 50) invalid("mission.mapping_samples must be at least 50");
  if (!(mapping_voxel > 0.0)) invalid("mission.mapping_voxel must be positive");
  if (!(metrics_edge_margin >= 0.0)) invalid("mission.metrics_edge_margin must be non-negative");
  rethrow_as_invalid("camera", [&] { camera.validate(); });
  rethrow_as_invalid("detector", [&] { detector.validate(); });
  rethrow_as_invalid("tracker", [&] { tracker.validate(); });
  rethrow_as_invalid("filter", [&] { filter.validate(); });
  rethrow_as_invalid("planner", [&] { planner.validate(); });
  rethrow_as_invalid("uav", [&] { uav.validate(); });
  rethrow_as_invalid("mission", [&] { mission.validate(); });
  if (world.survey_polygon.size() < 3) invalid("world.survey_polygon needs at least 3 vertices");

  std::set<int> ids;
  for (const auto& t : world.targets) {
    if (t.id < 1) invalid("world.targets: ids must be positive");
    if (!ids.insert(t.id).second) invalid("world.targets: duplicate id " + std::to_string(t.id));
    if ((t.semi_axes.array() <= 0.0).any()) invalid("world.targets: semi_axes must be positive");
    if (!inside_polygon(world.survey_polygon, t.center.head<2>())) {
      invalid("world.targets: target " + std::to_string(t.id) + " lies outside the survey polygon");
    }
    if (t.center.z() + t.semi_axes.z() >= planner.search_altitude) {
      invalid("world.targets: target " + std::to_string(t.id) + " reaches the search altitude");
    }
  }
}

Scenario parse_scenario(const json& j) {
  Scenario s;
  ObjectReader root(j, "scenario");
  root.get("seed", s.seed);
  root.get("frame_rate", s.frame_rate);
  root.get("max_sim_time", s.max_sim_time);

  if (const json* c = root.child("camera")) {
    ObjectReader r(*c, "camera");
    r.get("fx", s.camera.fx);
    r.get("fy", s.camera.fy);
    r.get("cx", s.camera.cx);
    r.get("cy", s.camera.cy);
    r.get("width", s.camera.width);
    r.get("height", s.camera.height);
    r.finish();
  }

  const json* w = root.child("world");
  if (!w) invalid("scenario: missing 'world'");
  {
    ObjectReader r(*w, "world");
    r.get("ground_z", s.world.ground_z);
    r.get("surface_samples", s.surface_samples);
    const json* poly = r.child("survey_polygon");
    if (!poly || !poly->is_array()) invalid("world.survey_polygon: expected an array of [x, y]");
    for (const auto& p : *poly) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        invalid("world.survey_polygon: expected [x, y] pairs");
      }
      s.world.survey_polygon.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    if (const json* targets = r.child("targets")) {
      if (!targets->is_array()) invalid("world.targets: expected an array");
      std::size_t i = 0;
      for (const auto& tj : *targets) {
        const std::string path = "world.targets[" + std::to_string(i++) + "]";
        ObjectReader tr(tj, path);
        int id = 0;
        tr.get("id", id);
        const json* center = tr.child("center");
        const json* axes = tr.child("semi_axes");
        if (!center || !axes) invalid(path + ": needs center and semi_axes");
        tr.finish();
        const Eigen::Vector3d ax = vec3(*axes, path + ".semi_axes");
        if ((ax.array() <= 0.0).any()) invalid(path + ".semi_axes must be positive");
        s.world.targets.push_back(
            TargetModel::ellipsoid(id, vec3(*center, path + ".center"), ax, std::max<std::size_t>(s.surface_samples, 1)));
      }
    }
    r.finish();
  }

  if (const json* d = root.child("detector")) {
    ObjectReader r(*d, "detector");
    r.get("fp_rate", s.detector.fp_rate);
    r.get("fn_rate", s.detector.fn_rate);
    r.get("pixel_noise_sigma", s.detector.pixel_noise_sigma);
    r.get("fp_min_size", s.detector.fp_min_size);
    r.finish();
  }
  s.detector.seed = s.seed;

  if (const json* t = root.child("tracker")) {
    ObjectReader r(*t, "tracker");
    r.get("t_bbox_hit", s.tracker.t_bbox_hit);
    r.get("t_bbox_missing", s.tracker.t_bbox_missing);
    r.get("iou_min", s.tracker.iou_min);
    r.get("measurement_var_center", s.tracker.measurement_var_center);
    r.get("measurement_var_shape", s.tracker.measurement_var_shape);
    r.get("initial_var_box", s.tracker.initial_var_box);
    r.get("initial_var_velocity", s.tracker.initial_var_velocity);
    r.get("process_var_box", s.tracker.process_var_box);
    r.get("process_var_velocity", s.tracker.process_var_velocity);
    r.get("process_var_scale_velocity", s.tracker.process_var_scale_velocity);
    r.finish();
  }

  if (const json* p = root.child("planner")) {
    ObjectReader r(*p, "planner");
    r.get_deg("gamma_deg", s.planner.gamma);
    r.get_deg("gamma0_deg", s.planner.gamma0);
    r.get_deg("beta_deg", s.planner.beta);
    r.get_deg("waypoint_spacing_deg", s.planner.waypoint_spacing);
    r.get("r_m", s.planner.r_m);
    r.get("search_altitude", s.planner.search_altitude);
    r.get("lane_spacing", s.planner.lane_spacing);
    r.finish();
  }
  s.planner.survey_polygon = s.world.survey_polygon;

  bool d_m_given = false;
  if (const json* f = root.child("filter")) {
    ObjectReader r(*f, "filter");
    d_m_given = r.has("d_m");
    r.get("m", s.filter.m);
    r.get("d_m", s.filter.d_m);
    r.get("enlarge_frac", s.filter.enlarge_frac);
    r.get("sigma_update", s.filter.sigma_update);
    r.get("w1", s.filter.w1);
    r.get("w2", s.filter.w2);
    r.get("h_c", s.filter.h_c);
    r.get("converging_below_h_c", s.filter.converging_below_h_c);
    r.get("kld_threshold", s.filter.kld_threshold);
    r.get("n_kld", s.filter.n_kld);
    r.get("n_pts", s.filter.n_pts);
    r.get("t_pts_missing", s.filter.t_pts_missing);
    r.get("keyframe_min_translation", s.filter.keyframe_min_translation);
    r.get("keyframe_min_rotation", s.filter.keyframe_min_rotation);
    r.get("edge_margin", s.filter.edge_margin);
    r.get("timer_period", s.filter.timer_period);
    r.finish();
  }
  if (!d_m_given) s.filter.d_m = s.planner.search_altitude - s.world.ground_z + 20.0;

  if (const json* u = root.child("uav")) {
    ObjectReader r(*u, "uav");
    r.get("v_max", s.uav.v_max);
    r.get("a_max", s.uav.a_max);
    r.get("pose_noise_sigma", s.uav.pose_noise_sigma);
    r.get("yaw_rate_max", s.uav.yaw_rate_max);
    r.get("reach_tolerance", s.uav.reach_tolerance);
    r.get("yaw_tolerance", s.uav.yaw_tolerance);
    if (const json* start = r.child("start")) s.start_position = vec3(*start, "uav.start");
    if (r.has("start_yaw_deg")) {
      double yaw = 0.0;
      r.get_deg("start_yaw_deg", yaw);
      s.start_yaw = yaw;
    } else {
      r.child("start_yaw_deg");
    }
    r.finish();
  }
  if (s.frame_rate > 0.0) s.uav.dt = 1.0 / s.frame_rate;

  if (const json* m = root.child("mission")) {
    ObjectReader r(*m, "mission");
    r.get("dedup_distance", s.mission.dedup_distance);
    r.get("estimate_queued_immediately", s.mission.estimate_queued_immediately);
    r.get("mapping_samples", s.mapping_samples);
    r.get("mapping_voxel", s.mapping_voxel);
    r.get("metrics_edge_margin", s.metrics_edge_margin);
    r.finish();
  }
  root.finish();

  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    invalid(path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

json scenario_to_json(const Scenario& s) {
  constexpr double kDeg = 180.0 / 3.14159265358979323846;
  json poly = json::array();
  for (const auto& p : s.world.survey_polygon) poly.push_back({p.x(), p.y()});
  json targets = json::array();
  for (const auto& t : s.world.targets) {
    targets.push_back({{"id", t.id}, {"center", vec3_json(t.center)}, {"semi_axes", vec3_json(t.semi_axes)}});
  }
  json uav = {{"v_max", s.uav.v_max},
              {"a_max", s.uav.a_max},
              {"pose_noise_sigma", s.uav.pose_noise_sigma},
              {"yaw_rate_max", s.uav.yaw_rate_max},
              {"reach_tolerance", s.uav.reach_tolerance},
              {"yaw_tolerance", s.uav.yaw_tolerance}};
  if (s.start_position) uav["start"] = vec3_json(*s.start_position);
  if (s.start_yaw) uav["start_yaw_deg"] = *s.start_yaw * kDeg;

  return {
      {"seed", s.seed},
      {"frame_rate", s.frame_rate},
      {"max_sim_time", s.max_sim_time},
      {"camera",
       {{"fx", s.camera.fx},
        {"fy", s.camera.fy},
        {"cx", s.camera.cx},
        {"cy", s.camera.cy},
        {"width", s.camera.width},
        {"height", s.camera.height}}},
      {"world",
       {{"survey_polygon", poly},
        {"ground_z", s.world.ground_z},
        {"surface_samples", s.surface_samples},
        {"targets", targets}}},
      {"detector",
       {{"fp_rate", s.detector.fp_rate},
        {"fn_rate", s.detector.fn_rate},
        {"pixel_noise_sigma", s.detector.pixel_noise_sigma},
        {"fp_min_size", s.detector.fp_min_size}}},
      {"tracker",
       {{"t_bbox_hit", s.tracker.t_bbox_hit},
        {"t_bbox_missing", s.tracker.t_bbox_missing},
        {"iou_min", s.tracker.iou_min},
        {"measurement_var_center", s.tracker.measurement_var_center},
        {"measurement_var_shape", s.tracker.measurement_var_shape},
        {"initial_var_box", s.tracker.initial_var_box},
        {"initial_var_velocity", s.tracker.initial_var_velocity},
        {"process_var_box", s.tracker.process_var_box},
        {"process_var_velocity", s.tracker.process_var_velocity},
        {"process_var_scale_velocity", s.tracker.process_var_scale_velocity}}},
      {"filter",
       {{"m", s.filter.m},
        {"d_m", s.filter.d_m},
        {"enlarge_frac", s.filter.enlarge_frac},
        {"sigma_update", s.filter.sigma_update},
        {"w1", s.filter.w1},
        {"w2", s.filter.w2},
        {"h_c", s.filter.h_c},
        {"converging_below_h_c", s.filter.converging_below_h_c},
        {"kld_threshold", s.filter.kld_threshold},
        {"n_kld", s.filter.n_kld},
        {"n_pts", s.filter.n_pts},
        {"t_pts_missing", s.filter.t_pts_missing},
        {"keyframe_min_translation", s.filter.keyframe_min_translation},
        {"keyframe_min_rotation", s.filter.keyframe_min_rotation},
        {"edge_margin", s.filter.edge_margin},
        {"timer_period", s.filter.timer_period}}},
      {"planner",
       {{"gamma_deg", s.planner.gamma * kDeg},
        {"gamma0_deg", s.planner.gamma0 * kDeg},
        {"beta_deg", s.planner.beta * kDeg},
        {"waypoint_spacing_deg", s.planner.waypoint_spacing * kDeg},
        {"r_m", s.planner.r_m},
        {"search_altitude", s.planner.search_altitude},
        {"lane_spacing", s.planner.lane_spacing}}},
      {"uav", uav},
      {"mission",
       {{"dedup_distance", s.mission.dedup_distance},
        {"estimate_queued_immediately", s.mission.estimate_queued_immediately},
        {"mapping_samples", s.mapping_samples},
        {"mapping_voxel", s.mapping_voxel},
        {"metrics_edge_margin", s.metrics_edge_margin}}},
  };
}

}  // namespace tomap
