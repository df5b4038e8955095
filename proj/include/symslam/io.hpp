#pragma once

// JSON / CSV serialization: scenario configs, scenario dumps (JSON lines),
// map dumps, trajectories, object tracks, metrics and convergence logs.
//
// Angles in config files are in degrees; everything else is SI.

#include "symslam/error.hpp"
#include "symslam/hypothesis_sim.hpp"
#include "symslam/metrics.hpp"
#include "symslam/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace symslam::io {

using json = nlohmann::ordered_json;

namespace detail {

inline json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(what + ": expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json pose(const Pose& p) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r.push_back(p.rotation(i, k));
  return {{"R", r}, {"t", vec(p.translation)}};
}

inline Pose pose(const json& j) {
  Pose p;
  const auto& r = j.at("R");
  if (r.size() != 9) throw ValidationError("pose rotation needs 9 entries");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) p.rotation(i, k) = r[static_cast<std::size_t>(3 * i + k)].get<double>();
  p.translation = vec(j.at("t"), "pose translation");
  return p;
}

inline json intervals(const std::vector<FrameInterval>& v) {
  json a = json::array();
  for (const auto& i : v) a.push_back(json::array({i.first, i.last}));
  return a;
}

inline std::vector<FrameInterval> intervals(const json& j, const std::string& what) {
  std::vector<FrameInterval> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw ValidationError(what + ": expected [first, last] pairs");
    out.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  return out;
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->template get<T>();
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------- config

inline ScenarioConfig scenario_config_from_json(const json& j) {
  namespace d = detail;
  try {
    ScenarioConfig c;
    c.name = d::value_or<std::string>(j, "name", c.name);
    c.seed = d::value_or<std::uint64_t>(j, "seed", c.seed);
    c.num_hypotheses = d::value_or<int>(j, "num_hypotheses", c.num_hypotheses);
    c.fov = deg2rad(d::value_or<double>(j, "fov_deg", rad2deg(c.fov)));
    c.max_range = d::value_or<double>(j, "max_range", c.max_range);
    if (j.contains("trajectory")) {
      const auto& t = j["trajectory"];
      auto& tr = c.trajectory;
      if (t.contains("center")) tr.center = d::vec(t["center"], "trajectory.center");
      tr.radius = d::value_or<double>(t, "radius", tr.radius);
      tr.height = d::value_or<double>(t, "height", tr.height);
      tr.frame_count = d::value_or<int>(t, "frame_count", tr.frame_count);
      tr.start_azimuth = deg2rad(d::value_or<double>(t, "start_azimuth_deg", rad2deg(tr.start_azimuth)));
      tr.sweep = deg2rad(d::value_or<double>(t, "sweep_deg", rad2deg(tr.sweep)));
      if (t.contains("waypoints")) {
        for (const auto& w : t["waypoints"]) tr.waypoints.push_back(d::vec(w, "trajectory.waypoints"));
      }
      if (t.contains("featureless_arcs")) tr.featureless_arcs = d::intervals(t["featureless_arcs"], "featureless_arcs");
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      auto& nm = c.noise;
      nm.hyp_trans_sigma = d::value_or<double>(n, "hyp_trans_sigma", nm.hyp_trans_sigma);
      nm.hyp_rot_sigma = deg2rad(d::value_or<double>(n, "hyp_rot_sigma_deg", rad2deg(nm.hyp_rot_sigma)));
      nm.odom_trans_sigma = d::value_or<double>(n, "odom_trans_sigma", nm.odom_trans_sigma);
      nm.odom_rot_sigma = deg2rad(d::value_or<double>(n, "odom_rot_sigma_deg", rad2deg(nm.odom_rot_sigma)));
      nm.featureless_inflation = d::value_or<double>(n, "featureless_inflation", nm.featureless_inflation);
      nm.occlusion_bias = d::value_or<double>(n, "occlusion_bias", nm.occlusion_bias);
    }
    if (j.contains("occlusion_arcs")) c.occlusion_arcs = d::intervals(j["occlusion_arcs"], "occlusion_arcs");
    for (const auto& o : j.value("objects", json::array())) {
      SceneObject so;
      so.id = o.at("id").get<int>();
      so.class_label = o.at("class").get<std::string>();
      so.true_pose.translation = d::vec(o.at("position"), "object position");
      if (o.contains("rotation_vector_deg"))
        so.true_pose.rotation = so3_exp(deg2rad(1.0) * d::vec(o["rotation_vector_deg"], "rotation_vector_deg"));
      const auto& s = o.at("symmetry");
      so.symmetry.type = symmetry_type_from_string(s.at("type").get<std::string>());
      so.symmetry.fold = d::value_or<int>(s, "fold", 0);
      if (o.contains("symmetry_axis_body")) so.symmetry_axis_body = d::vec(o["symmetry_axis_body"], "symmetry_axis_body");
      c.objects.push_back(so);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario config: ") + e.what());
  }
}

inline json to_json(const ScenarioConfig& c) {
  namespace d = detail;
  json objects = json::array();
  for (const auto& o : c.objects) {
    json s = {{"type", to_string(o.symmetry.type)}};
    if (o.symmetry.type == SymmetryType::discrete) s["fold"] = o.symmetry.fold;
    objects.push_back({{"id", o.id},
                       {"class", o.class_label},
                       {"position", d::vec(o.true_pose.translation)},
                       {"rotation_vector_deg", d::vec(rad2deg(1.0) * so3_log(o.true_pose.rotation))},
                       {"symmetry", s},
                       {"symmetry_axis_body", d::vec(o.symmetry_axis_body)}});
  }
  json traj = {{"center", d::vec(c.trajectory.center)},
               {"radius", c.trajectory.radius},
               {"height", c.trajectory.height},
               {"frame_count", c.trajectory.frame_count},
               {"start_azimuth_deg", rad2deg(c.trajectory.start_azimuth)},
               {"sweep_deg", rad2deg(c.trajectory.sweep)},
               {"featureless_arcs", d::intervals(c.trajectory.featureless_arcs)}};
  if (!c.trajectory.waypoints.empty()) {
    json w = json::array();
    for (const auto& p : c.trajectory.waypoints) w.push_back(d::vec(p));
    traj["waypoints"] = w;
  }
  return {{"name", c.name},
          {"seed", c.seed},
          {"num_hypotheses", c.num_hypotheses},
          {"fov_deg", rad2deg(c.fov)},
          {"max_range", c.max_range},
          {"trajectory", traj},
          {"noise",
           {{"hyp_trans_sigma", c.noise.hyp_trans_sigma},
            {"hyp_rot_sigma_deg", rad2deg(c.noise.hyp_rot_sigma)},
            {"odom_trans_sigma", c.noise.odom_trans_sigma},
            {"odom_rot_sigma_deg", rad2deg(c.noise.odom_rot_sigma)},
            {"featureless_inflation", c.noise.featureless_inflation},
            {"occlusion_bias", c.noise.occlusion_bias}}},
          {"occlusion_arcs", d::intervals(c.occlusion_arcs)},
          {"objects", objects}};
}

/// Run settings that may accompany a scenario config under "run".
inline RunOptions run_options_from_json(const json& j, RunOptions o = {}) {
  namespace d = detail;
  try {
    if (j.contains("pipeline")) o.pipeline = pipeline_from_string(j["pipeline"].get<std::string>());
    if (j.contains("mode")) o.mode = run_mode_from_string(j["mode"].get<std::string>());
    o.window = d::value_or<int>(j, "window", o.window);
    o.gamma = d::value_or<double>(j, "gamma", o.gamma);
    o.failure_gap = d::value_or<int>(j, "failure_gap", o.failure_gap);
    o.failure_distance_factor = d::value_or<double>(j, "failure_distance_factor", o.failure_distance_factor);
    o.optimizer.max_iterations = d::value_or<int>(j, "max_iterations", o.optimizer.max_iterations);
    o.association.tau_t = d::value_or<double>(j, "tau_t", o.association.tau_t);
    o.association.tau_axis = deg2rad(d::value_or<double>(j, "tau_axis_deg", rad2deg(o.association.tau_axis)));
    o.association.tau_rot = deg2rad(d::value_or<double>(j, "tau_rot_deg", rad2deg(o.association.tau_rot)));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run options: ") + e.what());
  }
  o.validate();
  return o;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------- scenario dump

inline json to_json(const DetectionFrame& f) {
  namespace d = detail;
  json dets = json::array();
  for (const auto& h : f.detections) {
    json hyps = json::array();
    for (const auto& p : h.hypotheses) hyps.push_back(d::pose(p));
    dets.push_back({{"object_id_truth", h.object_id_truth}, {"class", h.class_label}, {"hypotheses", hyps}});
  }
  json j = {{"type", "frame"},
            {"frame_id", f.frame_id},
            {"true_camera_pose", d::pose(f.true_camera_pose)},
            {"featureless", f.featureless},
            {"occluded", f.occluded}};
  if (f.odometry) {
    j["odometry"] = {{"relative", d::pose(f.odometry->relative)},
                     {"trans_sigma", f.odometry->trans_sigma},
                     {"rot_sigma", f.odometry->rot_sigma}};
  }
  j["detections"] = dets;
  return j;
}

inline DetectionFrame frame_from_json(const json& j) {
  namespace d = detail;
  DetectionFrame f;
  f.frame_id = j.at("frame_id").get<int>();
  f.true_camera_pose = d::pose(j.at("true_camera_pose"));
  f.featureless = j.at("featureless").get<bool>();
  f.occluded = j.at("occluded").get<bool>();
  if (j.contains("odometry")) {
    const auto& o = j["odometry"];
    f.odometry = OdometryMeasurement{d::pose(o.at("relative")), o.at("trans_sigma").get<double>(),
                                     o.at("rot_sigma").get<double>()};
  }
  for (const auto& dj : j.at("detections")) {
    HypothesisSet h;
    h.object_id_truth = dj.at("object_id_truth").get<int>();
    h.class_label = dj.at("class").get<std::string>();
    for (const auto& p : dj.at("hypotheses")) h.hypotheses.push_back(d::pose(p));
    f.detections.push_back(std::move(h));
  }
  return f;
}

/// One header line with the config, then one line per frame.
inline std::string scenario_dump(const Scenario& sc) {
  std::string out = json{{"type", "header"}, {"config", to_json(sc.config)}}.dump() + "\n";
  for (const auto& f : sc.frames) out += to_json(f).dump() + "\n";
  return out;
}

inline Scenario scenario_from_dump(std::istream& in) {
  Scenario sc;
  std::string line;
  bool header = false;
  int line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        sc.config = scenario_config_from_json(j.at("config"));
        header = true;
      } else if (type == "frame") {
        if (!header) throw ValidationError("scenario dump: frame before header");
        sc.frames.push_back(frame_from_json(j));
      } else {
        throw ValidationError("scenario dump: unknown record type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError("scenario dump line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!header) throw ValidationError("scenario dump has no header line");
  return sc;
}

inline Scenario read_scenario_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return scenario_from_dump(in);
}

// ---------------------------------------------------------------- outputs

inline json to_json(const ObjectMap& map) {
  namespace d = detail;
  json objs = json::array();
  for (const auto& m : map.objects) {
    json o = {{"id", m.id},
              {"class", m.class_label},
              {"symmetry_type", to_string(m.symmetry_type)},
              {"position", d::vec(m.position_w)}};
    if (m.axis_w) {
      o["axis"] = d::vec(m.axis_vector());
      o["axis_phi"] = m.axis_w->phi;
      o["axis_psi"] = m.axis_w->psi;
    }
    if (m.body_axis) o["body_axis"] = d::vec(*m.body_axis);
    if (m.rotation_w) o["rotation"] = d::pose({*m.rotation_w, m.position_w})["R"];
    if (m.symmetry_type == SymmetryType::discrete) o["angles"] = m.angles;
    o["observations"] = m.observation_log.size();
    objs.push_back(o);
  }
  return {{"objects", objs}};
}

inline json to_json(const MetricsReport& r) {
  json objs = json::object();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& [id, o] : r.objects) {
    json series = json::array();
    for (const auto& [f, e] : o.series) series.push_back(json::array({f, e}));
    objs[std::to_string(id)] = {{"rmse_t", num(o.rmse_t)},
                                {"mean_axis_error_deg", num(rad2deg(o.mean_axis_error))},
                                {"mean_rotation_error_deg", num(rad2deg(o.mean_rotation_error))},
                                {"splits", o.splits},
                                {"series", series}};
  }
  json j = {{"scenario", r.scenario},
            {"pipeline", r.pipeline},
            {"mode", r.mode},
            {"seed", r.seed},
            {"failed", r.failed}};
  if (r.failed) {
    j["failure_frame"] = r.failure_frame;
    j["failure_reason"] = r.failure_reason;
  }
  j["frame_count"] = r.frame_count;
  j["map_objects"] = r.map_objects;
  j["camera_rmse_t"] = r.failed ? json(nullptr) : num(r.camera_rmse_t);
  j["camera_series"] = r.camera_series;
  j["objects"] = objs;
  j["missing_frames"] = r.missing_frames;
  return j;
}

inline std::string trajectory_csv(const std::vector<TrajectoryEntry>& traj) {
  std::ostringstream os;
  os << "frame,tx,ty,tz,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
  for (const auto& e : traj) {
    os << e.frame_id;
    for (int i = 0; i < 3; ++i) os << "," << detail::fmt(e.pose.translation[i]);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) os << "," << detail::fmt(e.pose.rotation(i, k));
    os << "\n";
  }
  return os.str();
}

inline std::vector<std::vector<std::string>> read_csv_rows(std::istream& in, std::size_t min_cols,
                                                           const std::string& what) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < min_cols) throw ValidationError(what + ": short row '" + line + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline std::vector<TrajectoryEntry> trajectory_from_csv(std::istream& in) {
  std::vector<TrajectoryEntry> out;
  for (const auto& c : read_csv_rows(in, 13, "trajectory csv")) {
    TrajectoryEntry e;
    e.frame_id = std::stoi(c[0]);
    for (int i = 0; i < 3; ++i) e.pose.translation[i] = std::stod(c[static_cast<std::size_t>(1 + i)]);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) e.pose.rotation(i, k) = std::stod(c[static_cast<std::size_t>(4 + 3 * i + k)]);
    out.push_back(e);
  }
  return out;
}

/// Columns: frame,truth_id,map_id,type,px,py,pz,ax,ay,az,r00..r22 (empty when absent).
inline std::string tracks_csv(const std::vector<ObjectTrackEntry>& tracks) {
  std::ostringstream os;
  os << "frame,truth_id,map_id,type,px,py,pz,ax,ay,az,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
  for (const auto& t : tracks) {
    os << t.frame_id << "," << t.truth_id << "," << t.map_id << "," << to_string(t.map_type);
    for (int i = 0; i < 3; ++i) os << "," << detail::fmt(t.position[i]);
    for (int i = 0; i < 3; ++i) os << "," << (t.axis ? detail::fmt((*t.axis)[i]) : "");
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) os << "," << (t.rotation ? detail::fmt((*t.rotation)(i, k)) : "");
    os << "\n";
  }
  return os.str();
}

inline std::vector<ObjectTrackEntry> tracks_from_csv(std::istream& in) {
  std::vector<ObjectTrackEntry> out;
  for (auto c : read_csv_rows(in, 7, "object track csv")) {
    c.resize(19);
    ObjectTrackEntry t;
    t.frame_id = std::stoi(c[0]);
    t.truth_id = std::stoi(c[1]);
    t.map_id = std::stoi(c[2]);
    t.map_type = symmetry_type_from_string(c[3]);
    for (int i = 0; i < 3; ++i) t.position[i] = std::stod(c[static_cast<std::size_t>(4 + i)]);
    if (!c[7].empty()) t.axis = Vec3(std::stod(c[7]), std::stod(c[8]), std::stod(c[9]));
    if (!c[10].empty()) {
      Rotation r;
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) r(i, k) = std::stod(c[static_cast<std::size_t>(10 + 3 * i + k)]);
      t.rotation = r;
    }
    out.push_back(t);
  }
  return out;
}

inline std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
  std::ostringstream os;
  os << "frame,iteration,cost,lambda,winner_switches,gain_ratio\n";
  for (const auto& r : rows) {
    os << r.frame_id << "," << r.record.iteration << "," << detail::fmt(r.record.cost) << ","
       << detail::fmt(r.record.lambda) << "," << r.record.winner_switches << "," << detail::fmt(r.record.gain_ratio)
       << "\n";
  }
  return os.str();
}

/// Graph snapshot for debugging: nodes, edges and the current cost.
inline json to_json(const Graph& g) {
  namespace d = detail;
  json cams = json::array();
  for (const auto& [id, p] : g.state.cameras) {
    json c = d::pose(p);
    c["id"] = id;
    c["fixed"] = g.state.is_fixed(NodeKey::camera(id));
    cams.push_back(c);
  }
  json objs = json::array();
  for (const auto& [id, o] : g.state.objects) {
    json j = {{"id", id}, {"type", to_string(o.type)}, {"position", d::vec(o.translation())}};
    if (o.type != SymmetryType::asymmetric) {
      j["axis"] = d::vec(o.axis());
      j["angles"] = o.angles;
    } else {
      j["rotation"] = d::pose(o.pose)["R"];
    }
    objs.push_back(j);
  }
  json edges = json::array();
  for (const auto& e : g.edges) {
    json j = {{"kind", to_string(e.kind)}, {"camera", e.camera}};
    if (e.kind == EdgeKind::odometry) {
      j["camera_from"] = e.camera_from;
    } else {
      j["object"] = e.object;
      j["hypotheses"] = e.hypotheses.size();
      if (e.kind == EdgeKind::disc_object) j["angle_index"] = e.angle_index;
    }
    edges.push_back(j);
  }
  return {{"cameras", cams}, {"objects", objs}, {"edges", edges}, {"cost", total_cost(g)}};
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << content;
}

}  // namespace symslam::io
