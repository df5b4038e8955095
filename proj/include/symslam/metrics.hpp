#pragma once

// Trajectory / object error metrics and side-by-side run comparison.

#include "symslam/error.hpp"
#include "symslam/hypothesis_sim.hpp"
#include "symslam/liegroup.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace symslam {

struct TrajectoryEntry {
  int frame_id = 0;
  Pose pose;  // camera -> world
};

/// Estimate of one ground-truth object at one frame, taken from the map
/// object it is currently tracked by.
struct ObjectTrackEntry {
  int frame_id = 0;
  int truth_id = 0;
  int map_id = 0;
  SymmetryType map_type = SymmetryType::asymmetric;
  Vec3 position = Vec3::Zero();
  std::optional<Vec3> axis;          // symmetric map objects
  std::optional<Rotation> rotation;  // asymmetric map objects
};

struct ObjectMetrics {
  double rmse_t = 0.0;
  double mean_axis_error = std::numeric_limits<double>::quiet_NaN();      // rad, symmetric truth
  double mean_rotation_error = std::numeric_limits<double>::quiet_NaN();  // rad, asymmetric truth
  int splits = 0;  // distinct map objects ever associated
  std::vector<std::pair<int, double>> series;  // (frame, translation error)
};

struct MetricsReport {
  std::string scenario;
  std::string pipeline;
  std::string mode;
  std::uint64_t seed = 0;
  bool failed = false;
  int failure_frame = -1;
  std::string failure_reason;
  int frame_count = 0;
  int map_objects = 0;
  double camera_rmse_t = 0.0;
  std::vector<double> camera_series;
  std::map<int, ObjectMetrics> objects;
  std::vector<int> missing_frames;  // truth frames without estimate, or the reverse
};

namespace metrics_detail {

inline double rmse(const std::vector<double>& e) {
  if (e.empty()) return 0.0;
  double s = 0.0;
  for (double v : e) s += v * v;
  return std::sqrt(s / static_cast<double>(e.size()));
}

}  // namespace metrics_detail

/// Camera RMSE over matching keyframes; per ground-truth object translation
/// RMSE plus axis (symmetric truth) or rotation (asymmetric truth) error.
inline MetricsReport compute_metrics(const std::vector<TrajectoryEntry>& estimated,
                                     const std::vector<TrajectoryEntry>& truth,
                                     const std::vector<ObjectTrackEntry>& tracks,
                                     const std::vector<SceneObject>& objects) {
  MetricsReport r;
  std::map<int, const Pose*> gt;
  for (const auto& t : truth) gt[t.frame_id] = &t.pose;
  std::set<int> est_frames;
  std::vector<double> cam_err;
  for (const auto& e : estimated) {
    est_frames.insert(e.frame_id);
    auto it = gt.find(e.frame_id);
    if (it == gt.end()) {
      r.missing_frames.push_back(e.frame_id);
      continue;
    }
    const double err = (e.pose.translation - it->second->translation).norm();
    cam_err.push_back(err);
  }
  if (!est_frames.empty()) {
    const int lo = *est_frames.begin();
    const int hi = *est_frames.rbegin();
    for (const auto& [f, p] : gt) {
      if (f >= lo && f <= hi && !est_frames.count(f)) r.missing_frames.push_back(f);
    }
  }
  std::sort(r.missing_frames.begin(), r.missing_frames.end());
  r.frame_count = static_cast<int>(cam_err.size());
  r.camera_series = cam_err;
  r.camera_rmse_t = metrics_detail::rmse(cam_err);

  for (const auto& obj : objects) {
    ObjectMetrics m;
    std::set<int> ids;
    std::vector<double> t_err;
    double axis_sum = 0.0;
    double rot_sum = 0.0;
    int axis_n = 0;
    int rot_n = 0;
    const Vec3 true_axis = obj.true_pose.rotation * obj.symmetry_axis_body;
    for (const auto& tr : tracks) {
      if (tr.truth_id != obj.id) continue;
      ids.insert(tr.map_id);
      const double e = (tr.position - obj.true_pose.translation).norm();
      t_err.push_back(e);
      m.series.emplace_back(tr.frame_id, e);
      if (obj.symmetry.type != SymmetryType::asymmetric) {
        std::optional<Vec3> est_axis = tr.axis;
        if (!est_axis && tr.rotation) est_axis = *tr.rotation * obj.symmetry_axis_body;
        if (est_axis) {
          axis_sum += line_angle(*est_axis, true_axis);
          ++axis_n;
        }
      } else if (tr.rotation) {
        rot_sum += rotation_distance(*tr.rotation, obj.true_pose.rotation);
        ++rot_n;
      }
    }
    m.rmse_t = metrics_detail::rmse(t_err);
    if (axis_n > 0) m.mean_axis_error = axis_sum / axis_n;
    if (rot_n > 0) m.mean_rotation_error = rot_sum / rot_n;
    m.splits = static_cast<int>(ids.size());
    r.objects[obj.id] = std::move(m);
  }
  return r;
}

struct Comparison {
  std::vector<std::string> pipelines;
  std::string winner;  // pipeline name, "tie", or empty when every run failed
  std::string csv;
  std::string text;
};

/// Side-by-side table of runs over the same scenario. Lower camera RMSE wins
/// in full-SLAM mode, lower mean object RMSE in case-study mode.
inline Comparison compare_runs(const std::vector<MetricsReport>& reports) {
  if (reports.size() < 2) throw ValidationError("compare_runs needs at least two reports");
  for (const auto& r : reports) {
    if (r.scenario != reports.front().scenario || r.seed != reports.front().seed || r.mode != reports.front().mode)
      throw ValidationError("reports come from different scenarios");
  }
  const bool case_study = reports.front().mode == "case-study";
  auto key_metric = [&](const MetricsReport& r) {
    if (r.failed) return std::numeric_limits<double>::infinity();
    if (!case_study) return r.camera_rmse_t;
    double s = 0.0;
    for (const auto& [id, o] : r.objects) s += o.rmse_t;
    return r.objects.empty() ? 0.0 : s / static_cast<double>(r.objects.size());
  };

  Comparison c;
  double best = std::numeric_limits<double>::infinity();
  int best_count = 0;
  for (const auto& r : reports) {
    c.pipelines.push_back(r.pipeline);
    const double k = key_metric(r);
    if (k < best) {
      best = k;
      best_count = 1;
      c.winner = r.pipeline;
    } else if (k == best && std::isfinite(k)) {
      ++best_count;
    }
  }
  if (best_count > 1) c.winner = "tie";

  auto fmt = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
  };

  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  auto add_row = [&](const std::string& name, auto&& cell) {
    std::vector<std::string> cells;
    for (const auto& r : reports) cells.push_back(r.failed ? "-" : cell(r));
    rows.emplace_back(name, std::move(cells));
  };
  add_row("camera_rmse_t", [&](const MetricsReport& r) { return fmt(r.camera_rmse_t); });
  add_row("map_objects", [](const MetricsReport& r) { return std::to_string(r.map_objects); });
  std::set<int> object_ids;
  for (const auto& r : reports) {
    for (const auto& [id, o] : r.objects) object_ids.insert(id);
  }
  for (int id : object_ids) {
    add_row("object_rmse_t[" + std::to_string(id) + "]", [&](const MetricsReport& r) {
      auto it = r.objects.find(id);
      return it == r.objects.end() ? std::string("-") : fmt(it->second.rmse_t);
    });
    add_row("splits[" + std::to_string(id) + "]", [&](const MetricsReport& r) {
      auto it = r.objects.find(id);
      return it == r.objects.end() ? std::string("-") : std::to_string(it->second.splits);
    });
  }

  std::ostringstream csv;
  csv << "metric";
  for (const auto& p : c.pipelines) csv << "," << p;
  csv << "\n";
  for (const auto& [name, cells] : rows) {
    csv << name;
    for (const auto& cell : cells) csv << "," << cell;
    csv << "\n";
  }
  csv << "winner";
  for (const auto& p : c.pipelines) csv << "," << (c.winner == p || c.winner == "tie" ? "*" : "");
  csv << "\n";
  c.csv = csv.str();

  std::ostringstream txt;
  const int w0 = 22;
  const int w = 12;
  txt << std::left << std::setw(w0) << (reports.front().scenario + " #" + std::to_string(reports.front().seed));
  for (const auto& p : c.pipelines) txt << std::right << std::setw(w) << (c.winner == p ? p + "*" : p);
  txt << "\n";
  for (const auto& [name, cells] : rows) {
    txt << std::left << std::setw(w0) << name;
    for (const auto& cell : cells) txt << std::right << std::setw(w) << cell;
    txt << "\n";
  }
  txt << "winner: " << (c.winner.empty() ? "none" : c.winner) << "\n";
  c.text = txt.str();
  return c;
}

}  // namespace symslam
