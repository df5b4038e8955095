#pragma once

// Per-frame SLAM loop: detect -> categorize -> associate -> windowed solve.
//
// Three front ends share the same scenario and backend:
//   proposed  symmetry-aware categorization, association and edges
//   SH        hypothesis 0 only, 6-DoF association, single-pose edges
//   MH        all hypotheses treated as one asymmetric mixture

#include "symslam/association.hpp"
#include "symslam/categorizer.hpp"
#include "symslam/hypothesis_sim.hpp"
#include "symslam/metrics.hpp"
#include "symslam/optimizer.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace symslam {

enum class PipelineKind { proposed, single_hypothesis, multi_hypothesis };
enum class RunMode { full_slam, case_study };

inline const char* to_string(PipelineKind p) {
  switch (p) {
    case PipelineKind::proposed: return "proposed";
    case PipelineKind::single_hypothesis: return "SH";
    case PipelineKind::multi_hypothesis: return "MH";
  }
  return "unknown";
}

inline PipelineKind pipeline_from_string(const std::string& s) {
  if (s == "proposed") return PipelineKind::proposed;
  if (s == "SH" || s == "sh") return PipelineKind::single_hypothesis;
  if (s == "MH" || s == "mh") return PipelineKind::multi_hypothesis;
  throw ValidationError("unknown pipeline '" + s + "' (expected proposed, SH or MH)");
}

inline const char* to_string(RunMode m) { return m == RunMode::full_slam ? "full-slam" : "case-study"; }

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "full-slam") return RunMode::full_slam;
  if (s == "case-study") return RunMode::case_study;
  throw ValidationError("unknown mode '" + s + "' (expected full-slam or case-study)");
}

struct RunOptions {
  PipelineKind pipeline = PipelineKind::proposed;
  RunMode mode = RunMode::full_slam;
  int window = 10;
  double gamma = 1.0;
  CategorizerParams categorizer;
  AssociationParams association;
  OptimizerParams optimizer;
  double failure_distance_factor = 10.0;  // x orbit radius
  int failure_gap = 10;                   // consecutive frames without object edges
  double min_sigma = 1e-3;                // floor for information weights

  void validate() const {
    if (window < 1) throw ValidationError("window must be >= 1");
    if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
    if (failure_gap < 1) throw ValidationError("failure_gap must be >= 1");
    if (!(min_sigma > 0.0)) throw ValidationError("min_sigma must be positive");
  }
};

struct FrameRecord {
  int frame_id = 0;
  double camera_error = 0.0;
  int object_edges = 0;  // matches + registrations in this frame
  int map_objects = 0;
  bool lost = false;
  int solver_iterations = 0;
  double solver_cost = 0.0;
};

struct ConvergenceRow {
  int frame_id = 0;
  IterationRecord record;
};

struct RunResult {
  MetricsReport metrics;
  std::vector<TrajectoryEntry> trajectory;
  std::vector<TrajectoryEntry> truth;
  std::vector<ObjectTrackEntry> tracks;
  std::vector<FrameRecord> frames;
  std::vector<ConvergenceRow> convergence;
  ObjectMap map;
};

namespace pipeline_detail {

inline CategorizedDetection single_pose_detection(const HypothesisSet& h, bool keep_all) {
  CategorizedDetection d;
  d.symmetry_type = SymmetryType::asymmetric;
  d.class_label = h.class_label;
  d.position_co = h.hypotheses.front().translation;
  d.full_rotation_co = h.hypotheses.front().rotation;
  d.raw = h;
  if (!keep_all) d.raw.hypotheses.resize(1);
  return d;
}

inline CategorizedDetection preprocess(const HypothesisSet& h, const RunOptions& opt) {
  switch (opt.pipeline) {
    case PipelineKind::proposed: return categorize(h, opt.categorizer);
    case PipelineKind::single_hypothesis: return single_pose_detection(h, false);
    case PipelineKind::multi_hypothesis: return single_pose_detection(h, true);
  }
  return categorize(h, opt.categorizer);
}

inline MatchPolicy policy_for(PipelineKind p) {
  switch (p) {
    case PipelineKind::proposed: return MatchPolicy::symmetry_aware;
    case PipelineKind::single_hypothesis: return MatchPolicy::six_dof_representative;
    case PipelineKind::multi_hypothesis: return MatchPolicy::six_dof_best_hypothesis;
  }
  return MatchPolicy::symmetry_aware;
}

inline ObjectNode node_from_map(const MapObject& m) {
  if (m.symmetry_type == SymmetryType::asymmetric) return ObjectNode::asymmetric({*m.rotation_w, m.position_w});
  return ObjectNode::symmetric(m.symmetry_type, m.position_w, m.axis_vector(), *m.body_axis, m.angles);
}

inline void node_to_map(const ObjectNode& n, MapObject& m) {
  if (n.type == SymmetryType::asymmetric) {
    m.rotation_w = n.pose.rotation;
    m.position_w = n.pose.translation;
    return;
  }
  m.position_w = n.position;
  m.axis_w = vector_to_axis(n.axis());
  m.angles = n.angles;
}

struct Weights {
  double trans = 1.0;
  double rot = 1.0;
};

inline Vec6 sqrt_info(const Weights& w) {
  Vec6 s;
  s << w.trans, w.trans, w.trans, w.rot, w.rot, w.rot;
  return s;
}

// Object edges contributed by one observation of map object m, given the
// current estimate of the observing camera.
inline std::vector<Edge> observation_edges(const MapObject& m, const Observation& obs, const Pose& t_wc,
                                           const Weights& w, double gamma) {
  const auto& d = obs.detection;
  const auto& hyps = d.raw.hypotheses;
  std::vector<Edge> out;
  auto base = [&](EdgeKind kind) {
    Edge e;
    e.kind = kind;
    e.camera = obs.frame_id;
    e.object = m.id;
    e.sqrt_info = sqrt_info(w);
    return e;
  };
  auto cts_edge = [&](const Vec3& axis_co) {
    Edge e = base(EdgeKind::cts_object);
    e.hypotheses = hyps;
    e.axis_co = axis_co.normalized();
    e.gamma = gamma;
    return e;
  };

  switch (m.symmetry_type) {
    case SymmetryType::asymmetric: {
      Edge e = base(EdgeKind::asym_object);
      e.hypotheses = hyps;
      out.push_back(std::move(e));
      break;
    }
    case SymmetryType::continuous: {
      if (d.axis_co) {
        out.push_back(cts_edge(*d.axis_co));
      } else if (d.full_rotation_co) {
        out.push_back(cts_edge(*d.full_rotation_co * *m.body_axis));
      }
      break;
    }
    case SymmetryType::discrete: {
      if (d.symmetry_type == SymmetryType::continuous) {
        out.push_back(cts_edge(*d.axis_co));
        break;
      }
      if (m.angles.empty()) break;
      std::map<std::size_t, std::vector<Pose>> groups;
      for (const auto& h : hyps) {
        const double theta = m.angle_of(t_wc.rotation * h.rotation);
        groups[*m.nearest_angle(theta, kPi)].push_back(h);
      }
      for (auto& [idx, members] : groups) {
        Edge e = base(EdgeKind::disc_object);
        e.angle_index = idx;
        e.hypotheses = std::move(members);
        out.push_back(std::move(e));
      }
      break;
    }
  }
  return out;
}

}  // namespace pipeline_detail

/// Runs one pipeline over a scenario and evaluates it against ground truth.
inline RunResult run_pipeline(const Scenario& sc, RunOptions opt) {
  namespace pd = pipeline_detail;
  opt.validate();
  opt.association.policy = pd::policy_for(opt.pipeline);
  const bool case_study = opt.mode == RunMode::case_study;
  const auto& noise = sc.config.noise;
  const pd::Weights det_w{1.0 / std::max(noise.hyp_trans_sigma, opt.min_sigma),
                          1.0 / std::max(noise.hyp_rot_sigma, opt.min_sigma)};
  const double scale = sc.config.trajectory.waypoints.empty() ? sc.config.trajectory.radius : 1.0;

  RunResult res;
  res.metrics.scenario = sc.config.name;
  res.metrics.pipeline = to_string(opt.pipeline);
  res.metrics.mode = to_string(opt.mode);
  res.metrics.seed = sc.config.seed;

  Graph graph;
  std::vector<Edge> odometry_edges;
  std::map<int, int> tracked;  // truth id -> map id
  int gap = 0;

  for (const auto& frame : sc.frames) {
    const int f = frame.frame_id;
    // Camera node.
    Pose t_wc = frame.true_camera_pose;
    if (!case_study && !graph.state.cameras.empty()) {
      const auto& prev = *graph.state.cameras.rbegin();
      if (frame.odometry) {
        t_wc = prev.second * frame.odometry->relative;
        const auto& odo = *frame.odometry;
        const pd::Weights ow{1.0 / std::max(odo.trans_sigma, opt.min_sigma),
                             1.0 / std::max(odo.rot_sigma, opt.min_sigma)};
        odometry_edges.push_back(Edge::odometry(prev.first, f, odo.relative, pd::sqrt_info(ow)));
      } else {
        t_wc = prev.second;
      }
    }
    graph.state.cameras[f] = t_wc;
    if (case_study || graph.state.cameras.size() == 1) graph.state.fixed.insert(NodeKey::camera(f));

    // Front end.
    std::vector<CategorizedDetection> dets;
    dets.reserve(frame.detections.size());
    for (const auto& h : frame.detections) dets.push_back(pd::preprocess(h, opt));
    AssociationResult assoc = associate(dets, res.map, t_wc, f, opt.association, false);
    const bool lost = !case_study && frame.featureless && assoc.matches.empty();
    if (!lost) {
      for (std::size_t i : assoc.unregistered) {
        const MapObject& m =
            register_new(warp_to_world(dets[i], t_wc), dets[i], res.map, f, opt.association.angle_merge_eps);
        assoc.new_objects.push_back(i);
        assoc.new_object_ids.push_back(m.id);
      }
    }
    for (const auto& mt : assoc.matches) tracked[dets[mt.detection].raw.object_id_truth] = mt.object_id;
    for (std::size_t k = 0; k < assoc.new_objects.size(); ++k)
      tracked[dets[assoc.new_objects[k]].raw.object_id_truth] = assoc.new_object_ids[k];

    // Back end.
    graph.edges = odometry_edges;
    graph.state.objects.clear();
    for (const auto& m : res.map.objects) {
      std::size_t before = graph.edges.size();
      for (const auto& obs : m.observation_log) {
        for (auto& e : pd::observation_edges(m, obs, graph.state.cameras.at(obs.frame_id), det_w, opt.gamma))
          graph.edges.push_back(std::move(e));
      }
      if (graph.edges.size() > before) graph.state.objects[m.id] = pd::node_from_map(m);
    }
    OptimizeReport report = windowed_solve(graph, opt.window, opt.optimizer);
    for (auto& m : res.map.objects) {
      auto it = graph.state.objects.find(m.id);
      if (it != graph.state.objects.end()) pd::node_to_map(it->second, m);
    }
    for (const auto& it : report.iterations) res.convergence.push_back({f, it});

    // Bookkeeping.
    const Pose& est = graph.state.cameras.at(f);
    FrameRecord rec;
    rec.frame_id = f;
    rec.camera_error = (est.translation - frame.true_camera_pose.translation).norm();
    rec.object_edges = static_cast<int>(assoc.matches.size() + assoc.new_objects.size());
    rec.map_objects = static_cast<int>(res.map.objects.size());
    rec.lost = lost;
    rec.solver_iterations = static_cast<int>(report.iterations.size());
    rec.solver_cost = report.final_cost;
    res.frames.push_back(rec);
    res.trajectory.push_back({f, est});
    res.truth.push_back({f, frame.true_camera_pose});
    for (const auto& [truth_id, map_id] : tracked) {
      const MapObject* m = res.map.find(map_id);
      ObjectTrackEntry tr;
      tr.frame_id = f;
      tr.truth_id = truth_id;
      tr.map_id = map_id;
      tr.map_type = m->symmetry_type;
      tr.position = m->position_w;
      if (m->axis_w) tr.axis = m->axis_vector();
      if (m->rotation_w) tr.rotation = *m->rotation_w;
      res.tracks.push_back(tr);
    }

    gap = rec.object_edges == 0 ? gap + 1 : 0;
    if (!case_study && rec.camera_error > opt.failure_distance_factor * scale) {
      res.metrics.failed = true;
      res.metrics.failure_reason = "camera error exceeded " + std::to_string(opt.failure_distance_factor) + "x scale";
    } else if (gap >= opt.failure_gap) {
      res.metrics.failed = true;
      res.metrics.failure_reason = "no object edges for " + std::to_string(gap) + " consecutive frames";
    }
    if (res.metrics.failed) {
      res.metrics.failure_frame = f;
      break;
    }
  }

  MetricsReport m = compute_metrics(res.trajectory, res.truth, res.tracks, sc.config.objects);
  m.scenario = res.metrics.scenario;
  m.pipeline = res.metrics.pipeline;
  m.mode = res.metrics.mode;
  m.seed = res.metrics.seed;
  m.failed = res.metrics.failed;
  m.failure_frame = res.metrics.failure_frame;
  m.failure_reason = res.metrics.failure_reason;
  m.map_objects = static_cast<int>(res.map.objects.size());
  res.metrics = std::move(m);
  return res;
}

}  // namespace symslam
