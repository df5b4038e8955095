#pragma once

// Object map and symmetry-aware data association.
//
// Detections are warped into the world with the tracked camera pose and
// compared with map objects on the parameters their symmetry type leaves
// unambiguous: position and axis line when either side is symmetric, the
// full pose when both are asymmetric.

#include "symslam/categorizer.hpp"
#include "symslam/liegroup.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace symslam {

enum class MatchPolicy {
  symmetry_aware,          // 5-DoF / 6-DoF depending on types, with promotion
  six_dof_representative,  // one pose per detection (single-hypothesis baseline)
  six_dof_best_hypothesis  // best of all hypotheses (multi-hypothesis baseline)
};

struct AssociationParams {
  double tau_t = 0.75;
  double tau_axis = deg2rad(30.0);
  double tau_rot = deg2rad(30.0);
  double angle_merge_eps = deg2rad(25.0);
  int vote_window = 5;
  MatchPolicy policy = MatchPolicy::symmetry_aware;
};

struct Observation {
  int frame_id = 0;
  CategorizedDetection detection;
};

struct MapObject {
  int id = 0;
  std::string class_label;
  SymmetryType symmetry_type = SymmetryType::asymmetric;
  Vec3 position_w = Vec3::Zero();
  std::optional<SphericalAxis> axis_w;  // iff symmetric
  std::optional<Rotation> rotation_w;   // iff asymmetric
  std::vector<double> angles;           // iff discrete
  std::optional<Vec3> body_axis;        // symmetry axis in the object frame, iff symmetric
  std::vector<Observation> observation_log;

  Vec3 axis_vector() const { return axis_to_vector(*axis_w); }

  /// Reference orientation at angle 0: takes the body axis onto the world axis.
  Rotation reference_rotation() const { return align_vectors(*body_axis, axis_vector()); }

  /// Full rotation of the i-th symmetric pose.
  Rotation symmetric_rotation(std::size_t i) const {
    return so3_exp(angles[i] * axis_vector()) * reference_rotation();
  }

  /// Angle of a world rotation about this object's axis.
  double angle_of(const Rotation& r_w) const {
    return twist_angle(r_w * reference_rotation().transpose(), axis_vector());
  }

  /// Index of the nearest symmetric angle within eps, if any.
  std::optional<std::size_t> nearest_angle(double theta, double eps) const {
    std::optional<std::size_t> best;
    double best_d = eps;
    for (std::size_t i = 0; i < angles.size(); ++i) {
      const double d = circular_distance(theta, angles[i]);
      if (d <= best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }
};

struct ObjectMap {
  std::vector<MapObject> objects;
  int next_id = 0;

  MapObject* find(int id) {
    for (auto& o : objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }
  const MapObject* find(int id) const {
    for (const auto& o : objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }
};

struct WorldDetection {
  SymmetryType symmetry_type = SymmetryType::asymmetric;
  std::string class_label;
  Vec3 position_w = Vec3::Zero();
  std::optional<Vec3> axis_w;
  std::optional<Rotation> rotation_w;
  std::optional<Vec3> body_axis;
  std::vector<Pose> hypotheses_w;  // object -> world, one per hypothesis
};

inline WorldDetection warp_to_world(const CategorizedDetection& d, const Pose& t_wc) {
  WorldDetection w;
  w.symmetry_type = d.symmetry_type;
  w.class_label = d.class_label;
  w.position_w = t_wc * d.position_co;
  if (d.axis_co) w.axis_w = (t_wc.rotation * *d.axis_co).normalized();
  if (d.full_rotation_co) w.rotation_w = t_wc.rotation * *d.full_rotation_co;
  w.body_axis = d.body_axis;
  w.hypotheses_w.reserve(d.raw.hypotheses.size());
  for (const auto& h : d.raw.hypotheses) w.hypotheses_w.push_back(t_wc * h);
  return w;
}

struct MatchScore {
  bool match = false;
  bool six_dof = false;
  double score = 0.0;
  double position_term = 0.0;
  double axis_term = 0.0;
  double rotation_term = 0.0;
};

namespace association_detail {

inline MatchScore six_dof(const Vec3& p_d, const Rotation& r_d, const MapObject& m, const AssociationParams& params) {
  MatchScore s;
  s.six_dof = true;
  s.position_term = (p_d - m.position_w).norm() / params.tau_t;
  s.rotation_term = rotation_distance(r_d, *m.rotation_w) / params.tau_rot;
  s.score = s.position_term + s.rotation_term;
  s.match = s.position_term <= 1.0 && s.rotation_term <= 1.0;
  return s;
}

}  // namespace association_detail

inline MatchScore match_score(const WorldDetection& d, const MapObject& m, const AssociationParams& params) {
  namespace ad = association_detail;
  MatchScore s;
  if (d.class_label != m.class_label) return s;

  if (params.policy == MatchPolicy::six_dof_best_hypothesis) {
    MatchScore best;
    best.score = std::numeric_limits<double>::infinity();
    for (const auto& h : d.hypotheses_w) {
      MatchScore c = ad::six_dof(h.translation, h.rotation, m, params);
      if (c.match && c.score < best.score) best = c;
    }
    return best.match ? best : ad::six_dof(d.position_w, *d.rotation_w, m, params);
  }
  if (params.policy == MatchPolicy::six_dof_representative ||
      (!d.axis_w && m.symmetry_type == SymmetryType::asymmetric)) {
    return ad::six_dof(d.position_w, *d.rotation_w, m, params);
  }

  // 5-DoF: position + axis line. An asymmetric side borrows the other side's
  // body axis through its full rotation.
  Vec3 axis_d;
  Vec3 axis_m;
  if (d.axis_w && m.axis_w) {
    axis_d = *d.axis_w;
    axis_m = m.axis_vector();
  } else if (d.axis_w) {
    axis_d = *d.axis_w;
    axis_m = *m.rotation_w * *d.body_axis;
  } else {
    axis_m = m.axis_vector();
    axis_d = *d.rotation_w * *m.body_axis;
  }
  s.position_term = (d.position_w - m.position_w).norm() / params.tau_t;
  s.axis_term = line_angle(axis_d, axis_m) / params.tau_axis;
  s.score = s.position_term + s.axis_term;
  s.match = s.position_term <= 1.0 && s.axis_term <= 1.0;
  return s;
}

struct AssociationMatch {
  std::size_t detection = 0;
  int object_id = -1;
  std::optional<std::size_t> angle_index;
};

struct AssociationResult {
  std::vector<AssociationMatch> matches;
  std::vector<std::size_t> new_objects;
  std::vector<int> new_object_ids;           // parallel to new_objects
  std::vector<std::size_t> unregistered;     // unmatched while registration is disabled
  std::vector<int> promotions;
};

namespace association_detail {

inline void set_symmetric(MapObject& m, const Vec3& axis_w, const Vec3& body_axis) {
  m.axis_w = vector_to_axis(axis_w);
  m.body_axis = body_axis.normalized();
  m.rotation_w.reset();
}

// Absolute angles of each hypothesis about the map object's axis.
inline std::vector<double> hypothesis_angles(const WorldDetection& d, const MapObject& m) {
  std::vector<double> out;
  out.reserve(d.hypotheses_w.size());
  for (const auto& h : d.hypotheses_w) out.push_back(m.angle_of(h.rotation));
  return out;
}

// Absolute angle per detection cluster (asymmetric detections form one cluster).
inline std::vector<double> cluster_angles_in_map(const WorldDetection& d, const CategorizedDetection& src,
                                                 const MapObject& m) {
  const auto per_hyp = hypothesis_angles(d, m);
  if (src.symmetry_type == SymmetryType::asymmetric) return {circular_mean(per_hyp)};
  std::vector<double> out;
  for (std::size_t c = 0; c < src.angle_clusters.size(); ++c) {
    std::vector<double> a;
    for (std::size_t j = 0; j < per_hyp.size(); ++j) {
      if (src.hypothesis_cluster[j] == static_cast<int>(c)) a.push_back(per_hyp[j]);
    }
    if (!a.empty()) out.push_back(circular_mean(a));
  }
  return out;
}

// Associates detection angles with the map's symmetric angles, appending the
// unmatched ones. Returns the index matched by the first cluster.
inline std::optional<std::size_t> merge_angles(MapObject& m, const std::vector<double>& det_angles, double eps) {
  std::optional<std::size_t> first;
  for (double a : det_angles) {
    auto idx = m.nearest_angle(a, eps);
    if (!idx) {
      m.angles.push_back(a);
      idx = m.angles.size() - 1;
    }
    if (!first) first = idx;
  }
  return first;
}

inline void promote_to_discrete(MapObject& m, const Vec3& body_axis, const std::vector<Rotation>& seeds, double eps) {
  const Rotation r_m = *m.rotation_w;
  set_symmetric(m, r_m * body_axis, body_axis);
  m.symmetry_type = SymmetryType::discrete;
  m.angles.clear();
  std::vector<double> a{m.angle_of(r_m)};
  for (const auto& r : seeds) a.push_back(m.angle_of(r));
  merge_angles(m, a, eps);
}

inline void apply_majority_vote(MapObject& m, const WorldDetection& d, const AssociationParams& params) {
  const int window = std::min<int>(params.vote_window, static_cast<int>(m.observation_log.size()));
  if (window < 1) return;
  std::map<SymmetryType, int> count;
  for (int i = 0; i < window; ++i) {
    count[m.observation_log[m.observation_log.size() - 1 - static_cast<std::size_t>(i)].detection.symmetry_type]++;
  }
  std::optional<SymmetryType> majority;
  for (const auto& [type, c] : count) {
    if (2 * c > window) majority = type;
  }
  if (!majority || *majority == m.symmetry_type) return;

  if (*majority == SymmetryType::continuous) {
    if (m.symmetry_type == SymmetryType::asymmetric) {
      if (!d.body_axis) return;
      set_symmetric(m, *m.rotation_w * *d.body_axis, *d.body_axis);
    }
    m.symmetry_type = SymmetryType::continuous;
    m.angles.clear();
  } else if (*majority == SymmetryType::discrete && m.symmetry_type == SymmetryType::asymmetric) {
    if (!d.body_axis) return;
    promote_to_discrete(m, *d.body_axis, {}, params.angle_merge_eps);
  }
}

}  // namespace association_detail

/// Creates a map object from an unmatched detection.
inline MapObject register_new(const WorldDetection& d, const CategorizedDetection& src, ObjectMap& map, int frame_id,
                              double angle_merge_eps = deg2rad(25.0)) {
  namespace ad = association_detail;
  MapObject m;
  m.id = map.next_id++;
  m.class_label = d.class_label;
  m.symmetry_type = d.symmetry_type;
  m.position_w = d.position_w;
  if (d.symmetry_type == SymmetryType::asymmetric) {
    m.rotation_w = *d.rotation_w;
  } else {
    ad::set_symmetric(m, *d.axis_w, *d.body_axis);
    if (d.symmetry_type == SymmetryType::discrete) {
      for (double a : ad::cluster_angles_in_map(d, src, m)) m.angles.push_back(a);
      // Keep the invariant even if two representatives land close together.
      std::vector<double> merged;
      std::swap(merged, m.angles);
      ad::merge_angles(m, merged, angle_merge_eps);
    }
  }
  m.observation_log.push_back({frame_id, src});
  map.objects.push_back(m);
  return map.objects.back();
}

/// Matches one frame's detections against the map and updates it.
inline AssociationResult associate(const std::vector<CategorizedDetection>& detections, ObjectMap& map,
                                   const Pose& t_wc, int frame_id, const AssociationParams& params,
                                   bool allow_registration = true) {
  namespace ad = association_detail;
  AssociationResult result;
  std::vector<WorldDetection> world;
  world.reserve(detections.size());
  for (const auto& d : detections) world.push_back(warp_to_world(d, t_wc));

  struct Candidate {
    double score;
    std::size_t det;
    std::size_t obj;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < world.size(); ++i) {
    for (std::size_t k = 0; k < map.objects.size(); ++k) {
      const MatchScore s = match_score(world[i], map.objects[k], params);
      if (s.match) candidates.push_back({s.score, i, k});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score < b.score; });

  std::vector<bool> det_used(world.size(), false);
  std::vector<bool> obj_used(map.objects.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> assigned;
  for (const auto& c : candidates) {
    if (det_used[c.det] || obj_used[c.obj]) continue;
    det_used[c.det] = obj_used[c.obj] = true;
    assigned.emplace_back(c.det, c.obj);
  }

  // Asymmetric pairs that fail on the full pose but agree on position: the
  // map object is a discrete symmetric one seen from two of its faces.
  if (params.policy == MatchPolicy::symmetry_aware) {
    for (std::size_t i = 0; i < world.size(); ++i) {
      if (det_used[i] || world[i].symmetry_type != SymmetryType::asymmetric) continue;
      std::optional<std::size_t> best;
      double best_d = params.tau_t;
      for (std::size_t k = 0; k < map.objects.size(); ++k) {
        const auto& m = map.objects[k];
        if (obj_used[k] || m.symmetry_type != SymmetryType::asymmetric || m.class_label != world[i].class_label)
          continue;
        const double dp = (world[i].position_w - m.position_w).norm();
        if (dp <= best_d) {
          best_d = dp;
          best = k;
        }
      }
      if (!best) continue;
      auto& m = map.objects[*best];
      const Vec3 rel = so3_log(m.rotation_w->transpose() * *world[i].rotation_w);
      if (rel.norm() <= params.tau_rot) continue;
      ad::promote_to_discrete(m, canonical_sign_largest(rel.normalized()), {*world[i].rotation_w},
                              params.angle_merge_eps);
      result.promotions.push_back(m.id);
      det_used[i] = obj_used[*best] = true;
      assigned.emplace_back(i, *best);
    }
  }

  std::sort(assigned.begin(), assigned.end());
  for (const auto& [i, k] : assigned) {
    auto& m = map.objects[k];
    AssociationMatch match{i, m.id, std::nullopt};
    m.observation_log.push_back({frame_id, detections[i]});
    if (params.policy == MatchPolicy::symmetry_aware) {
      const auto before = m.symmetry_type;
      ad::apply_majority_vote(m, world[i], params);
      if (before == SymmetryType::asymmetric && m.symmetry_type == SymmetryType::discrete &&
          std::find(result.promotions.begin(), result.promotions.end(), m.id) == result.promotions.end()) {
        result.promotions.push_back(m.id);
      }
      if (m.symmetry_type == SymmetryType::discrete && world[i].symmetry_type != SymmetryType::continuous) {
        match.angle_index =
            ad::merge_angles(m, ad::cluster_angles_in_map(world[i], detections[i], m), params.angle_merge_eps);
      }
    }
    result.matches.push_back(match);
  }

  for (std::size_t i = 0; i < world.size(); ++i) {
    if (det_used[i]) continue;
    if (!allow_registration) {
      result.unregistered.push_back(i);
      continue;
    }
    const MapObject& m = register_new(world[i], detections[i], map, frame_id, params.angle_merge_eps);
    result.new_objects.push_back(i);
    result.new_object_ids.push_back(m.id);
  }
  return result;
}

}  // namespace symslam
