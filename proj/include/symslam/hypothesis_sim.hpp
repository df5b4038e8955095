#pragma once

// Synthetic multi-hypothesis detector.
//
// Produces camera trajectories orbiting a scene, noisy odometry between
// consecutive frames and, for each visible object, N candidate camera->object
// poses whose spread follows the object's symmetry group.

#include "symslam/error.hpp"
#include "symslam/liegroup.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace symslam {

enum class SymmetryType { asymmetric, discrete, continuous };

inline const char* to_string(SymmetryType t) {
  switch (t) {
    case SymmetryType::asymmetric: return "asymmetric";
    case SymmetryType::discrete: return "discrete";
    case SymmetryType::continuous: return "continuous";
  }
  return "unknown";
}

inline SymmetryType symmetry_type_from_string(const std::string& s) {
  if (s == "asymmetric") return SymmetryType::asymmetric;
  if (s == "discrete") return SymmetryType::discrete;
  if (s == "continuous") return SymmetryType::continuous;
  throw ValidationError("unknown symmetry type '" + s + "'");
}

struct SymmetrySpec {
  SymmetryType type = SymmetryType::asymmetric;
  int fold = 0;  // k, only meaningful for discrete

  static SymmetrySpec asymmetric() { return {SymmetryType::asymmetric, 0}; }
  static SymmetrySpec discrete(int k) { return {SymmetryType::discrete, k}; }
  static SymmetrySpec continuous() { return {SymmetryType::continuous, 0}; }
};

struct SceneObject {
  int id = 0;
  std::string class_label;
  Pose true_pose;  // object -> world
  SymmetrySpec symmetry;
  Vec3 symmetry_axis_body = Vec3::UnitZ();
};

/// Inclusive range of frame indices.
struct FrameInterval {
  int first = 0;
  int last = 0;
  bool contains(int f) const { return f >= first && f <= last; }
};

inline bool in_any(const std::vector<FrameInterval>& arcs, int f) {
  for (const auto& a : arcs) {
    if (a.contains(f)) return true;
  }
  return false;
}

struct TrajectorySpec {
  Vec3 center = Vec3::Zero();
  double radius = 2.0;
  double height = 0.8;  // camera height above center
  int frame_count = 72;
  double start_azimuth = 0.0;
  double sweep = kTwoPi;  // total azimuth covered by the orbit
  std::vector<Vec3> waypoints;  // when non-empty, replaces the orbit
  std::vector<FrameInterval> featureless_arcs;

  int frames() const { return waypoints.empty() ? frame_count : static_cast<int>(waypoints.size()); }
};

struct NoiseModel {
  double hyp_trans_sigma = 0.03;          // m, per hypothesis
  double hyp_rot_sigma = deg2rad(2.0);    // rad, per hypothesis and axis
  double odom_trans_sigma = 0.01;         // m, per edge and axis
  double odom_rot_sigma = deg2rad(0.5);   // rad, per edge and axis
  double featureless_inflation = 5.0;
  double occlusion_bias = 0.15;  // m, partial-view shift toward the camera
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 7;
  int num_hypotheses = 30;
  TrajectorySpec trajectory;
  std::vector<SceneObject> objects;
  NoiseModel noise;
  std::vector<FrameInterval> occlusion_arcs;
  double fov = deg2rad(100.0);  // full cone angle
  double max_range = 8.0;

  void validate() const;
};

struct HypothesisSet {
  int object_id_truth = -1;
  std::string class_label;
  std::vector<Pose> hypotheses;  // camera -> object
};

struct OdometryMeasurement {
  Pose relative;  // T_{c(k-1)} -> T_{c(k)}
  double trans_sigma = 0.0;
  double rot_sigma = 0.0;
};

struct DetectionFrame {
  int frame_id = 0;
  Pose true_camera_pose;  // camera -> world
  std::optional<OdometryMeasurement> odometry;
  bool featureless = false;
  bool occluded = false;
  std::vector<HypothesisSet> detections;
};

struct Scenario {
  ScenarioConfig config;
  std::vector<DetectionFrame> frames;

  const SceneObject* object(int id) const {
    for (const auto& o : config.objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }
};

using Rng = std::mt19937_64;

inline void ScenarioConfig::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError(m); };
  if (num_hypotheses < 2) fail("num_hypotheses must be >= 2");
  const int n = trajectory.frames();
  if (n < 2) fail("trajectory must have at least 2 frames");
  if (trajectory.waypoints.empty() && !(trajectory.radius > 0.0)) fail("orbit radius must be positive");
  for (const auto& a : trajectory.featureless_arcs) {
    if (a.first < 0 || a.last >= n || a.first > a.last) fail("featureless arc out of range");
  }
  for (const auto& a : occlusion_arcs) {
    if (a.first < 0 || a.last >= n || a.first > a.last) fail("occlusion arc out of range");
  }
  const auto& s = noise;
  for (double v : {s.hyp_trans_sigma, s.hyp_rot_sigma, s.odom_trans_sigma, s.odom_rot_sigma,
                   s.occlusion_bias}) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail("noise sigmas must be finite and non-negative");
  }
  if (!(s.featureless_inflation >= 1.0)) fail("featureless_inflation must be >= 1");
  if (!(fov > 0.0 && fov < kTwoPi)) fail("fov must be in (0, 2pi)");
  if (!(max_range > 0.0)) fail("max_range must be positive");
  for (const auto& o : objects) {
    if (o.symmetry.type == SymmetryType::discrete && o.symmetry.fold < 2)
      fail("discrete object " + std::to_string(o.id) + " needs fold count >= 2");
    if (std::abs(o.symmetry_axis_body.norm() - 1.0) > 1e-6)
      fail("object " + std::to_string(o.id) + " symmetry axis must be unit length");
    if (!o.true_pose.is_finite()) fail("object pose must be finite");
  }
}

namespace sim_detail {

inline Vec3 gaussian3(Rng& rng, double sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return sigma * Vec3(x, y, z);
}

// Camera frame: z forward, x right, y down.
inline Pose look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  if (x.norm() < 1e-9) x = Vec3::UnitX();
  x.normalize();
  const Vec3 y = z.cross(x);
  Pose p;
  p.rotation.col(0) = x;
  p.rotation.col(1) = y;
  p.rotation.col(2) = z;
  p.translation = eye;
  return p;
}

// A body direction orthogonal to the symmetry axis, the object's "front".
inline Vec3 front_direction(const Vec3& axis) {
  Vec3 f = Vec3::UnitX() - axis.x() * axis;
  if (f.norm() < 1e-6) f = Vec3::UnitY() - axis.y() * axis;
  return f.normalized();
}

}  // namespace sim_detail

/// Applies independent rotation (body frame) and translation noise.
inline Pose perturb(const Pose& p, double trans_sigma, double rot_sigma, Rng& rng) {
  const Vec3 dr = sim_detail::gaussian3(rng, rot_sigma);
  const Vec3 dt = sim_detail::gaussian3(rng, trans_sigma);
  return {p.rotation * so3_exp(dr), p.translation + dt};
}

/// Rotation of the object by `angle` about its own symmetry axis.
inline Pose rotate_about_body_axis(const Pose& p, const Vec3& axis_body, double angle) {
  return {p.rotation * so3_exp(angle * axis_body), p.translation};
}

inline std::vector<Pose> sample_hypotheses(const Pose& true_relative, const SymmetrySpec& spec,
                                           const Vec3& axis_body, const NoiseModel& noise, int n,
                                           Rng& rng) {
  if (n < 2) throw ValidationError("hypothesis count must be >= 2");
  std::vector<Pose> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Pose mode = true_relative;
    if (spec.type == SymmetryType::discrete) {
      std::uniform_int_distribution<int> pick(0, spec.fold - 1);
      const int m = pick(rng);
      mode = rotate_about_body_axis(true_relative, axis_body, kTwoPi * m / spec.fold);
    } else if (spec.type == SymmetryType::continuous) {
      std::uniform_real_distribution<double> angle(0.0, kTwoPi);
      mode = rotate_about_body_axis(true_relative, axis_body, angle(rng));
    }
    out.push_back(perturb(mode, noise.hyp_trans_sigma, noise.hyp_rot_sigma, rng));
  }
  return out;
}

/// The symmetry-equivalent pose whose front faces the camera the most. A
/// single-output detector regresses this one; it changes as the viewpoint
/// moves around a symmetric object.
inline Pose viewpoint_canonical_pose(const Pose& true_relative, const SymmetrySpec& spec,
                                     const Vec3& axis_body) {
  if (spec.type == SymmetryType::asymmetric) return true_relative;
  const Vec3 to_camera_body = true_relative.rotation.transpose() * (-true_relative.translation);
  const Vec3 u = sim_detail::front_direction(axis_body);
  const Vec3 v = axis_body.cross(u);
  const double best = std::atan2(to_camera_body.dot(v), to_camera_body.dot(u));
  if (spec.type == SymmetryType::continuous) {
    return rotate_about_body_axis(true_relative, axis_body, best);
  }
  const double step = kTwoPi / spec.fold;
  const int m = static_cast<int>(std::lround(wrap_two_pi(best) / step)) % spec.fold;
  return rotate_about_body_axis(true_relative, axis_body, m * step);
}

inline Pose camera_pose_at(const TrajectorySpec& t, int frame) {
  if (!t.waypoints.empty()) return sim_detail::look_at(t.waypoints[static_cast<std::size_t>(frame)], t.center);
  const double az = t.start_azimuth + t.sweep * frame / t.frame_count;
  const Vec3 eye = t.center + Vec3(t.radius * std::cos(az), t.radius * std::sin(az), t.height);
  return sim_detail::look_at(eye, t.center);
}

inline bool is_visible(const Pose& camera, const Vec3& point_w, double fov, double max_range) {
  const Vec3 p = invert(camera) * point_w;
  if (p.z() <= 0.0) return false;
  const double off_axis = std::atan2(std::hypot(p.x(), p.y()), p.z());
  return off_axis <= 0.5 * fov && p.norm() <= max_range;
}

/// Within an occlusion arc a discrete object is only partially seen: every
/// hypothesis collapses onto the viewpoint-canonical mode and the position is
/// pulled toward the camera by the configured bias.
inline DetectionFrame occlusion_filter(DetectionFrame frame, const ScenarioConfig& config) {
  if (!in_any(config.occlusion_arcs, frame.frame_id)) return frame;
  Rng rng(config.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(frame.frame_id + 1)));
  for (auto& det : frame.detections) {
    const SceneObject* obj = nullptr;
    for (const auto& o : config.objects) {
      if (o.id == det.object_id_truth) obj = &o;
    }
    if (obj == nullptr || obj->symmetry.type != SymmetryType::discrete) continue;
    const Pose rel = invert(frame.true_camera_pose) * obj->true_pose;
    Pose mode = viewpoint_canonical_pose(rel, obj->symmetry, obj->symmetry_axis_body);
    mode.translation -= config.noise.occlusion_bias * mode.translation.normalized();
    for (auto& h : det.hypotheses) {
      h = perturb(mode, config.noise.hyp_trans_sigma, config.noise.hyp_rot_sigma, rng);
    }
  }
  frame.occluded = true;
  return frame;
}

inline Scenario generate_scenario(const ScenarioConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Scenario sc;
  sc.config = config;
  const auto& noise = config.noise;
  const int n_frames = config.trajectory.frames();
  Pose prev;
  for (int f = 0; f < n_frames; ++f) {
    DetectionFrame frame;
    frame.frame_id = f;
    frame.true_camera_pose = camera_pose_at(config.trajectory, f);
    frame.featureless = in_any(config.trajectory.featureless_arcs, f);
    if (f > 0) {
      const double inflate = frame.featureless ? noise.featureless_inflation : 1.0;
      OdometryMeasurement odo;
      odo.trans_sigma = noise.odom_trans_sigma * inflate;
      odo.rot_sigma = noise.odom_rot_sigma * inflate;
      odo.relative = perturb(invert(prev) * frame.true_camera_pose, odo.trans_sigma, odo.rot_sigma, rng);
      frame.odometry = odo;
    }
    for (const auto& obj : config.objects) {
      if (!is_visible(frame.true_camera_pose, obj.true_pose.translation, config.fov, config.max_range))
        continue;
      const Pose rel = invert(frame.true_camera_pose) * obj.true_pose;
      HypothesisSet hs;
      hs.object_id_truth = obj.id;
      hs.class_label = obj.class_label;
      hs.hypotheses = sample_hypotheses(rel, obj.symmetry, obj.symmetry_axis_body, noise,
                                        config.num_hypotheses, rng);
      // Index 0 plays the role of the detector's primary output.
      hs.hypotheses[0] = perturb(viewpoint_canonical_pose(rel, obj.symmetry, obj.symmetry_axis_body),
                                 noise.hyp_trans_sigma, noise.hyp_rot_sigma, rng);
      frame.detections.push_back(std::move(hs));
    }
    sc.frames.push_back(occlusion_filter(std::move(frame), config));
    prev = sc.frames.back().true_camera_pose;
  }
  return sc;
}

}  // namespace symslam
