#pragma once

// Symmetry-type categorization of a multi-hypothesis detection.
//
// The hypotheses are compared against the first one: their relative
// rotations reveal whether the set is unimodal (asymmetric object), spread
// over a few well separated angles about a common axis (discrete symmetry) or
// spread continuously about that axis (continuous symmetry).

#include "symslam/error.hpp"
#include "symslam/hypothesis_sim.hpp"
#include "symslam/liegroup.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace symslam {

struct CategorizerParams {
  double asym_angle = deg2rad(15.0);  // max relative angle of a unimodal set
  double dbscan_eps = deg2rad(20.0);
  int dbscan_min_pts = 2;
  double gap_min = deg2rad(45.0);     // min empty arc between discrete clusters
  int max_clusters = 8;
  // Relative rotations smaller than this carry no axis information (they are
  // within the reference mode) and are left out of the axis stack.
  double axis_min_angle = deg2rad(15.0);
};

struct CategorizedDetection {
  SymmetryType symmetry_type = SymmetryType::asymmetric;
  std::string class_label;
  Vec3 position_co = Vec3::Zero();
  std::optional<Vec3> axis_co;                // iff symmetric
  std::optional<Rotation> full_rotation_co;   // iff asymmetric
  std::vector<double> angle_clusters;         // iff discrete, relative to hypothesis 0
  std::optional<Vec3> body_axis;              // symmetry axis in the object frame, iff symmetric
  std::vector<double> hypothesis_angles;      // per hypothesis, relative to hypothesis 0
  std::vector<int> hypothesis_cluster;        // per hypothesis, -1 for noise
  double dispersion = 0.0;
  double max_angle = 0.0;
  HypothesisSet raw;

  bool symmetric() const { return symmetry_type != SymmetryType::asymmetric; }
};

/// omega_i = log(R_0^T R_i) for i = 1..N-1.
inline std::vector<AxisAngle> relative_rotations(const HypothesisSet& h) {
  if (h.hypotheses.size() < 2) throw ValidationError("hypothesis set needs at least 2 poses");
  const Rotation r0t = h.hypotheses.front().rotation.transpose();
  std::vector<AxisAngle> out;
  out.reserve(h.hypotheses.size() - 1);
  for (std::size_t i = 1; i < h.hypotheses.size(); ++i) {
    out.push_back(so3_log(r0t * h.hypotheses[i].rotation));
  }
  return out;
}

/// Unit l maximizing the norm of the stacked unit rotation axes times l,
/// i.e. the leading right singular vector of that stack.
inline Vec3 estimate_axis(std::span<const AxisAngle> relatives, double min_norm = 1e-6) {
  std::vector<Vec3> rows;
  for (const auto& w : relatives) {
    const double n = w.norm();
    if (n >= min_norm && n > 1e-6) rows.push_back(w / n);
  }
  if (rows.empty()) throw NoRotationDispersion();
  Eigen::MatrixX3d a(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  Eigen::JacobiSVD<Eigen::MatrixX3d> svd(a, Eigen::ComputeFullV);
  return canonical_sign_largest(svd.matrixV().col(0));
}

/// Angles of each hypothesis about `axis` relative to the first one, on the
/// circle oriented by the axis. The reference hypothesis gets 0.
inline std::vector<double> symmetry_angles(std::span<const AxisAngle> relatives, const Vec3& axis) {
  std::vector<double> out;
  out.reserve(relatives.size() + 1);
  out.push_back(0.0);
  for (const auto& w : relatives) {
    const double theta = w.norm();
    out.push_back(w.dot(axis) < 0.0 ? wrap_two_pi(kTwoPi - theta) : wrap_two_pi(theta));
  }
  return out;
}

struct AngleCluster {
  double representative = 0.0;  // circular mean of members, in [0, 2pi)
  std::vector<std::size_t> members;
};

inline double circular_mean(std::span<const double> angles) {
  double s = 0.0;
  double c = 0.0;
  for (double a : angles) {
    s += std::sin(a);
    c += std::cos(a);
  }
  return wrap_two_pi(std::atan2(s, c));
}

/// DBSCAN on the circle. Noise points are dropped.
inline std::vector<AngleCluster> cluster_angles(std::span<const double> angles, double eps, int min_pts) {
  if (!(eps > 0.0) || min_pts < 1) throw ValidationError("cluster_angles needs eps > 0 and min_pts >= 1");
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  const std::size_t n = angles.size();
  std::vector<int> label(n, kUnvisited);

  auto neighbours = [&](std::size_t i) {
    std::vector<std::size_t> nb;
    for (std::size_t j = 0; j < n; ++j) {
      if (circular_distance(angles[i], angles[j]) <= eps) nb.push_back(j);
    }
    return nb;
  };

  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    auto nb = neighbours(i);
    if (static_cast<int>(nb.size()) < min_pts) {
      label[i] = kNoise;
      continue;
    }
    const int c = next++;
    label[i] = c;
    std::vector<std::size_t> queue(nb.begin(), nb.end());
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t j = queue[q];
      if (label[j] == kNoise) label[j] = c;
      if (label[j] != kUnvisited) continue;
      label[j] = c;
      auto nb2 = neighbours(j);
      if (static_cast<int>(nb2.size()) >= min_pts) queue.insert(queue.end(), nb2.begin(), nb2.end());
    }
  }
  if (next == 0) throw EmptyClustering();

  std::vector<AngleCluster> clusters(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] >= 0) clusters[static_cast<std::size_t>(label[i])].members.push_back(i);
  }
  for (auto& cl : clusters) {
    std::vector<double> a;
    for (auto m : cl.members) a.push_back(angles[m]);
    cl.representative = circular_mean(a);
  }
  return clusters;
}

/// Smallest empty arc separating two adjacent clusters, measured between
/// their outermost members. Returns 2pi for fewer than two clusters.
inline double min_cluster_gap(std::span<const double> angles, const std::vector<AngleCluster>& clusters) {
  std::vector<std::pair<double, std::size_t>> pts;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (auto m : clusters[c].members) pts.emplace_back(angles[m], c);
  }
  std::sort(pts.begin(), pts.end());
  double gap = kTwoPi;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    if (a.second != b.second) gap = std::min(gap, wrap_two_pi(b.first - a.first));
  }
  return gap;
}

namespace categorizer_detail {

// Camera-frame symmetry axis from the relative rotations of all hypothesis
// pairs that are far apart; the pairwise stack averages out the noise of any
// single reference hypothesis.
inline Vec3 pairwise_axis(const HypothesisSet& h, double min_angle, const Vec3& hint) {
  std::vector<Vec3> rows;
  const auto& hs = h.hypotheses;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    for (std::size_t j = i + 1; j < hs.size(); ++j) {
      const Vec3 w = so3_log(hs[j].rotation * hs[i].rotation.transpose());
      const double n = w.norm();
      if (n > min_angle) rows.push_back(w / n);
    }
  }
  if (rows.empty()) return hint;
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (const auto& r : rows) m += r * r.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  Vec3 axis = es.eigenvectors().col(2);
  return axis.dot(hint) < 0.0 ? Vec3(-axis) : axis;
}

inline Vec3 mean_translation(const HypothesisSet& h, const std::vector<std::size_t>* subset = nullptr) {
  Vec3 sum = Vec3::Zero();
  if (subset == nullptr) {
    for (const auto& p : h.hypotheses) sum += p.translation;
    return sum / static_cast<double>(h.hypotheses.size());
  }
  for (auto i : *subset) sum += h.hypotheses[i].translation;
  return sum / static_cast<double>(subset->size());
}

inline void make_asymmetric(CategorizedDetection& d, const std::vector<std::size_t>* subset = nullptr) {
  d.symmetry_type = SymmetryType::asymmetric;
  d.axis_co.reset();
  d.body_axis.reset();
  d.angle_clusters.clear();
  std::vector<Rotation> rs;
  if (subset == nullptr) {
    for (const auto& p : d.raw.hypotheses) rs.push_back(p.rotation);
  } else {
    for (auto i : *subset) rs.push_back(d.raw.hypotheses[i].rotation);
  }
  d.full_rotation_co = average_rotations(rs);
  d.position_co = mean_translation(d.raw, subset);
}

}  // namespace categorizer_detail

inline CategorizedDetection categorize(const HypothesisSet& h, const CategorizerParams& params = {}) {
  namespace cd = categorizer_detail;
  CategorizedDetection d;
  d.class_label = h.class_label;
  d.raw = h;
  const auto rel = relative_rotations(h);
  const std::size_t n = h.hypotheses.size();
  d.hypothesis_cluster.assign(n, -1);

  // Stage 1: unimodality.
  double max_angle = 0.0;
  for (const auto& w : rel) max_angle = std::max(max_angle, w.norm());
  d.max_angle = max_angle;
  {
    std::vector<Vec3> units;
    for (const auto& w : rel) {
      if (w.norm() > 1e-6) units.push_back(w.normalized());
    }
    if (!units.empty()) {
      Eigen::MatrixX3d a(static_cast<Eigen::Index>(units.size()), 3);
      for (std::size_t i = 0; i < units.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = units[i].transpose();
      d.dispersion = Eigen::JacobiSVD<Eigen::MatrixX3d>(a).singularValues()[0] / static_cast<double>(units.size());
    }
  }
  if (max_angle < params.asym_angle) {
    cd::make_asymmetric(d);
    return d;
  }

  // Stage 2: axis, angles, clusters.
  Vec3 l;
  try {
    l = estimate_axis(rel, params.axis_min_angle);
  } catch (const NoRotationDispersion&) {
    cd::make_asymmetric(d);
    return d;
  }
  d.hypothesis_angles = symmetry_angles(rel, l);
  std::vector<AngleCluster> clusters;
  try {
    clusters = cluster_angles(d.hypothesis_angles, params.dbscan_eps, params.dbscan_min_pts);
  } catch (const EmptyClustering&) {
    cd::make_asymmetric(d);
    return d;
  }
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (auto m : clusters[c].members) d.hypothesis_cluster[m] = static_cast<int>(c);
  }

  d.body_axis = l;
  d.position_co = cd::mean_translation(h);
  d.axis_co = cd::pairwise_axis(h, params.axis_min_angle, h.hypotheses.front().rotation * l);

  // Stage 3: discrete vs continuous.
  if (clusters.size() == 1) {
    double spread = 0.0;
    for (auto m : clusters[0].members)
      spread = std::max(spread, circular_distance(d.hypothesis_angles[m], clusters[0].representative));
    if (spread < params.asym_angle) {
      // One tight mode plus outliers.
      cd::make_asymmetric(d, &clusters[0].members);
    } else {
      d.symmetry_type = SymmetryType::continuous;
    }
    return d;
  }
  const double gap = min_cluster_gap(d.hypothesis_angles, clusters);
  if (gap > params.gap_min && static_cast<int>(clusters.size()) <= params.max_clusters) {
    d.symmetry_type = SymmetryType::discrete;
    for (const auto& c : clusters) d.angle_clusters.push_back(c.representative);
  } else {
    d.symmetry_type = SymmetryType::continuous;
  }
  return d;
}

}  // namespace symslam
