#pragma once

// Joint camera/object optimization.
//
// Camera nodes and asymmetric objects are SE(3) poses updated on the right by
// se3_exp. Symmetric objects carry position, a spherical axis (phi, psi)
// expressed in a per-node anchor frame so that the parameterization stays
// away from its poles, and for discrete objects one angle per symmetric pose.
//
// Object edges are max-mixtures: each evaluation picks the hypothesis with the
// lowest information-weighted residual and only that one is linearized.
// Jacobians are central finite differences over the active component.

#include "symslam/error.hpp"
#include "symslam/hypothesis_sim.hpp"
#include "symslam/liegroup.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <compare>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace symslam {

struct NodeKey {
  enum class Kind { camera, object };
  Kind kind = Kind::camera;
  int id = 0;

  static NodeKey camera(int id) { return {Kind::camera, id}; }
  static NodeKey object(int id) { return {Kind::object, id}; }
  auto operator<=>(const NodeKey&) const = default;
};

struct ObjectNode {
  SymmetryType type = SymmetryType::asymmetric;
  Pose pose;                         // asymmetric: object -> world
  Vec3 position = Vec3::Zero();      // symmetric
  double phi = kPi / 2.0;            // symmetric, local to `anchor`
  double psi = 0.0;
  Rotation anchor = Rotation::Identity();
  Vec3 body_axis = Vec3::UnitZ();
  std::vector<double> angles;        // discrete

  int dim() const {
    switch (type) {
      case SymmetryType::asymmetric: return 6;
      case SymmetryType::continuous: return 5;
      case SymmetryType::discrete: return 5 + static_cast<int>(angles.size());
    }
    return 0;
  }

  Vec3 axis() const { return anchor * axis_to_vector({phi, psi}); }
  Vec3 translation() const { return type == SymmetryType::asymmetric ? pose.translation : position; }

  /// Object pose of the i-th symmetric angle: [exp(theta_i * axis) * ref | t].
  Pose symmetric_pose(std::size_t i) const {
    const Vec3 a = axis();
    return {so3_exp(angles[i] * a) * align_vectors(body_axis, a), position};
  }

  /// Builds a symmetric node whose axis sits on the anchor's equator.
  static ObjectNode symmetric(SymmetryType type, const Vec3& position, const Vec3& axis_w,
                              const Vec3& body_axis, std::vector<double> angles = {}) {
    ObjectNode n;
    n.type = type;
    n.position = position;
    n.anchor = align_vectors(Vec3::UnitX(), axis_w.normalized());
    n.phi = kPi / 2.0;
    n.psi = 0.0;
    n.body_axis = body_axis.normalized();
    n.angles = std::move(angles);
    return n;
  }

  static ObjectNode asymmetric(const Pose& p) {
    ObjectNode n;
    n.type = SymmetryType::asymmetric;
    n.pose = p;
    return n;
  }

  void reanchor() {
    const Vec3 a = axis();
    anchor = align_vectors(Vec3::UnitX(), a);
    phi = kPi / 2.0;
    psi = 0.0;
  }
};

struct GraphState {
  std::map<int, Pose> cameras;         // T_wc
  std::map<int, ObjectNode> objects;
  std::set<NodeKey> fixed;

  bool is_fixed(const NodeKey& k) const { return fixed.count(k) > 0; }
};

enum class EdgeKind { odometry, asym_object, disc_object, cts_object };

inline const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::odometry: return "odometry";
    case EdgeKind::asym_object: return "asym_object";
    case EdgeKind::disc_object: return "disc_object";
    case EdgeKind::cts_object: return "cts_object";
  }
  return "unknown";
}

struct Edge {
  EdgeKind kind = EdgeKind::odometry;
  int camera = -1;       // odometry: later camera; object edges: observing camera
  int camera_from = -1;  // odometry: earlier camera
  int object = -1;
  Pose measurement;              // odometry: T_{c_from} -> T_{c}
  std::vector<Pose> hypotheses;  // object edges: camera -> object
  std::size_t angle_index = 0;   // disc edges
  Vec3 axis_co = Vec3::UnitZ();  // cts edges
  double gamma = 1.0;            // cts edges
  // Square-root information (diagonal). cts edges use entries 0..4.
  Vec6 sqrt_info = Vec6::Ones();

  int dim() const { return kind == EdgeKind::cts_object ? 5 : 6; }

  static Edge odometry(int from, int to, const Pose& z, const Vec6& sqrt_info = Vec6::Ones()) {
    Edge e;
    e.kind = EdgeKind::odometry;
    e.camera_from = from;
    e.camera = to;
    e.measurement = z;
    e.sqrt_info = sqrt_info;
    return e;
  }
};

struct Graph {
  GraphState state;
  std::vector<Edge> edges;
};

struct OptimizerParams {
  double lambda_init = 1e-4;
  double lambda_factor = 10.0;
  double lambda_max = 1e12;
  double fd_step = 1e-6;
  double relative_cost_tol = 1e-9;
  double gradient_tol = 1e-8;
  int max_iterations = 100;
  double pole_margin = deg2rad(5.0);
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double lambda = 0.0;
  int winner_switches = 0;
  double gain_ratio = 0.0;
};

struct OptimizeReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<IterationRecord> iterations;  // accepted steps only
  int rejected_steps = 0;
  std::string termination;
};

/// Residual of one edge: value plus the winning hypothesis for max-mixtures.
struct Residual {
  Eigen::VectorXd value;
  int winner = -1;
};

namespace optimizer_detail {

struct EdgeNodes {
  const Pose* camera = nullptr;
  const Pose* camera_from = nullptr;
  const ObjectNode* object = nullptr;
};

inline Eigen::VectorXd weighted(const Edge& e, const Eigen::VectorXd& r) {
  return r.cwiseProduct(e.sqrt_info.head(r.size()));
}

// Raw residual of hypothesis j (ignored for odometry).
inline Eigen::VectorXd component(const Edge& e, const EdgeNodes& n, int j) {
  switch (e.kind) {
    case EdgeKind::odometry: {
      const Pose err = invert(e.measurement) * invert(*n.camera_from) * *n.camera;
      return se3_log(err);
    }
    case EdgeKind::asym_object: {
      const Pose& hyp = e.hypotheses[static_cast<std::size_t>(j)];
      return se3_log(hyp * invert(n.object->pose) * *n.camera);
    }
    case EdgeKind::disc_object: {
      const Pose& hyp = e.hypotheses[static_cast<std::size_t>(j)];
      return se3_log(hyp * invert(n.object->symmetric_pose(e.angle_index)) * *n.camera);
    }
    case EdgeKind::cts_object: {
      const ObjectNode& o = *n.object;
      const Pose& twc = *n.camera;
      Eigen::VectorXd r(5);
      const Vec3 expected = twc.rotation.transpose() * (o.position - twc.translation);
      r.head<3>() = e.hypotheses[static_cast<std::size_t>(j)].translation - expected;
      Vec3 a = twc.rotation * e.axis_co;
      if (a.dot(o.axis()) < 0.0) a = -a;
      const SphericalAxis meas = vector_to_axis(o.anchor.transpose() * a);
      const double sg = std::sqrt(e.gamma);
      r[3] = sg * (meas.phi - o.phi);
      r[4] = sg * wrap_pi(meas.psi - o.psi);
      return r;
    }
  }
  return {};
}

inline int select_winner(const Edge& e, const EdgeNodes& n) {
  if (e.kind == EdgeKind::odometry) return -1;
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int j = 0; j < static_cast<int>(e.hypotheses.size()); ++j) {
    Eigen::VectorXd r = component(e, n, j);
    if (e.kind == EdgeKind::cts_object) r = r.head<3>().eval();
    const double c = r.cwiseProduct(e.sqrt_info.head(r.size())).squaredNorm();
    if (c < best_cost) {
      best_cost = c;
      best = j;
    }
  }
  return best;
}

inline EdgeNodes nodes_of(const Edge& e, const GraphState& s) {
  EdgeNodes n;
  auto cam = s.cameras.find(e.camera);
  if (cam == s.cameras.end()) throw GraphError("edge references unknown camera " + std::to_string(e.camera));
  n.camera = &cam->second;
  if (e.kind == EdgeKind::odometry) {
    auto from = s.cameras.find(e.camera_from);
    if (from == s.cameras.end())
      throw GraphError("edge references unknown camera " + std::to_string(e.camera_from));
    n.camera_from = &from->second;
  } else {
    auto obj = s.objects.find(e.object);
    if (obj == s.objects.end()) throw GraphError("edge references unknown object " + std::to_string(e.object));
    n.object = &obj->second;
  }
  return n;
}

inline void canonicalize(ObjectNode& o) {
  if (o.type == SymmetryType::asymmetric) return;
  double phi = std::fmod(o.phi, kTwoPi);
  if (phi < 0.0) phi += kTwoPi;
  double psi = o.psi;
  if (phi > kPi) {
    phi = kTwoPi - phi;
    psi += kPi;
  }
  o.phi = phi;
  o.psi = wrap_pi(psi);
  for (double& a : o.angles) a = wrap_two_pi(a);
}

inline void apply_increment(Pose& p, const Eigen::Ref<const Eigen::VectorXd>& d) {
  p = p * se3_exp(d.head<6>());
}

inline void apply_increment(ObjectNode& o, const Eigen::Ref<const Eigen::VectorXd>& d) {
  if (o.type == SymmetryType::asymmetric) {
    o.pose = o.pose * se3_exp(d.head<6>());
    return;
  }
  o.position += d.head<3>();
  o.phi += d[3];
  o.psi += d[4];
  for (std::size_t i = 0; i < o.angles.size(); ++i) o.angles[i] += d[5 + static_cast<Eigen::Index>(i)];
}

struct Layout {
  std::map<NodeKey, std::pair<int, int>> blocks;  // offset, dim
  int total = 0;
};

inline Layout make_layout(const GraphState& s) {
  Layout l;
  for (const auto& [id, pose] : s.cameras) {
    const NodeKey k = NodeKey::camera(id);
    if (s.is_fixed(k)) continue;
    l.blocks[k] = {l.total, 6};
    l.total += 6;
  }
  for (const auto& [id, obj] : s.objects) {
    const NodeKey k = NodeKey::object(id);
    if (s.is_fixed(k)) continue;
    l.blocks[k] = {l.total, obj.dim()};
    l.total += obj.dim();
  }
  return l;
}

inline std::vector<NodeKey> keys_of(const Edge& e) {
  if (e.kind == EdgeKind::odometry) return {NodeKey::camera(e.camera_from), NodeKey::camera(e.camera)};
  return {NodeKey::camera(e.camera), NodeKey::object(e.object)};
}

struct Evaluation {
  std::vector<int> winners;
  std::vector<Eigen::VectorXd> residuals;  // weighted
  double cost = 0.0;
};

inline Evaluation evaluate_all(const std::vector<Edge>& edges, const GraphState& s) {
  Evaluation ev;
  ev.winners.reserve(edges.size());
  ev.residuals.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const EdgeNodes n = nodes_of(e, s);
    const int w = select_winner(e, n);
    Eigen::VectorXd r = weighted(e, component(e, n, w));
    if (!r.allFinite()) {
      throw NumericError("non-finite residual on edge " + std::to_string(i) + " (" + to_string(e.kind) + ")");
    }
    ev.cost += r.squaredNorm();
    ev.winners.push_back(w);
    ev.residuals.push_back(std::move(r));
  }
  return ev;
}

// Central-difference Jacobian of the weighted residual of edge e with respect
// to one node, holding the max-mixture winner fixed.
inline Eigen::MatrixXd node_jacobian(const Edge& e, const GraphState& s, const NodeKey& key, int dim, int winner,
                                     double h) {
  Eigen::MatrixXd jac(e.dim(), dim);
  EdgeNodes base = nodes_of(e, s);
  Eigen::VectorXd step = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < dim; ++k) {
    step.setZero();
    Eigen::VectorXd plus;
    Eigen::VectorXd minus;
    if (key.kind == NodeKey::Kind::camera) {
      const bool is_from = e.kind == EdgeKind::odometry && key.id == e.camera_from;
      Pose p = is_from ? *base.camera_from : *base.camera;
      Pose m = p;
      step[k] = h;
      apply_increment(p, step);
      step[k] = -h;
      apply_increment(m, step);
      EdgeNodes np = base;
      EdgeNodes nm = base;
      (is_from ? np.camera_from : np.camera) = &p;
      (is_from ? nm.camera_from : nm.camera) = &m;
      plus = weighted(e, component(e, np, winner));
      minus = weighted(e, component(e, nm, winner));
    } else {
      ObjectNode p = *base.object;
      ObjectNode m = p;
      step[k] = h;
      apply_increment(p, step);
      step[k] = -h;
      apply_increment(m, step);
      EdgeNodes np = base;
      EdgeNodes nm = base;
      np.object = &p;
      nm.object = &m;
      plus = weighted(e, component(e, np, winner));
      minus = weighted(e, component(e, nm, winner));
    }
    jac.col(k) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

inline void validate(const Graph& g) {
  bool any_fixed_camera = false;
  for (const auto& [id, pose] : g.state.cameras) {
    if (g.state.is_fixed(NodeKey::camera(id))) any_fixed_camera = true;
  }
  if (!any_fixed_camera) throw GraphError("graph has no fixed camera node (gauge is free)");
  std::set<int> touched;
  for (const auto& e : g.edges) {
    nodes_of(e, g.state);
    if (e.kind != EdgeKind::odometry) {
      if (e.hypotheses.empty()) throw GraphError("object edge without hypotheses");
      const auto& obj = g.state.objects.at(e.object);
      if (e.kind == EdgeKind::disc_object &&
          (obj.type != SymmetryType::discrete || e.angle_index >= obj.angles.size()))
        throw GraphError("disc edge references invalid angle of object " + std::to_string(e.object));
      if (e.kind == EdgeKind::asym_object && obj.type != SymmetryType::asymmetric)
        throw GraphError("asym edge on symmetric object " + std::to_string(e.object));
      if (e.kind == EdgeKind::cts_object && obj.type == SymmetryType::asymmetric)
        throw GraphError("cts edge on asymmetric object " + std::to_string(e.object));
      touched.insert(e.object);
    }
  }
  for (const auto& [id, obj] : g.state.objects) {
    if (!touched.count(id)) throw GraphError("object " + std::to_string(id) + " is not reachable by any edge");
  }
}

}  // namespace optimizer_detail

inline Residual residual_odom(const Edge& e, const GraphState& s) {
  namespace od = optimizer_detail;
  return {od::component(e, od::nodes_of(e, s), -1), -1};
}

/// Max-mixture residual against the object's full pose.
inline Residual residual_asym(const Edge& e, const GraphState& s) {
  namespace od = optimizer_detail;
  const auto n = od::nodes_of(e, s);
  const int w = od::select_winner(e, n);
  return {od::component(e, n, w), w};
}

/// Max-mixture residual against the edge's symmetric pose of a discrete object.
inline Residual residual_disc(const Edge& e, const GraphState& s) { return residual_asym(e, s); }

/// Translation (winning hypothesis) and axis error of a symmetric object, with
/// the axis block already scaled by sqrt(gamma).
inline Residual residual_cts(const Edge& e, const GraphState& s) { return residual_asym(e, s); }

inline Residual residual(const Edge& e, const GraphState& s) {
  return e.kind == EdgeKind::odometry ? residual_odom(e, s) : residual_asym(e, s);
}

/// Weighted total cost sum ||W r||^2.
inline double total_cost(const Graph& g) { return optimizer_detail::evaluate_all(g.edges, g.state).cost; }

/// Dense Jacobian of all weighted residuals w.r.t. the free parameters, with
/// winners selected at the current state. Rows follow edge order.
inline Eigen::MatrixXd jacobian(const Graph& g, double h = 1e-6) {
  namespace od = optimizer_detail;
  const auto layout = od::make_layout(g.state);
  const auto ev = od::evaluate_all(g.edges, g.state);
  int rows = 0;
  for (const auto& e : g.edges) rows += e.dim();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(rows, layout.total);
  int row = 0;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    for (const auto& key : od::keys_of(e)) {
      auto it = layout.blocks.find(key);
      if (it == layout.blocks.end()) continue;
      j.block(row, it->second.first, e.dim(), it->second.second) =
          od::node_jacobian(e, g.state, key, it->second.second, ev.winners[i], h);
    }
    row += e.dim();
  }
  return j;
}

/// Levenberg-Marquardt over all non-fixed nodes. Mutates g.state.
inline OptimizeReport optimize(Graph& g, const OptimizerParams& params = {}) {
  namespace od = optimizer_detail;
  od::validate(g);
  OptimizeReport report;
  const auto layout = od::make_layout(g.state);
  auto ev = od::evaluate_all(g.edges, g.state);
  report.initial_cost = report.final_cost = ev.cost;
  if (layout.total == 0) {
    report.termination = "no_free_parameters";
    return report;
  }

  double lambda = params.lambda_init;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    if (ev.cost == 0.0) {
      report.termination = "zero_cost";
      break;
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(layout.total, layout.total);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout.total);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      const auto& e = g.edges[i];
      std::vector<std::pair<int, Eigen::MatrixXd>> blocks;
      for (const auto& key : od::keys_of(e)) {
        auto it = layout.blocks.find(key);
        if (it == layout.blocks.end()) continue;
        blocks.emplace_back(it->second.first,
                            od::node_jacobian(e, g.state, key, it->second.second, ev.winners[i], params.fd_step));
      }
      for (const auto& [oa, ja] : blocks) {
        grad.segment(oa, ja.cols()) += ja.transpose() * ev.residuals[i];
        for (const auto& [ob, jb] : blocks) h.block(oa, ob, ja.cols(), jb.cols()) += ja.transpose() * jb;
      }
    }
    if (grad.lpNorm<Eigen::Infinity>() < params.gradient_tol) {
      report.termination = "gradient";
      break;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = h;
      for (int k = 0; k < layout.total; ++k) damped(k, k) += lambda * std::max(h(k, k), 1e-12);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd delta = ldlt.solve(-grad);
      const bool solved = ldlt.info() == Eigen::Success && delta.allFinite();
      if (solved) {
        GraphState trial = g.state;
        for (const auto& [key, block] : layout.blocks) {
          const auto seg = delta.segment(block.first, block.second);
          if (key.kind == NodeKey::Kind::camera) {
            od::apply_increment(trial.cameras.at(key.id), seg);
          } else {
            auto& o = trial.objects.at(key.id);
            od::apply_increment(o, seg);
            od::canonicalize(o);
          }
        }
        const double predicted = -(2.0 * grad.dot(delta) + delta.dot(h * delta));
        auto trial_ev = od::evaluate_all(g.edges, trial);
        const double actual = ev.cost - trial_ev.cost;
        if (actual > 0.0) {
          int switches = 0;
          for (std::size_t i = 0; i < ev.winners.size(); ++i) switches += ev.winners[i] != trial_ev.winners[i];
          for (auto& [id, o] : trial.objects) {
            if (o.type != SymmetryType::asymmetric &&
                (o.phi < params.pole_margin || o.phi > kPi - params.pole_margin))
              o.reanchor();
          }
          const double previous = ev.cost;
          g.state = std::move(trial);
          ev = std::move(trial_ev);
          lambda = std::max(lambda / params.lambda_factor, 1e-12);
          report.iterations.push_back({iter, ev.cost, lambda, switches, predicted > 0.0 ? actual / predicted : 0.0});
          accepted = true;
          if (actual / previous < params.relative_cost_tol) {
            report.termination = "relative_cost";
          }
          continue;
        }
      }
      ++report.rejected_steps;
      lambda *= params.lambda_factor;
      if (lambda > params.lambda_max) break;
    }
    if (!accepted) {
      report.termination = "lambda";
      break;
    }
    if (!report.termination.empty()) break;
  }
  if (report.termination.empty()) report.termination = "max_iterations";
  report.final_cost = ev.cost;
  return report;
}

/// Optimizes the last `window_size` cameras and every object they observe;
/// everything else stays fixed. Edges touching a free node are kept.
inline OptimizeReport windowed_solve(Graph& g, int window_size, const OptimizerParams& params = {}) {
  namespace od = optimizer_detail;
  if (window_size < 1) throw ValidationError("window size must be >= 1");
  std::set<int> window;
  for (auto it = g.state.cameras.rbegin(); it != g.state.cameras.rend() && static_cast<int>(window.size()) < window_size;
       ++it)
    window.insert(it->first);

  std::set<NodeKey> free;
  for (int id : window) {
    if (!g.state.is_fixed(NodeKey::camera(id))) free.insert(NodeKey::camera(id));
  }
  for (const auto& e : g.edges) {
    if (e.kind == EdgeKind::odometry || !window.count(e.camera)) continue;
    const NodeKey k = NodeKey::object(e.object);
    if (!g.state.is_fixed(k)) free.insert(k);
  }
  if (free.empty()) return {};

  Graph sub;
  for (const auto& e : g.edges) {
    bool touches = false;
    for (const auto& k : od::keys_of(e)) touches = touches || free.count(k) > 0;
    if (!touches) continue;
    sub.edges.push_back(e);
    for (const auto& k : od::keys_of(e)) {
      if (k.kind == NodeKey::Kind::camera) {
        sub.state.cameras[k.id] = g.state.cameras.at(k.id);
      } else {
        sub.state.objects[k.id] = g.state.objects.at(k.id);
      }
      if (!free.count(k)) sub.state.fixed.insert(k);
    }
  }
  // A window without any fixed camera in reach anchors its oldest camera.
  bool has_fixed_camera = false;
  for (const auto& [id, p] : sub.state.cameras) has_fixed_camera = has_fixed_camera || sub.state.is_fixed(NodeKey::camera(id));
  if (!has_fixed_camera && !sub.state.cameras.empty()) {
    const int oldest = sub.state.cameras.begin()->first;
    sub.state.fixed.insert(NodeKey::camera(oldest));
    free.erase(NodeKey::camera(oldest));
  }

  auto report = optimize(sub, params);
  for (const auto& k : free) {
    if (k.kind == NodeKey::Kind::camera) {
      g.state.cameras[k.id] = sub.state.cameras.at(k.id);
    } else {
      g.state.objects[k.id] = sub.state.objects.at(k.id);
    }
  }
  return report;
}

}  // namespace symslam
