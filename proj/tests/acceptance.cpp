// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
//
//   acceptance [--only N]... [--known-failure N]...
//
// Exit status is nonzero when a criterion fails that is not listed with
// --known-failure. Known failures still print FAIL.

#include "oracles.hpp"
#include "scenes.hpp"
#include "symslam/bench.hpp"
#include "symslam/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace symslam;
namespace fs = std::filesystem;

namespace {

// Criterion 1
constexpr int kCaseStudySeeds = 20;
constexpr double kSingleObjectShare = 0.90;
constexpr double kBaselineSplitShare = 0.70;
constexpr double kObjectErrorRatio = 0.5;
constexpr double kCaseStudySeconds = 120.0;
// Criterion 2
constexpr int kFullSlamSeeds = 20;
constexpr double kCompletionShare = 0.90;
constexpr double kBaselineFailureShare = 0.50;
constexpr double kFullSlamSeconds = 600.0;
// Criterion 3
constexpr int kSetsPerType = 1000;
constexpr double kAccuracy = 0.95;
constexpr double kCategorizerSeconds = 60.0;
// Criterion 4
constexpr int kAxisOracleSets = 100;
constexpr int kGridPoints = 10000;
// Criterion 5
constexpr double kGaugeTol = 1e-6;
constexpr double kAngleInvarianceTol = 1e-6;
constexpr double kJacobianRelTol = 1e-4;
constexpr double kReductionTol = 1e-6;
// Criterion 6
constexpr int kLieSamples = 1000;
constexpr double kRoundTripTol = 1e-9;
constexpr double kAxiomTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> extra;  // printed indented under the verdict
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

std::string config_path(const std::string& name) { return std::string(SYMSLAM_SOURCE_DIR) + "/configs/" + name; }

std::pair<ScenarioConfig, RunOptions> load(const std::string& name) {
  const auto j = io::read_json_file(config_path(name));
  return {io::scenario_config_from_json(j), j.contains("run") ? io::run_options_from_json(j["run"]) : RunOptions{}};
}

const MetricsReport& report_of(const std::vector<MetricsReport>& seed_runs, const std::string& pipeline) {
  for (const auto& r : seed_runs) {
    if (r.pipeline == pipeline) return r;
  }
  throw std::logic_error("no report for " + pipeline);
}

double camera_rmse_or_inf(const MetricsReport& r) {
  return r.failed || !std::isfinite(r.camera_rmse_t) ? std::numeric_limits<double>::infinity() : r.camera_rmse_t;
}

Outcome case_study() {
  const auto t0 = Clock::now();
  auto [config, run] = load("disc_case_study.json");
  BenchOptions bo;
  bo.seeds = kCaseStudySeeds;
  bo.run = run;
  const auto br = run_bench(config, bo);
  const double elapsed = seconds_since(t0);

  std::map<std::string, int> single;
  std::map<std::string, int> split;
  std::map<std::string, std::vector<double>> err;
  for (const auto& seed_runs : br.runs) {
    for (const auto& r : seed_runs) {
      single[r.pipeline] += !r.failed && r.map_objects == 1;
      split[r.pipeline] += r.map_objects >= 2;
      err[r.pipeline].push_back(object_rmse(r));
    }
  }
  const double n = kCaseStudySeeds;
  const double med_p = median(err["proposed"]);
  const double med_sh = median(err["SH"]);
  const double med_mh = median(err["MH"]);
  const bool tracking = single["proposed"] >= kSingleObjectShare * n && split["SH"] >= kBaselineSplitShare * n &&
                        split["MH"] >= kBaselineSplitShare * n;
  const bool ratio_sh = med_p <= kObjectErrorRatio * med_sh;
  const bool ratio_mh = med_p <= kObjectErrorRatio * med_mh;
  Outcome o;
  o.pass = tracking && ratio_sh && ratio_mh && elapsed <= kCaseStudySeconds;
  o.detail = "proposed single-object " + std::to_string(single["proposed"]) + "/20, SH split " +
             std::to_string(split["SH"]) + "/20, MH split " + std::to_string(split["MH"]) + "/20; median object error " +
             fmt(med_p) + " vs SH " + fmt(med_sh) + " (ratio " + fmt(med_p / med_sh, 2) + ") and MH " + fmt(med_mh) +
             " (ratio " + fmt(med_p / med_mh, 2) + "), need ratio <= " + fmt(kObjectErrorRatio) + "; " +
             fmt(elapsed, 2) + " s";
  return o;
}

Outcome full_slam() {
  const auto t0 = Clock::now();
  std::map<std::string, int> completed;
  std::map<std::string, int> failed;
  {
    auto [config, run] = load("disc_full_slam.json");
    BenchOptions bo;
    bo.seeds = kFullSlamSeeds;
    bo.run = run;
    for (const auto& seed_runs : run_bench(config, bo).runs) {
      for (const auto& r : seed_runs) {
        completed[r.pipeline] += std::isfinite(camera_rmse_or_inf(r));
        failed[r.pipeline] += r.failed;
      }
    }
  }
  std::map<std::string, std::vector<double>> cts;
  {
    auto [config, run] = load("cts_full_slam.json");
    BenchOptions bo;
    bo.seeds = kFullSlamSeeds;
    bo.run = run;
    for (const auto& seed_runs : run_bench(config, bo).runs) {
      for (const auto& p : {"proposed", "SH", "MH"}) cts[p].push_back(camera_rmse_or_inf(report_of(seed_runs, p)));
    }
  }
  const double elapsed = seconds_since(t0);
  const double n = kFullSlamSeeds;
  const double p = median(cts["proposed"]);
  const double mh = median(cts["MH"]);
  const double sh = median(cts["SH"]);
  const bool disc = completed["proposed"] >= kCompletionShare * n && failed["SH"] >= kBaselineFailureShare * n &&
                    failed["MH"] >= kBaselineFailureShare * n;
  const bool order = p <= mh && mh <= sh;
  Outcome o;
  o.pass = disc && order && elapsed <= kFullSlamSeconds;
  o.detail = "disc: proposed finite " + std::to_string(completed["proposed"]) + "/20, SH failed " +
             std::to_string(failed["SH"]) + "/20, MH failed " + std::to_string(failed["MH"]) +
             "/20; cts median camera RMSE proposed " + fmt(p) + " <= MH " + fmt(mh) + " <= SH " + fmt(sh) + "; " +
             fmt(elapsed, 2) + " s";
  return o;
}

HypothesisSet default_noise_set(const SymmetrySpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const Pose truth{oracle::random_rotation(rng), Vec3(0.2, -0.1, 2.0)};
  HypothesisSet h;
  h.class_label = "object";
  h.hypotheses = sample_hypotheses(truth, spec, Vec3::UnitZ(), NoiseModel{}, 30, rng);
  return h;
}

Outcome categorizer_accuracy() {
  const auto t0 = Clock::now();
  const std::vector<SymmetryType> types{SymmetryType::asymmetric, SymmetryType::discrete, SymmetryType::continuous};
  std::map<SymmetryType, std::map<SymmetryType, int>> confusion;
  for (const auto truth : types) {
    for (int s = 0; s < kSetsPerType; ++s) {
      // Discrete sets cycle through 2-, 3- and 4-fold objects.
      const SymmetrySpec spec = truth == SymmetryType::discrete     ? SymmetrySpec::discrete(2 + s % 3)
                                : truth == SymmetryType::continuous ? SymmetrySpec::continuous()
                                                                    : SymmetrySpec::asymmetric();
      const auto h = default_noise_set(spec, 500000 + static_cast<std::uint64_t>(s));
      ++confusion[truth][categorize(h).symmetry_type];
    }
  }
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = elapsed <= kCategorizerSeconds;
  std::ostringstream acc;
  std::ostringstream table;
  table << std::left << std::setw(12) << "truth\\pred";
  for (auto t : types) table << std::setw(12) << to_string(t);
  o.extra.push_back(table.str());
  for (auto truth : types) {
    const double a = static_cast<double>(confusion[truth][truth]) / kSetsPerType;
    o.pass = o.pass && a >= kAccuracy;
    acc << to_string(truth) << " " << fmt(100.0 * a, 4) << "% ";
    std::ostringstream row;
    row << std::left << std::setw(12) << to_string(truth);
    for (auto pred : types) row << std::setw(12) << confusion[truth][pred];
    o.extra.push_back(row.str());
  }
  o.detail = acc.str() + "(need >= " + fmt(100.0 * kAccuracy) + "%); " + fmt(elapsed, 2) + " s";
  return o;
}

Outcome axis_oracle() {
  const auto grid = oracle::fibonacci_sphere(kGridPoints);
  const double tol = oracle::grid_resolution(grid);
  double worst = 0.0;
  int ok = 0;
  for (int t = 0; t < kAxisOracleSets; ++t) {
    const auto spec = t % 2 == 0 ? SymmetrySpec::discrete(2 + (t / 2) % 3) : SymmetrySpec::continuous();
    const auto rel = relative_rotations(default_noise_set(spec, 700000 + static_cast<std::uint64_t>(t)));
    std::vector<Vec3> units;
    for (const auto& w : rel) {
      if (w.norm() > 1e-6) units.push_back(w.normalized());
    }
    const double e = line_angle(estimate_axis(rel), oracle::grid_axis(units, grid));
    worst = std::max(worst, e);
    ok += e <= tol;
  }
  return {ok == kAxisOracleSets,
          std::to_string(ok) + "/" + std::to_string(kAxisOracleSets) + " sets within grid resolution " +
              fmt(rad2deg(tol)) + " deg, worst " + fmt(rad2deg(worst)) + " deg",
          {}};
}

Outcome optimizer_invariants() {
  using namespace scenes;
  std::vector<std::string> failures;

  // Accepted cost never increases.
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Graph g = mixed_scene(seed);
    const auto report = optimize(g);
    double previous = report.initial_cost;
    for (const auto& it : report.iterations) {
      if (it.cost > previous) failures.push_back("cost increased (seed " + std::to_string(seed) + ")");
      previous = it.cost;
      ++accepted;
    }
  }

  // Gauge: single-hypothesis edges so the optimum is unique.
  OptimizerParams tight;
  tight.relative_cost_tol = 1e-16;
  tight.gradient_tol = 1e-14;
  tight.max_iterations = 300;
  double gauge_err = 0.0;
  std::mt19937_64 rng(10);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Graph a = mixed_scene(seed);
    for (auto& e : a.edges) {
      if (e.hypotheses.size() > 1) e.hypotheses.resize(1);
    }
    const Pose gauge = oracle::random_pose(rng);
    Graph b = gauge_transformed(a, gauge);
    optimize(a, tight);
    optimize(b, tight);
    for (const auto& [id, c] : a.state.cameras) {
      const Pose expected = gauge * c;
      gauge_err = std::max({gauge_err, (b.state.cameras.at(id).translation - expected.translation).norm(),
                            rotation_distance(b.state.cameras.at(id).rotation, expected.rotation)});
    }
    for (const auto& [id, o] : a.state.objects) {
      gauge_err = std::max(gauge_err, (b.state.objects.at(id).translation() - gauge * o.translation()).norm());
    }
  }
  if (gauge_err > kGaugeTol) failures.push_back("gauge " + fmt(gauge_err));

  // Continuous residual is blind to the angle about the axis.
  double angle_err = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    Graph a = bottle_graph(false, seed);
    Graph b = bottle_graph(true, seed);
    optimize(a, tight);
    optimize(b, tight);
    angle_err = std::max({angle_err, (a.state.objects.at(0).position - b.state.objects.at(0).position).norm(),
                          line_angle(a.state.objects.at(0).axis(), b.state.objects.at(0).axis())});
  }
  if (angle_err > kAngleInvarianceTol) failures.push_back("angle invariance " + fmt(angle_err));

  // Solver Jacobian against an independent five-point stencil.
  double jac_err = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Graph g = mixed_scene(seed);
    const Eigen::MatrixXd ref = five_point_jacobian(g, 1e-4);
    jac_err = std::max(jac_err, (jacobian(g) - ref).norm() / std::max(1.0, ref.norm()));
  }
  if (jac_err > kJacobianRelTol) failures.push_back("jacobian " + fmt(jac_err));

  // Discrete estimate agrees with the continuous one on the shared 5 DoF.
  auto [disc, cts] = disc_and_cts_tables();
  optimize(disc);
  optimize(cts);
  const double reduction = std::max((disc.state.objects[0].position - cts.state.objects[0].position).norm(),
                                    line_angle(disc.state.objects[0].axis(), cts.state.objects[0].axis()));
  if (reduction > kReductionTol) failures.push_back("disc/cts reduction " + fmt(reduction));

  Outcome o;
  o.pass = failures.empty();
  o.detail = std::to_string(accepted) + " accepted steps monotone; gauge " + fmt(gauge_err) + ", angle invariance " +
             fmt(angle_err) + ", jacobian rel " + fmt(jac_err) + ", disc/cts " + fmt(reduction);
  for (const auto& f : failures) o.extra.push_back("violated: " + f);
  return o;
}

double pose_diff(const Pose& a, const Pose& b) {
  return std::max((a.rotation - b.rotation).cwiseAbs().maxCoeff(), (a.translation - b.translation).cwiseAbs().maxCoeff());
}

Outcome lie_group() {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> angle(0.0, kPi - 1e-6);
  std::uniform_real_distribution<double> phi(1e-6, kPi - 1e-6);
  std::uniform_real_distribution<double> psi(-kPi, kPi);
  double so3_rt = 0.0;
  double se3_rt = 0.0;
  double axioms = 0.0;
  double sph_rt = 0.0;
  for (int i = 0; i < kLieSamples; ++i) {
    const Vec3 w = oracle::random_unit(rng) * angle(rng);
    so3_rt = std::max({so3_rt, (so3_log(so3_exp(w)) - w).norm()});
    const Rotation r = oracle::random_rotation(rng);
    so3_rt = std::max(so3_rt, (so3_exp(so3_log(r)) - r).cwiseAbs().maxCoeff());

    Vec6 xi;
    xi << oracle::random_unit(rng) * 2.0, w;
    se3_rt = std::max(se3_rt, (se3_log(se3_exp(xi)) - xi).norm());
    const Pose p = oracle::random_pose(rng);
    se3_rt = std::max(se3_rt, pose_diff(se3_exp(se3_log(p)), p));

    const Pose a = oracle::random_pose(rng);
    const Pose b = oracle::random_pose(rng);
    const Pose c = oracle::random_pose(rng);
    axioms = std::max({axioms, pose_diff((a * b) * c, a * (b * c)), pose_diff(a * Pose::identity(), a),
                       pose_diff(Pose::identity() * a, a), pose_diff(a * invert(a), Pose::identity()),
                       pose_diff(invert(a) * a, Pose::identity())});

    const SphericalAxis s{phi(rng), psi(rng)};
    const auto back = vector_to_axis(axis_to_vector(s));
    sph_rt = std::max({sph_rt, std::abs(back.phi - s.phi), std::abs(std::remainder(back.psi - s.psi, kTwoPi))});
    const Vec3 v = oracle::random_unit(rng);
    sph_rt = std::max(sph_rt, (axis_to_vector(vector_to_axis(v)) - v).norm());
  }
  Outcome o;
  o.pass = so3_rt <= kRoundTripTol && se3_rt <= kRoundTripTol && sph_rt <= kRoundTripTol && axioms <= kAxiomTol;
  o.detail = std::to_string(kLieSamples) + " samples each: SO(3) round trip " + fmt(so3_rt) + ", SE(3) round trip " +
             fmt(se3_rt) + ", spherical " + fmt(sph_rt) + " (tol " + fmt(kRoundTripTol) + "); group axioms " +
             fmt(axioms) + " (tol " + fmt(kAxiomTol) + ")";
  return o;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "symslam_acceptance_bench";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string base = std::string(SYMSLAM_CLI_PATH) + " bench -c " + config_path("disc_full_slam.json") + " -o ";
  for (const char* run : {"a", "b"}) {
    const std::string cmd = base + (dir / run).string() + " > " + (dir / "log.txt").string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "bench exited nonzero: " + read_file(dir / "log.txt"), {}};
  }
  std::vector<std::string> differing;
  std::size_t bytes = 0;
  for (const char* f : {"metrics.json", "summary.csv", "comparison.csv", "comparison.txt"}) {
    const std::string a = read_file(dir / "a" / f);
    bytes += a.size();
    if (a.empty() || a != read_file(dir / "b" / f)) differing.push_back(f);
  }
  Outcome o;
  o.pass = differing.empty();
  o.detail = o.pass ? "two bench runs byte-identical (" + std::to_string(bytes) + " bytes over 4 files)"
                    : "outputs differ or are empty";
  o.extra = differing;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::vector<int> known;
  app.add_option("--only", only, "run only these criteria")->check(CLI::Range(1, 7));
  app.add_option("--known-failure", known, "criteria whose FAIL does not affect the exit status")
      ->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"case-study tracking and object error", case_study},
      {"full-SLAM completion and ordering", full_slam},
      {"categorizer accuracy", categorizer_accuracy},
      {"axis estimate vs grid maximizer", axis_oracle},
      {"optimizer invariants", optimizer_invariants},
      {"Lie-group identities", lie_group},
      {"bench determinism", determinism},
  };
  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> expected(known.begin(), known.end());
  int passed = 0;
  int failed = 0;
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), {}};
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << criteria[i].first << ": " << o.detail;
    if (!o.pass && expected.count(id)) std::cout << " (known failure)";
    std::cout << "\n";
    for (const auto& line : o.extra) std::cout << "         " << line << "\n";
    std::cout.flush();
    (o.pass ? passed : failed)++;
    if (!o.pass && !expected.count(id)) ++unexpected;
  }
  std::cout << passed << " passed, " << failed << " failed\n";
  return unexpected == 0 ? 0 : 1;
}
