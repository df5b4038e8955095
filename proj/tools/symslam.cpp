// symslam: simulate scenarios, run pipelines, benchmark and re-score runs.

#include "symslam/bench.hpp"
#include "symslam/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace symslam;
using json = io::json;

namespace {

struct Config {
  ScenarioConfig scenario;
  RunOptions run;
};

Config load_config(const std::string& path) {
  const json j = io::read_json_file(path);
  Config c;
  c.scenario = io::scenario_config_from_json(j);
  if (j.contains("run")) c.run = io::run_options_from_json(j["run"]);
  return c;
}

bool is_dump(const std::string& path) { return fs::path(path).extension() == ".jsonl"; }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create directory '" + dir + "': " + ec.message());
}

void write_run_outputs(const RunResult& r, const std::string& dir) {
  ensure_dir(dir);
  io::write_text(dir + "/metrics.json", io::to_json(r.metrics).dump(2) + "\n");
  io::write_text(dir + "/map.json", io::to_json(r.map).dump(2) + "\n");
  io::write_text(dir + "/trajectory.csv", io::trajectory_csv(r.trajectory));
  io::write_text(dir + "/objects.csv", io::tracks_csv(r.tracks));
  io::write_text(dir + "/convergence.csv", io::convergence_csv(r.convergence));
}

int fail(const std::string& kind, const std::string& what) {
  std::cerr << json{{"kind", kind}, {"error", what}}.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetry-aware object SLAM backend and benchmark"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a scenario dump (JSON lines) from a config");
  std::string sim_config;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("-c,--config", sim_config, "scenario config JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--out", sim_out, "output .jsonl path")->required();
  sim->add_option("-s,--seed", sim_seed, "override the config seed");

  // run
  auto* run = app.add_subcommand("run", "Run one pipeline on a scenario dump or config");
  std::string run_input;
  std::string run_out;
  std::string run_pipeline_name = "proposed";
  std::optional<std::string> run_mode;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_window;
  std::optional<double> run_gamma;
  run->add_option("-i,--scenario", run_input, "scenario dump (.jsonl) or config (.json)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("-o,--out", run_out, "output directory")->required();
  run->add_option("-p,--pipeline", run_pipeline_name, "proposed | SH | MH");
  run->add_option("-m,--mode", run_mode, "full-slam | case-study");
  run->add_option("-s,--seed", run_seed, "seed (config input only)");
  run->add_option("-w,--window", run_window, "optimization window size");
  run->add_option("-g,--gamma", run_gamma, "axis weight of continuous edges");

  // bench
  auto* bench = app.add_subcommand("bench", "Run pipelines over a range of seeds and compare");
  std::string bench_config;
  std::string bench_out;
  std::string bench_pipelines = "proposed,SH,MH";
  int bench_seeds = 20;
  std::optional<std::uint64_t> bench_seed;
  std::optional<std::string> bench_mode;
  bench->add_option("-c,--config", bench_config, "scenario config JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("-o,--out", bench_out, "output directory")->required();
  bench->add_option("-p,--pipelines", bench_pipelines, "comma-separated pipeline list");
  bench->add_option("-n,--seeds", bench_seeds, "number of seeds");
  bench->add_option("-s,--seed", bench_seed, "first seed (default: config seed)");
  bench->add_option("-m,--mode", bench_mode, "full-slam | case-study");

  // metrics
  auto* met = app.add_subcommand("metrics", "Recompute metrics from dumped run outputs");
  std::string met_scenario;
  std::string met_traj;
  std::string met_objects;
  std::string met_out;
  met->add_option("-i,--scenario", met_scenario, "scenario dump (.jsonl)")->required()->check(CLI::ExistingFile);
  met->add_option("-t,--trajectory", met_traj, "trajectory.csv")->required()->check(CLI::ExistingFile);
  met->add_option("-b,--objects", met_objects, "objects.csv")->check(CLI::ExistingFile);
  met->add_option("-o,--out", met_out, "write metrics JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage_error", e.what());
  }

  try {
    if (*sim) {
      Config c = load_config(sim_config);
      if (sim_seed) c.scenario.seed = *sim_seed;
      const Scenario sc = generate_scenario(c.scenario);
      io::write_text(sim_out, io::scenario_dump(sc));
      std::cout << json{{"frames", sc.frames.size()}, {"out", sim_out}}.dump() << "\n";
    } else if (*run) {
      Scenario sc;
      RunOptions opt;
      if (is_dump(run_input)) {
        sc = io::read_scenario_dump(run_input);
      } else {
        Config c = load_config(run_input);
        if (run_seed) c.scenario.seed = *run_seed;
        sc = generate_scenario(c.scenario);
        opt = c.run;
      }
      opt.pipeline = pipeline_from_string(run_pipeline_name);
      if (run_mode) opt.mode = run_mode_from_string(*run_mode);
      if (run_window) opt.window = *run_window;
      if (run_gamma) opt.gamma = *run_gamma;
      const RunResult r = run_pipeline(sc, opt);
      write_run_outputs(r, run_out);
      std::cout << json{{"pipeline", r.metrics.pipeline},
                        {"failed", r.metrics.failed},
                        {"camera_rmse_t", r.metrics.failed ? json(nullptr) : json(r.metrics.camera_rmse_t)},
                        {"map_objects", r.metrics.map_objects},
                        {"out", run_out}}
                       .dump()
                << "\n";
    } else if (*bench) {
      Config c = load_config(bench_config);
      if (bench_seed) c.scenario.seed = *bench_seed;
      BenchOptions bo;
      bo.run = c.run;
      if (bench_mode) bo.run.mode = run_mode_from_string(*bench_mode);
      bo.seeds = bench_seeds;
      bo.pipelines.clear();
      std::stringstream ss(bench_pipelines);
      std::string name;
      while (std::getline(ss, name, ',')) bo.pipelines.push_back(pipeline_from_string(name));
      const BenchResult br = run_bench(c.scenario, bo);
      ensure_dir(bench_out);
      json all = json::array();
      std::string comparisons;
      for (std::size_t k = 0; k < br.runs.size(); ++k) {
        for (const auto& m : br.runs[k]) all.push_back(io::to_json(m));
        if (k < br.comparisons.size()) comparisons += br.comparisons[k].text + "\n";
      }
      io::write_text(bench_out + "/metrics.json", all.dump(2) + "\n");
      io::write_text(bench_out + "/summary.csv", br.summary_csv);
      io::write_text(bench_out + "/comparison.txt", comparisons);
      std::string cmp_csv;
      for (const auto& cmp : br.comparisons) cmp_csv += cmp.csv + "\n";
      io::write_text(bench_out + "/comparison.csv", cmp_csv);
      std::cout << br.summary_text;
    } else if (*met) {
      const Scenario sc = io::read_scenario_dump(met_scenario);
      std::ifstream tin(met_traj);
      const auto traj = io::trajectory_from_csv(tin);
      std::vector<ObjectTrackEntry> tracks;
      if (!met_objects.empty()) {
        std::ifstream oin(met_objects);
        tracks = io::tracks_from_csv(oin);
      }
      std::vector<TrajectoryEntry> truth;
      for (const auto& f : sc.frames) truth.push_back({f.frame_id, f.true_camera_pose});
      MetricsReport m = compute_metrics(traj, truth, tracks, sc.config.objects);
      m.scenario = sc.config.name;
      m.seed = sc.config.seed;
      const std::string text = io::to_json(m).dump(2) + "\n";
      if (met_out.empty()) {
        std::cout << text;
      } else {
        io::write_text(met_out, text);
      }
      if (!m.missing_frames.empty()) {
        return fail("missing_frames", std::to_string(m.missing_frames.size()) + " frames without a counterpart");
      }
    }
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal_error", e.what());
  }
  return 0;
}
