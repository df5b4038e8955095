#pragma once

// Seed x pipeline benchmark matrix. Each seed's scenario is generated once
// and handed unchanged to every pipeline.

#include "symslam/hypothesis_sim.hpp"
#include "symslam/metrics.hpp"
#include "symslam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace symslam {

struct BenchOptions {
  std::vector<PipelineKind> pipelines{PipelineKind::proposed, PipelineKind::single_hypothesis,
                                      PipelineKind::multi_hypothesis};
  int seeds = 20;
  RunOptions run;
};

struct PipelineSummary {
  std::string pipeline;
  int runs = 0;
  int failures = 0;
  int single_object_runs = 0;  // map holds exactly as many objects as the scene
  double median_camera_rmse_t = 0.0;  // failed runs count as +inf
  double median_object_rmse_t = 0.0;
};

struct BenchResult {
  std::vector<std::vector<MetricsReport>> runs;  // [seed][pipeline]
  std::vector<Comparison> comparisons;           // per seed
  std::vector<PipelineSummary> summary;
  std::string summary_csv;
  std::string summary_text;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  const double a = v[n / 2 - 1];
  const double b = v[n / 2];
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) ? a : b;
  return 0.5 * (a + b);
}

/// Mean translation RMSE over the scene's objects; +inf for failed runs.
inline double object_rmse(const MetricsReport& r) {
  if (r.failed || r.objects.empty()) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (const auto& [id, o] : r.objects) s += o.rmse_t;
  return s / static_cast<double>(r.objects.size());
}

inline BenchResult run_bench(const ScenarioConfig& config, const BenchOptions& opt) {
  if (opt.seeds < 1) throw ValidationError("bench needs at least one seed");
  if (opt.pipelines.empty()) throw ValidationError("bench needs at least one pipeline");
  BenchResult out;
  for (int k = 0; k < opt.seeds; ++k) {
    ScenarioConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(k);
    const Scenario sc = generate_scenario(c);
    std::vector<MetricsReport> row;
    for (auto p : opt.pipelines) {
      RunOptions ro = opt.run;
      ro.pipeline = p;
      row.push_back(run_pipeline(sc, ro).metrics);
    }
    if (row.size() >= 2) out.comparisons.push_back(compare_runs(row));
    out.runs.push_back(std::move(row));
  }

  for (std::size_t i = 0; i < opt.pipelines.size(); ++i) {
    PipelineSummary s;
    s.pipeline = to_string(opt.pipelines[i]);
    std::vector<double> cam;
    std::vector<double> obj;
    for (const auto& row : out.runs) {
      const auto& r = row[i];
      ++s.runs;
      s.failures += r.failed ? 1 : 0;
      s.single_object_runs += r.map_objects == static_cast<int>(config.objects.size()) ? 1 : 0;
      cam.push_back(r.failed ? std::numeric_limits<double>::infinity() : r.camera_rmse_t);
      obj.push_back(object_rmse(r));
    }
    s.median_camera_rmse_t = median(cam);
    s.median_object_rmse_t = median(obj);
    out.summary.push_back(s);
  }

  auto fmt = [](double v) {
    if (!std::isfinite(v)) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
  };
  std::ostringstream csv;
  csv << "pipeline,runs,failures,single_object_runs,median_camera_rmse_t,median_object_rmse_t\n";
  std::ostringstream txt;
  txt << config.name << " (" << opt.seeds << " seeds from " << config.seed << ", " << to_string(opt.run.mode) << ")\n";
  txt << std::left << std::setw(10) << "pipeline" << std::right << std::setw(8) << "fail" << std::setw(10) << "1-object"
      << std::setw(14) << "cam_rmse_t" << std::setw(14) << "obj_rmse_t" << "\n";
  for (const auto& s : out.summary) {
    csv << s.pipeline << "," << s.runs << "," << s.failures << "," << s.single_object_runs << ","
        << fmt(s.median_camera_rmse_t) << "," << fmt(s.median_object_rmse_t) << "\n";
    txt << std::left << std::setw(10) << s.pipeline << std::right << std::setw(8) << s.failures << std::setw(10)
        << s.single_object_runs << std::setw(14) << fmt(s.median_camera_rmse_t) << std::setw(14)
        << fmt(s.median_object_rmse_t) << "\n";
  }
  out.summary_csv = csv.str();
  out.summary_text = txt.str();
  return out;
}

}  // namespace symslam
