#include "jr/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jr {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean_of: empty list");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

std::string format_mean_std(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f(%.3f)", mean, stddev);
  return buf;
}

std::string format_mean_std(const std::vector<double>& values) {
  return format_mean_std(mean_of(values), population_std(values));
}

RepeatedResult run_repeated(const Dataset& ds, const TrainConfig& cfg,
                            std::size_t n_runs, std::uint64_t base_seed,
                            bool keep_runs) {
  if (n_runs < 1) throw std::invalid_argument("run_repeated: n_runs >= 1");
  RepeatedResult res;
  res.report.method = variant_name(cfg.variant);
  for (std::size_t r = 0; r < n_runs; ++r) {
    const std::uint64_t seed = base_seed + r;
    try {
      const SplitResult split = split_dataset(ds, 0.70, 0.15, 0.15, seed);
      TrainConfig run_cfg = cfg;
      run_cfg.seed = seed;
      TrainOutput out = train(split.train, split.val, run_cfg);
      EvalResult eval = evaluate_model(out.result.best, split.test, out.norm);
      res.report.seeds.push_back(seed);
      res.report.auroc_runs.push_back(eval.auroc);
      res.report.auprc_runs.push_back(eval.auprc);
      if (keep_runs) {
        res.runs.push_back({seed, std::move(out), std::move(eval)});
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("run " + std::to_string(r) + " (seed " +
                               std::to_string(seed) + ") failed: " + e.what());
    }
  }
  return res;
}

EvalReport run_repeated_baseline(const Dataset& ds, const TrainConfig& cfg,
                                 BaselineMethod method, std::size_t n_runs,
                                 std::uint64_t base_seed, std::size_t knn_k) {
  if (n_runs < 1) throw std::invalid_argument("run_repeated_baseline: n_runs >= 1");
  EvalReport report;
  report.method = baseline_name(method);
  for (std::size_t r = 0; r < n_runs; ++r) {
    const std::uint64_t seed = base_seed + r;
    try {
      const SplitResult split = split_dataset(ds, 0.70, 0.15, 0.15, seed);
      TrainConfig run_cfg = cfg;
      run_cfg.seed = seed;
      const BaselineRun run =
          baseline_predict(method, split.train, split.val, split.test, run_cfg, knn_k);
      report.seeds.push_back(seed);
      report.auroc_runs.push_back(run.test_auroc);
      report.auprc_runs.push_back(run.test_auprc);
    } catch (const std::exception& e) {
      throw std::runtime_error("baseline run " + std::to_string(r) + " (seed " +
                               std::to_string(seed) + ") failed: " + e.what());
    }
  }
  return report;
}

std::string report_table_markdown(const std::vector<EvalReport>& reports,
                                  const std::string& title) {
  std::ostringstream out;
  out << "| " << title << " | AUROC | AUPRC |\n|---|---|---|\n";
  for (const auto& r : reports) {
    out << "| " << r.method << " | " << r.auroc_cell() << " | " << r.auprc_cell()
        << " |\n";
  }
  return out.str();
}

std::string report_table_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "method,auroc_mean,auroc_std,auprc_mean,auprc_std,n_runs\n";
  out.precision(10);
  for (const auto& r : reports) {
    out << r.method << "," << mean_of(r.auroc_runs) << ","
        << population_std(r.auroc_runs) << "," << mean_of(r.auprc_runs) << ","
        << population_std(r.auprc_runs) << "," << r.auroc_runs.size() << "\n";
  }
  return out.str();
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot move file into place: " + path);
  }
}

}  // namespace jr
