#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jr/baselines.hpp"
#include "jr/data.hpp"
#include "jr/metrics.hpp"
#include "jr/train.hpp"

namespace jr {

double mean_of(const std::vector<double>& v);
double population_std(const std::vector<double>& v);

/// "0.750(0.050)" style cell used in the comparison tables.
std::string format_mean_std(double mean, double stddev);
std::string format_mean_std(const std::vector<double>& values);

struct EvalReport {
  std::string method;
  std::vector<std::uint64_t> seeds;
  std::vector<double> auroc_runs;
  std::vector<double> auprc_runs;

  double auroc_mean() const { return mean_of(auroc_runs); }
  double auprc_mean() const { return mean_of(auprc_runs); }
  std::string auroc_cell() const { return format_mean_std(auroc_runs); }
  std::string auprc_cell() const { return format_mean_std(auprc_runs); }
};

struct RepeatedRun {
  std::uint64_t seed = 0;
  TrainOutput output;
  EvalResult test_eval;
};

/// The repeated-seed protocol: for each run, split 70:15:15 by the run seed,
/// train, evaluate on the run's test split.
struct RepeatedResult {
  EvalReport report;
  std::vector<RepeatedRun> runs;
};

RepeatedResult run_repeated(const Dataset& ds, const TrainConfig& cfg,
                            std::size_t n_runs, std::uint64_t base_seed,
                            bool keep_runs = true);

/// Same protocol for a baseline method.
EvalReport run_repeated_baseline(const Dataset& ds, const TrainConfig& cfg,
                                 BaselineMethod method, std::size_t n_runs,
                                 std::uint64_t base_seed, std::size_t knn_k = 5);

/// Markdown comparison table, one row per report, AUROC and AUPRC columns.
std::string report_table_markdown(const std::vector<EvalReport>& reports,
                                  const std::string& title);
std::string report_table_csv(const std::vector<EvalReport>& reports);

void write_text_file_atomic(const std::string& path, const std::string& content);

}  // namespace jr
