#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jr/matrix.hpp"

namespace jr {

/// One patient's chronologically ordered records: an N x T feature matrix with
/// a parallel 0/1 observation mask. Unobserved cells of `values` hold 0 as a
/// placeholder; the mask is authoritative.
struct PatientJourney {
  std::string id;
  int label = 0;  // 1 = positive outcome
  DenseMatrix values;  // N x T
  DenseMatrix mask;    // N x T, 1 = observed
  std::vector<double> times;  // optional, length T, non-decreasing hours

  std::size_t n_features() const { return values.rows; }
  std::size_t length() const { return values.cols; }
  bool has_times() const { return !times.empty(); }
};

struct Dataset {
  std::vector<PatientJourney> journeys;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;

  std::size_t size() const { return journeys.size(); }
};

enum class NormMode { paper_scale, zscore };

NormMode parse_norm_mode(const std::string& s);
std::string norm_mode_name(NormMode m);

/// Per-feature statistics from observed cells of the training split only.
/// std is the population std; std and max_abs are floored at 1e-6.
struct Normalizer {
  NormMode mode = NormMode::paper_scale;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> max_abs;
  std::vector<std::string> warnings;
};

Dataset load_dataset(const std::string& path,
                     std::optional<std::size_t> expected_n = std::nullopt);
void save_dataset(const Dataset& ds, const std::string& path);

struct SplitResult {
  Dataset train, val, test;
};

/// Shuffles by seed, then cuts at floor(r_train*P) and floor((r_train+r_val)*P).
SplitResult split_dataset(const Dataset& ds, double r_train, double r_val,
                          double r_test, std::uint64_t seed);

Normalizer fit_normalizer(const Dataset& train, NormMode mode);

/// Model input: observed cells scaled per the normalizer mode, missing cells
/// set to exactly 0.
DenseMatrix prepare_matrix(const PatientJourney& j, const Normalizer& norm);

}  // namespace jr
