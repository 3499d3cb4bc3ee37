#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jr/data.hpp"

namespace jr {

enum class MissingMode { mcar, mnar };
enum class SignalMode { easy, short_term, long_range };

MissingMode parse_missing_mode(const std::string& s);
SignalMode parse_signal_mode(const std::string& s);
std::string missing_mode_name(MissingMode m);
std::string signal_mode_name(SignalMode m);

/// Synthetic EHR-like generator. Latent features follow a per-feature AR(1)
/// process with stationary std 1, shifted by +5 so raw zero stays an
/// out-of-distribution sentinel. Labels come from a logistic model on a
/// signal-mode statistic of feature 0, with the intercept bisected to hit the
/// target prevalence.
struct GenConfig {
  std::size_t n_patients = 1000;
  std::size_t n_features = 8;
  std::size_t t_min = 16;
  std::size_t t_max = 48;
  double missing_rate = 0.5;
  MissingMode missing_mode = MissingMode::mcar;
  SignalMode signal_mode = SignalMode::easy;
  double prevalence = 0.3;
  std::uint64_t seed = 0;
};

Dataset generate(const GenConfig& cfg);

struct DatasetSummary {
  std::size_t n_patients = 0;
  std::size_t n_features = 0;
  std::vector<double> missing_pct;  // per feature, 0..100
  double overall_missing_pct = 0.0;
  double prevalence = 0.0;
  std::size_t t_min = 0, t_max = 0;
  double t_mean = 0.0;
};

DatasetSummary describe(const Dataset& ds);

std::string summary_markdown(const DatasetSummary& s,
                             const std::vector<std::string>& feature_names);

}  // namespace jr
