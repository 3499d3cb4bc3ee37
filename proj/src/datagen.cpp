#include "jr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jr/activations.hpp"
#include "jr/rng.hpp"

namespace jr {

MissingMode parse_missing_mode(const std::string& s) {
  if (s == "mcar") return MissingMode::mcar;
  if (s == "mnar") return MissingMode::mnar;
  throw std::invalid_argument("unknown missingness mode: " + s);
}

SignalMode parse_signal_mode(const std::string& s) {
  if (s == "easy") return SignalMode::easy;
  if (s == "short_term") return SignalMode::short_term;
  if (s == "long_range") return SignalMode::long_range;
  throw std::invalid_argument("unknown signal mode: " + s);
}

std::string missing_mode_name(MissingMode m) {
  return m == MissingMode::mcar ? "mcar" : "mnar";
}

std::string signal_mode_name(SignalMode m) {
  switch (m) {
    case SignalMode::easy: return "easy";
    case SignalMode::short_term: return "short_term";
    case SignalMode::long_range: return "long_range";
  }
  return "?";
}

namespace {

constexpr double kArCoeff = 0.8;
constexpr double kNoiseStd = 0.6;  // variance 0.36, stationary std 1
constexpr double kShift = 5.0;
constexpr double kSignalSlope = 30.0;

double mean_range(const double* x, std::size_t lo, std::size_t hi) {
  double acc = 0.0;
  for (std::size_t t = lo; t < hi; ++t) acc += x[t];
  return acc / static_cast<double>(hi - lo);
}

/// Label statistic from the latent (pre-missingness) feature 0 series.
double signal_stat(const std::vector<double>& x, SignalMode mode) {
  const std::size_t t_len = x.size();
  switch (mode) {
    case SignalMode::easy:
      return mean_range(x.data(), 0, t_len);
    case SignalMode::short_term: {
      // Mean rectified centered 3-step slope; local, so a size-3 kernel can
      // see it, and an average suits the recurrent readout.
      double acc = 0.0;
      for (std::size_t t = 1; t + 1 < t_len; ++t) {
        acc += std::max(0.0, (x[t + 1] - x[t - 1]) / 2.0);
      }
      return acc / static_cast<double>(t_len - 2);
    }
    case SignalMode::long_range: {
      const std::size_t q = std::max<std::size_t>(1, t_len / 4);
      return mean_range(x.data(), t_len - q, t_len) - mean_range(x.data(), 0, q);
    }
  }
  return 0.0;
}

}  // namespace

Dataset generate(const GenConfig& cfg) {
  if (cfg.t_min < 3 || cfg.t_max < cfg.t_min) {
    throw std::invalid_argument("generate: need t_max >= t_min >= 3");
  }
  if (cfg.prevalence <= 0.0 || cfg.prevalence >= 1.0) {
    throw std::invalid_argument("generate: prevalence must be in (0,1)");
  }
  if (cfg.missing_rate < 0.0 || cfg.missing_rate >= 1.0) {
    throw std::invalid_argument("generate: missing_rate must be in [0,1)");
  }
  if (cfg.n_patients < 1) throw std::invalid_argument("generate: n_patients >= 1");

  Dataset ds;
  ds.n_features = cfg.n_features;
  for (std::size_t n = 0; n < cfg.n_features; ++n) {
    ds.feature_names.push_back("f" + std::to_string(n));
  }

  // Latent series per patient, fully observed.
  std::vector<double> stats(cfg.n_patients);
  for (std::size_t i = 0; i < cfg.n_patients; ++i) {
    Rng rng(mix_seed(cfg.seed, i));
    const std::size_t t_len =
        cfg.t_min + static_cast<std::size_t>(rng.below(cfg.t_max - cfg.t_min + 1));
    PatientJourney j;
    j.id = "p" + std::to_string(i);
    j.values = DenseMatrix(cfg.n_features, t_len);
    j.mask = DenseMatrix(cfg.n_features, t_len, 1.0);
    std::vector<double> feat0(t_len);
    for (std::size_t n = 0; n < cfg.n_features; ++n) {
      double x = rng.gaussian();  // stationary start
      for (std::size_t t = 0; t < t_len; ++t) {
        if (t > 0) x = kArCoeff * x + kNoiseStd * rng.gaussian();
        j.values(n, t) = x + kShift;
        if (n == 0) feat0[t] = x;
      }
    }
    stats[i] = signal_stat(feat0, cfg.signal_mode);
    ds.journeys.push_back(std::move(j));
  }

  // Standardize the statistic, then bisect the logistic intercept so the mean
  // predicted probability hits the prevalence target.
  double s_mean = 0.0;
  for (double s : stats) s_mean += s;
  s_mean /= static_cast<double>(stats.size());
  double s_var = 0.0;
  for (double s : stats) s_var += (s - s_mean) * (s - s_mean);
  const double s_std = std::max(1e-9, std::sqrt(s_var / static_cast<double>(stats.size())));
  for (double& s : stats) s = (s - s_mean) / s_std;

  const auto mean_prob = [&stats](double b) {
    double acc = 0.0;
    for (double s : stats) acc += sigmoid(kSignalSlope * s + b);
    return acc / static_cast<double>(stats.size());
  };
  double lo = -40.0, hi = 40.0;
  bool converged = false;
  double intercept = 0.0;
  for (int it = 0; it < 100; ++it) {
    intercept = 0.5 * (lo + hi);
    const double p = mean_prob(intercept);
    if (std::fabs(p - cfg.prevalence) < 1e-6) {
      converged = true;
      break;
    }
    (p < cfg.prevalence ? lo : hi) = intercept;
  }
  if (!converged && std::fabs(mean_prob(intercept) - cfg.prevalence) > 0.01) {
    throw std::runtime_error("generate: prevalence calibration failed after 100 steps");
  }

  Rng label_rng(mix_seed(cfg.seed, 0x1abe1));
  for (std::size_t i = 0; i < cfg.n_patients; ++i) {
    const double p = sigmoid(kSignalSlope * stats[i] + intercept);
    ds.journeys[i].label = label_rng.uniform() < p ? 1 : 0;
  }

  // Missingness; in mnar mode the drop rate itself carries label signal.
  for (std::size_t i = 0; i < cfg.n_patients; ++i) {
    PatientJourney& j = ds.journeys[i];
    double rate = cfg.missing_rate;
    if (cfg.missing_mode == MissingMode::mnar) {
      rate = std::clamp(cfg.missing_rate * (j.label == 1 ? 1.5 : 0.5), 0.0, 0.95);
    }
    if (rate == 0.0) continue;
    Rng rng(mix_seed(mix_seed(cfg.seed, 0x3a5c), i));
    for (std::size_t n = 0; n < j.n_features(); ++n) {
      for (std::size_t t = 0; t < j.length(); ++t) {
        if (rng.uniform() < rate) {
          j.mask(n, t) = 0.0;
          j.values(n, t) = 0.0;
        }
      }
    }
  }
  return ds;
}

DatasetSummary describe(const Dataset& ds) {
  DatasetSummary s;
  s.n_patients = ds.size();
  s.n_features = ds.n_features;
  s.missing_pct.assign(ds.n_features, 0.0);
  std::vector<std::size_t> cells(ds.n_features, 0), missing(ds.n_features, 0);
  std::size_t t_total = 0;
  s.t_min = SIZE_MAX;
  for (const auto& j : ds.journeys) {
    s.t_min = std::min(s.t_min, j.length());
    s.t_max = std::max(s.t_max, j.length());
    t_total += j.length();
    if (j.label == 1) s.prevalence += 1.0;
    for (std::size_t n = 0; n < j.n_features(); ++n) {
      for (std::size_t t = 0; t < j.length(); ++t) {
        ++cells[n];
        if (j.mask(n, t) == 0.0) ++missing[n];
      }
    }
  }
  std::size_t all_cells = 0, all_missing = 0;
  for (std::size_t n = 0; n < ds.n_features; ++n) {
    s.missing_pct[n] = cells[n] ? 100.0 * missing[n] / cells[n] : 0.0;
    all_cells += cells[n];
    all_missing += missing[n];
  }
  s.overall_missing_pct = all_cells ? 100.0 * all_missing / all_cells : 0.0;
  s.prevalence /= static_cast<double>(ds.size());
  s.t_mean = static_cast<double>(t_total) / static_cast<double>(ds.size());
  return s;
}

std::string summary_markdown(const DatasetSummary& s,
                             const std::vector<std::string>& feature_names) {
  std::ostringstream out;
  out.precision(4);
  out << "| Feature | Missingness (%) |\n|---|---|\n";
  for (std::size_t n = 0; n < s.n_features; ++n) {
    const std::string name =
        n < feature_names.size() ? feature_names[n] : "f" + std::to_string(n);
    out << "| " << name << " | " << s.missing_pct[n] << " |\n";
  }
  out << "\nPatients: " << s.n_patients << ", prevalence: " << s.prevalence
      << ", length min/mean/max: " << s.t_min << "/" << s.t_mean << "/" << s.t_max
      << ", overall missingness: " << s.overall_missing_pct << "%\n";
  return out.str();
}

}  // namespace jr
