#include "jr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "jr/metrics.hpp"

namespace jr {

BaselineMethod parse_baseline(const std::string& s) {
  if (s == "mean") return BaselineMethod::mean;
  if (s == "knn") return BaselineMethod::knn;
  if (s == "simple") return BaselineMethod::simple;
  throw std::invalid_argument("unknown baseline method: " + s);
}

std::string baseline_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::mean: return "mean";
    case BaselineMethod::knn: return "knn";
    case BaselineMethod::simple: return "simple";
  }
  return "?";
}

ImputedDataset mean_impute(const Normalizer& train_stats, const Dataset& ds) {
  if (train_stats.mean.size() != ds.n_features) {
    throw std::invalid_argument("mean_impute: stats fitted for different N");
  }
  ImputedDataset out;
  out.data = ds;
  for (auto& j : out.data.journeys) {
    DenseMatrix imputed(j.n_features(), j.length());
    for (std::size_t n = 0; n < j.n_features(); ++n) {
      for (std::size_t t = 0; t < j.length(); ++t) {
        if (j.mask(n, t) == 0.0) {
          j.values(n, t) = train_stats.mean[n];
          j.mask(n, t) = 1.0;
          imputed(n, t) = 1.0;
        }
      }
    }
    out.imputed_mask.push_back(std::move(imputed));
  }
  return out;
}

namespace {

/// Per-feature observed-mean summary; never-observed features fall back to the
/// training feature mean.
std::vector<double> journey_summary(const PatientJourney& j,
                                    const std::vector<double>& train_means) {
  std::vector<double> summary(j.n_features());
  for (std::size_t n = 0; n < j.n_features(); ++n) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < j.length(); ++t) {
      if (j.mask(n, t) == 1.0) {
        sum += j.values(n, t);
        ++count;
      }
    }
    summary[n] = count ? sum / count : train_means[n];
  }
  return summary;
}

std::vector<double> train_feature_means(const Dataset& train) {
  std::vector<double> means(train.n_features, 0.0);
  std::vector<std::size_t> counts(train.n_features, 0);
  for (const auto& j : train.journeys) {
    for (std::size_t n = 0; n < train.n_features; ++n) {
      for (std::size_t t = 0; t < j.length(); ++t) {
        if (j.mask(n, t) == 1.0) {
          means[n] += j.values(n, t);
          ++counts[n];
        }
      }
    }
  }
  for (std::size_t n = 0; n < train.n_features; ++n) {
    if (counts[n]) means[n] /= static_cast<double>(counts[n]);
  }
  return means;
}

}  // namespace

ImputedDataset knn_impute(const Dataset& train, const Dataset& ds, std::size_t k) {
  if (k < 1 || k > train.size()) {
    throw std::invalid_argument("knn_impute: K must be in [1, train.P], got " +
                                std::to_string(k));
  }
  const std::vector<double> means = train_feature_means(train);
  std::vector<std::vector<double>> train_summaries;
  train_summaries.reserve(train.size());
  for (const auto& j : train.journeys) {
    train_summaries.push_back(journey_summary(j, means));
  }

  ImputedDataset out;
  out.data = ds;
  for (auto& j : out.data.journeys) {
    const std::vector<double> query = journey_summary(j, means);
    std::vector<std::pair<double, std::size_t>> dists;  // (distance, train index)
    dists.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      double d2 = 0.0;
      for (std::size_t n = 0; n < query.size(); ++n) {
        const double diff = query[n] - train_summaries[i][n];
        d2 += diff * diff;
      }
      dists.emplace_back(d2, i);
    }
    // Ties in distance break toward earlier training journeys.
    std::stable_sort(dists.begin(), dists.end());

    std::vector<double> fill(j.n_features(), 0.0);
    for (std::size_t rank = 0; rank < k; ++rank) {
      const auto& neighbor = train_summaries[dists[rank].second];
      for (std::size_t n = 0; n < fill.size(); ++n) fill[n] += neighbor[n];
    }
    for (double& v : fill) v /= static_cast<double>(k);

    DenseMatrix imputed(j.n_features(), j.length());
    for (std::size_t n = 0; n < j.n_features(); ++n) {
      for (std::size_t t = 0; t < j.length(); ++t) {
        if (j.mask(n, t) == 0.0) {
          j.values(n, t) = fill[n];
          j.mask(n, t) = 1.0;
          imputed(n, t) = 1.0;
        }
      }
    }
    out.imputed_mask.push_back(std::move(imputed));
  }
  return out;
}

void save_imputed(const ImputedDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write imputed dataset: " + path);
  for (std::size_t p = 0; p < ds.data.size(); ++p) {
    const PatientJourney& j = ds.data.journeys[p];
    const DenseMatrix& im = ds.imputed_mask[p];
    std::ostringstream line;
    line << "{\"id\": \"" << j.id << "\", \"label\": " << j.label
         << ", \"features\": [";
    char buf[40];
    for (std::size_t t = 0; t < j.length(); ++t) {
      if (t) line << ", ";
      line << "[";
      for (std::size_t n = 0; n < j.n_features(); ++n) {
        if (n) line << ", ";
        std::snprintf(buf, sizeof(buf), "%.17g", j.values(n, t));
        line << buf;
      }
      line << "]";
    }
    line << "], \"imputed_mask\": [";
    for (std::size_t t = 0; t < j.length(); ++t) {
      if (t) line << ", ";
      line << "[";
      for (std::size_t n = 0; n < j.n_features(); ++n) {
        if (n) line << ", ";
        line << static_cast<int>(im(n, t));
      }
      line << "]";
    }
    line << "]}";
    out << line.str() << "\n";
  }
}

DenseMatrix simple_features(const PatientJourney& j) {
  const std::size_t n = j.n_features();
  const std::size_t t_len = j.length();
  DenseMatrix out(3 * n, t_len);
  for (std::size_t f = 0; f < n; ++f) {
    long long last_observed = -1;
    for (std::size_t t = 0; t < t_len; ++t) {
      const bool observed = j.mask(f, t) == 1.0;
      out(f, t) = observed ? j.values(f, t) : 0.0;
      out(n + f, t) = observed ? 1.0 : 0.0;
      const auto stamp = [&j](std::size_t step) {
        return j.has_times() ? j.times[step] : static_cast<double>(step);
      };
      double delta = 0.0;
      if (t > 0) {
        if (observed) {
          delta = stamp(t) - stamp(t - 1);
        } else if (last_observed >= 0) {
          delta = stamp(t) - stamp(static_cast<std::size_t>(last_observed));
        } else {
          delta = stamp(t) - stamp(0);
        }
      }
      out(2 * n + f, t) = delta;
      if (observed) last_observed = static_cast<long long>(t);
    }
  }
  return out;
}

DenseMatrix baseline_input(BaselineMethod method, const PatientJourney& j,
                           const Normalizer& norm) {
  if (method != BaselineMethod::simple) return prepare_matrix(j, norm);

  const std::size_t n = j.n_features();
  const DenseMatrix raw = simple_features(j);
  DenseMatrix out = raw;
  const DenseMatrix normed = prepare_matrix(j, norm);
  double span = 1.0;
  if (j.has_times()) {
    span = std::max(1.0, j.times.back() - j.times.front());
  } else {
    span = std::max<double>(1.0, static_cast<double>(j.length() - 1));
  }
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t t = 0; t < j.length(); ++t) {
      out(f, t) = normed(f, t);
      out(2 * n + f, t) = raw(2 * n + f, t) / span;
    }
  }
  return out;
}

BaselineRun baseline_predict(BaselineMethod method, const Dataset& train,
                             const Dataset& val, const Dataset& test,
                             const TrainConfig& cfg, std::size_t knn_k) {
  TrainConfig run_cfg = cfg;
  run_cfg.variant = Variant::gru_only;

  Dataset tr = train, va = val, te = test;
  if (method == BaselineMethod::mean) {
    const Normalizer stats = fit_normalizer(train, cfg.norm_mode);
    tr = mean_impute(stats, train).data;
    va = mean_impute(stats, val).data;
    te = mean_impute(stats, test).data;
  } else if (method == BaselineMethod::knn) {
    tr = knn_impute(train, train, knn_k).data;
    va = knn_impute(train, val, knn_k).data;
    te = knn_impute(train, test, knn_k).data;
  }

  // Normalization statistics come from the (possibly imputed) train split only.
  const Normalizer norm = fit_normalizer(tr, cfg.norm_mode);
  const auto prepare = [&](const Dataset& ds) {
    PreparedSet set;
    for (const auto& j : ds.journeys) {
      set.inputs.push_back(baseline_input(method, j, norm));
      set.labels.push_back(j.label);
      set.ids.push_back(j.id);
    }
    return set;
  };
  const PreparedSet tr_set = prepare(tr);
  const PreparedSet va_set = prepare(va);
  const PreparedSet te_set = prepare(te);

  const std::size_t width =
      method == BaselineMethod::simple ? 3 * train.n_features : train.n_features;
  BaselineRun run;
  run.train_result = train_prepared(tr_set, va_set, run_cfg, width);

  std::vector<double> scores;
  for (const auto& x : te_set.inputs) {
    scores.push_back(model_forward(x, run.train_result.best).probs[1]);
  }
  run.test_auroc = auroc(scores, te_set.labels);
  run.test_auprc = auprc(scores, te_set.labels);
  return run;
}

}  // namespace jr
