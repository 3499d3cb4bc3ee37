#include "jr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "jr/rng.hpp"

namespace jr {

using nlohmann::json;

NormMode parse_norm_mode(const std::string& s) {
  if (s == "paper_scale") return NormMode::paper_scale;
  if (s == "zscore") return NormMode::zscore;
  throw std::invalid_argument("unknown normalization mode: " + s);
}

std::string norm_mode_name(NormMode m) {
  return m == NormMode::paper_scale ? "paper_scale" : "zscore";
}

namespace {

std::string meta_path(const std::string& path) { return path + ".meta.json"; }

// 17 significant digits: lossless double round-trip.
std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

PatientJourney journey_from_json(const json& rec, std::size_t expected_n,
                                 std::size_t line_no) {
  PatientJourney j;
  j.id = rec.at("id").get<std::string>();
  j.label = rec.at("label").get<int>();
  if (j.label != 0 && j.label != 1) {
    throw std::runtime_error("journey " + j.id + ": label must be 0 or 1");
  }
  const auto& feats = rec.at("features");
  const std::size_t t_len = feats.size();
  if (t_len == 0) {
    throw std::runtime_error("journey " + j.id + ": empty feature sequence");
  }
  j.values = DenseMatrix(expected_n, t_len);
  j.mask = DenseMatrix(expected_n, t_len);
  // On disk: records as rows (T x N); internal: N x T.
  for (std::size_t t = 0; t < t_len; ++t) {
    const auto& row = feats[t];
    if (row.size() != expected_n) {
      throw std::runtime_error("journey " + j.id + " (line " +
                               std::to_string(line_no) + "): record " +
                               std::to_string(t) + " has " +
                               std::to_string(row.size()) + " features, expected " +
                               std::to_string(expected_n));
    }
    for (std::size_t n = 0; n < expected_n; ++n) {
      if (row[n].is_null()) {
        j.values(n, t) = 0.0;
        j.mask(n, t) = 0.0;
      } else {
        j.values(n, t) = row[n].get<double>();
        j.mask(n, t) = 1.0;
      }
    }
  }
  if (rec.contains("times")) {
    j.times = rec.at("times").get<std::vector<double>>();
    if (j.times.size() != t_len) {
      throw std::runtime_error("journey " + j.id + ": times length mismatch");
    }
    for (std::size_t t = 1; t < j.times.size(); ++t) {
      if (j.times[t] < j.times[t - 1]) {
        throw std::runtime_error("journey " + j.id + ": times not non-decreasing");
      }
    }
  }
  return j;
}

}  // namespace

Dataset load_dataset(const std::string& path, std::optional<std::size_t> expected_n) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);

  Dataset ds;
  {
    std::ifstream meta_in(meta_path(path));
    if (meta_in) {
      json meta = json::parse(meta_in);
      ds.n_features = meta.at("n_features").get<std::size_t>();
      if (meta.contains("feature_names")) {
        ds.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
      }
    }
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(path + ": malformed JSON on line " +
                               std::to_string(line_no) + ": " + e.what());
    }
    if (ds.n_features == 0) {
      // No sidecar: infer N from the first record.
      if (expected_n) {
        ds.n_features = *expected_n;
      } else {
        const auto& feats = rec.at("features");
        if (feats.empty() || feats[0].empty()) {
          throw std::runtime_error(path + ": cannot infer feature count from line " +
                                   std::to_string(line_no));
        }
        ds.n_features = feats[0].size();
      }
    }
    if (expected_n && ds.n_features != *expected_n) {
      throw std::runtime_error(path + ": metadata says N=" +
                               std::to_string(ds.n_features) + ", expected " +
                               std::to_string(*expected_n));
    }
    ds.journeys.push_back(journey_from_json(rec, ds.n_features, line_no));
  }
  if (ds.journeys.empty()) throw std::runtime_error(path + ": empty dataset");
  if (ds.feature_names.empty()) {
    for (std::size_t n = 0; n < ds.n_features; ++n) {
      ds.feature_names.push_back("f" + std::to_string(n));
    }
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const auto& j : ds.journeys) {
    std::ostringstream line;
    line << "{\"id\": " << json(j.id).dump() << ", \"label\": " << j.label;
    if (j.has_times()) {
      line << ", \"times\": [";
      for (std::size_t t = 0; t < j.times.size(); ++t) {
        if (t) line << ", ";
        line << fmt_real(j.times[t]);
      }
      line << "]";
    }
    line << ", \"features\": [";
    for (std::size_t t = 0; t < j.length(); ++t) {
      if (t) line << ", ";
      line << "[";
      for (std::size_t n = 0; n < j.n_features(); ++n) {
        if (n) line << ", ";
        if (j.mask(n, t) == 0.0) {
          line << "null";
        } else {
          line << fmt_real(j.values(n, t));
        }
      }
      line << "]";
    }
    line << "]}";
    out << line.str() << "\n";
  }
  out.close();

  json meta;
  meta["n_features"] = ds.n_features;
  meta["feature_names"] = ds.feature_names;
  std::ofstream meta_out(meta_path(path));
  meta_out << meta.dump(2) << "\n";
}

SplitResult split_dataset(const Dataset& ds, double r_train, double r_val,
                          double r_test, std::uint64_t seed) {
  if (std::fabs(r_train + r_val + r_test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  const std::size_t p = ds.size();
  if (p < 10) {
    throw std::invalid_argument("split_dataset: need at least 10 journeys, got " +
                                std::to_string(p));
  }
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0x5117));
  for (std::size_t i = p - 1; i > 0; --i) {
    const std::size_t k = rng.below(i + 1);
    std::swap(order[i], order[k]);
  }
  const std::size_t cut1 = static_cast<std::size_t>(std::floor(r_train * p));
  const std::size_t cut2 = static_cast<std::size_t>(std::floor((r_train + r_val) * p));

  SplitResult res;
  for (Dataset* part : {&res.train, &res.val, &res.test}) {
    part->n_features = ds.n_features;
    part->feature_names = ds.feature_names;
  }
  for (std::size_t i = 0; i < p; ++i) {
    const PatientJourney& j = ds.journeys[order[i]];
    if (i < cut1) {
      res.train.journeys.push_back(j);
    } else if (i < cut2) {
      res.val.journeys.push_back(j);
    } else {
      res.test.journeys.push_back(j);
    }
  }
  return res;
}

Normalizer fit_normalizer(const Dataset& train, NormMode mode) {
  constexpr double kFloor = 1e-6;
  const std::size_t n = train.n_features;
  Normalizer norm;
  norm.mode = mode;
  norm.mean.assign(n, 0.0);
  norm.stddev.assign(n, kFloor);
  norm.max_abs.assign(n, kFloor);

  for (std::size_t f = 0; f < n; ++f) {
    double sum = 0.0, sum_sq = 0.0, max_abs = 0.0;
    std::size_t count = 0;
    for (const auto& j : train.journeys) {
      for (std::size_t t = 0; t < j.length(); ++t) {
        if (j.mask(f, t) == 0.0) continue;
        const double v = j.values(f, t);
        sum += v;
        sum_sq += v * v;
        max_abs = std::max(max_abs, std::fabs(v));
        ++count;
      }
    }
    if (count == 0) {
      norm.warnings.push_back("feature " + std::to_string(f) +
                              " has no observed values in the training split");
      continue;
    }
    const double mean = sum / count;
    const double var = std::max(0.0, sum_sq / count - mean * mean);  // population
    norm.mean[f] = mean;
    norm.stddev[f] = std::max(kFloor, std::sqrt(var));
    norm.max_abs[f] = std::max(kFloor, max_abs);
  }
  return norm;
}

DenseMatrix prepare_matrix(const PatientJourney& j, const Normalizer& norm) {
  const std::size_t n = j.n_features();
  if (norm.mean.size() != n) {
    throw std::invalid_argument("prepare_matrix: normalizer fitted for " +
                                std::to_string(norm.mean.size()) +
                                " features, journey has " + std::to_string(n));
  }
  DenseMatrix out(n, j.length());
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t t = 0; t < j.length(); ++t) {
      if (j.mask(f, t) == 0.0) {
        out(f, t) = 0.0;
      } else if (norm.mode == NormMode::paper_scale) {
        out(f, t) = j.values(f, t) / norm.max_abs[f];
      } else {
        out(f, t) = (j.values(f, t) - norm.mean[f]) / norm.stddev[f];
      }
    }
  }
  return out;
}

}  // namespace jr
