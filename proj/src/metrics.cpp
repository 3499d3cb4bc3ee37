#include "jr/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace jr {

namespace {

void check_scored(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.empty() || scores.size() != labels.size()) {
    throw std::invalid_argument("metrics: empty or mismatched score/label lists");
  }
}

}  // namespace

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_scored(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Doubled average ranks keep the numerator integral, so tie credit is exact.
  std::vector<long long> rank2(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const long long r2 = static_cast<long long>(i + j) + 2;  // 2 * average 1-based rank
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
    i = j + 1;
  }

  long long n_pos = 0;
  long long sum2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == 1) {
      ++n_pos;
      sum2 += rank2[k];
    }
  }
  const long long n_neg = static_cast<long long>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auroc: needs at least one positive and one negative");
  }
  const long long u2 = sum2 - n_pos * (n_pos + 1);  // 2 * (wins + 0.5 * ties)
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) *
                                    static_cast<double>(n_neg));
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_scored(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const long long total_pos = std::count(labels.begin(), labels.end(), 1);
  if (total_pos == 0) throw std::invalid_argument("auprc: needs at least one positive");

  double ap = 0.0;
  double recall_prev = 0.0;
  long long tp = 0, seen = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      ++seen;
      if (labels[order[k]] == 1) ++tp;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - recall_prev) * precision;
    recall_prev = recall;
    i = j + 1;
  }
  return ap;
}

EvalResult evaluate_model(const ModelParams& p, const Dataset& ds,
                          const Normalizer& norm) {
  EvalResult res;
  for (const auto& j : ds.journeys) {
    const DenseMatrix x = prepare_matrix(j, norm);
    const Prediction pred = model_forward(x, p);
    res.ids.push_back(j.id);
    res.labels.push_back(j.label);
    res.scores.push_back(pred.probs[1]);
  }
  res.auroc = auroc(res.scores, res.labels);
  res.auprc = auprc(res.scores, res.labels);
  return res;
}

void write_scores_csv(const EvalResult& res, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write scores file: " + path);
    out << "id,label,score\n";
    out.precision(17);
    for (std::size_t i = 0; i < res.scores.size(); ++i) {
      out << res.ids[i] << "," << res.labels[i] << "," << res.scores[i] << "\n";
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot move scores file into place: " + path);
  }
}

}  // namespace jr
