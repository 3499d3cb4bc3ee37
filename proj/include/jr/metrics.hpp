#pragma once

#include <string>
#include <vector>

#include "jr/data.hpp"
#include "jr/model.hpp"

namespace jr {

/// Mann-Whitney AUROC: (wins + 0.5 * ties) / (n_pos * n_neg) over all
/// positive-negative score pairs. Requires both classes present.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Average precision: sum over descending unique thresholds of
/// (R_k - R_{k-1}) * P_k, ties grouped at one threshold. Requires >= 1 positive.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

struct EvalResult {
  double auroc = 0.0;
  double auprc = 0.0;
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<double> scores;  // predicted positive-class probability
};

EvalResult evaluate_model(const ModelParams& p, const Dataset& ds,
                          const Normalizer& norm);

void write_scores_csv(const EvalResult& res, const std::string& path);

}  // namespace jr
