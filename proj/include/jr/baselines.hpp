#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jr/data.hpp"
#include "jr/matrix.hpp"
#include "jr/train.hpp"

namespace jr {

/// A dataset whose mask is all ones after imputation. Originally observed
/// cells are unchanged; imputed_mask marks exactly the cells that were filled.
struct ImputedDataset {
  Dataset data;
  std::vector<DenseMatrix> imputed_mask;  // per journey, N x T, 1 = imputed
};

/// Fills every missing cell of feature n with that feature's training
/// observed mean (raw scale).
ImputedDataset mean_impute(const Normalizer& train_stats, const Dataset& ds);

/// Journeys are summarized by their per-feature observed-mean vectors
/// (training mean where a feature is never observed); similarity is negative
/// Euclidean distance between summaries, ties broken by training order. Each
/// missing cell of feature n is filled with the mean of the K nearest
/// training journeys' summary value for n.
ImputedDataset knn_impute(const Dataset& train, const Dataset& ds, std::size_t k);

/// JSONL writer for imputed datasets; adds an "imputed_mask" field per line.
void save_imputed(const ImputedDataset& ds, const std::string& path);

/// 3N x T: rows 0..N-1 zero-filled raw values, N..2N-1 the mask, 2N..3N-1 the
/// per-feature interval since the last observation (0 at t=0; time since the
/// first record while a feature is still unobserved). Time axis is `times`
/// when present, else the record index.
DenseMatrix simple_features(const PatientJourney& j);

enum class BaselineMethod { mean, knn, simple };
BaselineMethod parse_baseline(const std::string& s);
std::string baseline_name(BaselineMethod m);

/// Model input for one baseline run: values normalized with the training
/// normalizer; for `simple`, interval rows are scaled into [0,1] by the
/// journey's time span.
DenseMatrix baseline_input(BaselineMethod method, const PatientJourney& j,
                           const Normalizer& norm);

struct BaselineRun {
  TrainResult train_result;
  double test_auroc = 0.0;
  double test_auprc = 0.0;
};

/// Trains the shared GRU predictor (gru_only variant, input width N or 3N) on
/// the method's input representation and evaluates on the test split. All
/// method fitting (imputation statistics, neighbors) uses the train split only.
BaselineRun baseline_predict(BaselineMethod method, const Dataset& train,
                             const Dataset& val, const Dataset& test,
                             const TrainConfig& cfg, std::size_t knn_k = 5);

}  // namespace jr
