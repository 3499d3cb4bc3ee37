#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jr/data.hpp"
#include "jr/model.hpp"

namespace jr {

enum class StopMetric { auprc, auroc, loss };
StopMetric parse_stop_metric(const std::string& s);
std::string stop_metric_name(StopMetric m);

enum class WeightMode { balanced, none };

struct TrainConfig {
  int max_epochs = 100;
  int batch_size = 64;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int patience = 10;
  StopMetric stop_metric = StopMetric::auprc;
  Variant variant = Variant::full;
  NormMode norm_mode = NormMode::paper_scale;
  WeightMode weight_mode = WeightMode::balanced;
  std::size_t hidden = 64;
  std::size_t kernel_size = 3;
  bool grad_clip = false;
  double clip_norm = 5.0;
};

struct AdamState {
  double lr = 1e-2, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long step = 0;
  std::map<std::string, DenseMatrix> m, v;
};

/// One Adam update with bias correction; moments are created lazily per tensor.
void adam_step(ModelParams& p, ModelGrads& grads, AdamState& s);

/// Per-epoch shuffled index batches; the union is all indices exactly once.
std::vector<std::vector<std::size_t>> make_batches(std::size_t count,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed, int epoch);

struct TrainHistory {
  std::vector<double> train_loss, val_loss, val_auroc, val_auprc;
  int best_epoch = -1;  // 0-based
};

void write_history_csv(const TrainHistory& h, const std::string& path);

/// A dataset reduced to model-input matrices and labels.
struct PreparedSet {
  std::vector<DenseMatrix> inputs;
  std::vector<int> labels;
  std::vector<std::string> ids;

  static PreparedSet from_dataset(const Dataset& ds, const Normalizer& norm);
  std::size_t size() const { return inputs.size(); }
};

/// w_c = P / (2 * P_c) on the training labels (1,1 when weighting is off).
std::array<double, 2> class_weights(const std::vector<int>& labels, WeightMode mode);

struct TrainResult {
  ModelParams best;
  TrainHistory history;
  std::array<double, 2> weights{1.0, 1.0};
};

/// Core loop over prepared inputs; keeps the checkpoint with the best
/// validation stop-metric and stops after `patience` epochs without strict
/// improvement. Deterministic given cfg.seed.
TrainResult train_prepared(const PreparedSet& train_set, const PreparedSet& val_set,
                           const TrainConfig& cfg, std::size_t input_width);

/// Fits the normalizer on ds_train, prepares both splits, runs train_prepared.
struct TrainOutput {
  TrainResult result;
  Normalizer norm;
};
TrainOutput train(const Dataset& ds_train, const Dataset& ds_val,
                  const TrainConfig& cfg);

}  // namespace jr
