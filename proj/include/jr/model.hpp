#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jr/conv1d.hpp"
#include "jr/data.hpp"
#include "jr/gru.hpp"

namespace jr {

/// full:          pad -> conv -> GRU -> linear head on H_T -> softmax
/// no_recurrent:  pad -> conv -> temporal mean pool -> linear head -> softmax
/// gru_only:      GRU directly on the input -> linear head -> softmax
///                (used by the imputation/Simple baselines)
enum class Variant { full, no_recurrent, gru_only };

Variant parse_variant(const std::string& s);
std::string variant_name(Variant v);

struct ModelParams {
  Variant variant = Variant::full;
  std::size_t n_features = 0;
  std::size_t hidden = 0;
  ConvParams conv;      // unused for gru_only
  GruParams gru;        // unused for no_recurrent
  DenseMatrix head_w;   // 2 x hidden (full, gru_only) or 2 x n_features (no_recurrent)
  DenseMatrix head_b;   // 2 x 1
};

/// Xavier-uniform weights, zero biases, deterministic by seed.
ModelParams init_params(std::size_t n_features, std::size_t hidden,
                        std::uint64_t seed, Variant variant = Variant::full,
                        std::size_t kernel_size = 3);

/// Visits every learnable tensor of the active variant in a fixed order.
void for_each_tensor(ModelParams& p,
                     const std::function<void(const std::string&, DenseMatrix&)>& fn);
void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::string&, const DenseMatrix&)>& fn);

std::array<double, 2> softmax2(const std::array<double, 2>& logits);

struct Prediction {
  std::array<double, 2> probs{};   // sums to 1; probs[1] = positive class
  std::array<double, 2> logits{};
};

struct ModelCache {
  DenseMatrix input;     // prepared N x T (or d x T for gru_only)
  ConvCache conv;
  DenseMatrix z;         // conv output
  GruTrace trace;
  std::vector<double> h_final;
  std::vector<double> pooled;  // no_recurrent readout
  Prediction pred;
};

Prediction model_forward(const DenseMatrix& x, const ModelParams& p,
                         ModelCache* cache = nullptr);

/// Average of the class-weighted two-term cross-entropy over the batch.
/// Probabilities are clamped to [1e-12, 1-1e-12] before the logs.
double weighted_cross_entropy(const std::vector<Prediction>& preds,
                              const std::vector<int>& labels,
                              double weight_neg, double weight_pos);

/// Gradients mirroring the active tensors of a ModelParams.
struct ModelGrads {
  ConvGrads conv;
  GruGrads gru;
  DenseMatrix head_w, head_b;

  void scale(double a);
  void add(const ModelGrads& other);
  double l2_norm() const;
};

ModelGrads make_grads(const ModelParams& p);
DenseMatrix& grads_tensor(ModelGrads& g, const std::string& name);

/// Gradient of one patient's (unaveraged) loss term w * CE(pred, label),
/// accumulated into `grads`.
void model_backward(const ModelCache& cache, const ModelParams& p, int label,
                    double class_weight, ModelGrads& grads);

/// Flatten/unflatten of all active tensors, used by the gradient checker.
std::vector<double> pack_params(const ModelParams& p);
void unpack_params(ModelParams& p, const std::vector<double>& theta);
std::vector<double> pack_grads(const ModelParams& p, ModelGrads& g);

void save_checkpoint(const ModelParams& p, const Normalizer& norm,
                     const std::string& path);
struct Checkpoint {
  ModelParams params;
  Normalizer norm;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace jr
