#include "jr/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "jr/metrics.hpp"
#include "jr/rng.hpp"

namespace jr {

StopMetric parse_stop_metric(const std::string& s) {
  if (s == "auprc") return StopMetric::auprc;
  if (s == "auroc") return StopMetric::auroc;
  if (s == "loss") return StopMetric::loss;
  throw std::invalid_argument("unknown early-stop metric: " + s);
}

std::string stop_metric_name(StopMetric m) {
  switch (m) {
    case StopMetric::auprc: return "auprc";
    case StopMetric::auroc: return "auroc";
    case StopMetric::loss: return "loss";
  }
  return "?";
}

void adam_step(ModelParams& p, ModelGrads& grads, AdamState& s) {
  ++s.step;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for_each_tensor(p, [&](const std::string& name, DenseMatrix& theta) {
    DenseMatrix& g = grads_tensor(grads, name);
    if (!g.same_shape(theta)) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + name);
    }
    if (!g.all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient in tensor " + name);
    }
    auto [mi, inserted_m] = s.m.try_emplace(name, theta.rows, theta.cols);
    auto [vi, inserted_v] = s.v.try_emplace(name, theta.rows, theta.cols);
    DenseMatrix& m = mi->second;
    DenseMatrix& v = vi->second;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m.data[i] = s.beta1 * m.data[i] + (1.0 - s.beta1) * g.data[i];
      v.data[i] = s.beta2 * v.data[i] + (1.0 - s.beta2) * g.data[i] * g.data[i];
      const double m_hat = m.data[i] / bc1;
      const double v_hat = v.data[i] / bc2;
      theta.data[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
  });
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t count,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed, int epoch) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(mix_seed(seed, 0xba7c), static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = count; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

void write_history_csv(const TrainHistory& h, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write history file: " + path);
    out << "epoch,train_loss,val_loss,val_auroc,val_auprc\n";
    out.precision(10);
    for (std::size_t e = 0; e < h.train_loss.size(); ++e) {
      out << e << "," << h.train_loss[e] << "," << h.val_loss[e] << ","
          << h.val_auroc[e] << "," << h.val_auprc[e] << "\n";
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot move history file into place: " + path);
  }
}

PreparedSet PreparedSet::from_dataset(const Dataset& ds, const Normalizer& norm) {
  PreparedSet out;
  for (const auto& j : ds.journeys) {
    out.inputs.push_back(prepare_matrix(j, norm));
    out.labels.push_back(j.label);
    out.ids.push_back(j.id);
  }
  return out;
}

std::array<double, 2> class_weights(const std::vector<int>& labels, WeightMode mode) {
  if (mode == WeightMode::none) return {1.0, 1.0};
  const double p = static_cast<double>(labels.size());
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = p - pos;
  return {pos == p ? 1.0 : p / (2.0 * neg), pos == 0.0 ? 1.0 : p / (2.0 * pos)};
}

namespace {

struct ValMetrics {
  double loss = 0.0, auroc_v = 0.0, auprc_v = 0.0;
};

ValMetrics eval_prepared(const PreparedSet& set, const ModelParams& p,
                         const std::array<double, 2>& weights) {
  std::vector<Prediction> preds;
  std::vector<double> scores;
  preds.reserve(set.size());
  for (const auto& x : set.inputs) {
    preds.push_back(model_forward(x, p));
    scores.push_back(preds.back().probs[1]);
  }
  ValMetrics m;
  m.loss = weighted_cross_entropy(preds, set.labels, weights[0], weights[1]);
  m.auroc_v = auroc(scores, set.labels);
  m.auprc_v = auprc(scores, set.labels);
  return m;
}

/// Higher-is-better score of the configured early-stop metric.
double stop_score(const ValMetrics& m, StopMetric metric) {
  switch (metric) {
    case StopMetric::auprc: return m.auprc_v;
    case StopMetric::auroc: return m.auroc_v;
    case StopMetric::loss: return -m.loss;
  }
  return 0.0;
}

}  // namespace

TrainResult train_prepared(const PreparedSet& train_set, const PreparedSet& val_set,
                           const TrainConfig& cfg, std::size_t input_width) {
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw std::invalid_argument("train: empty split");
  }
  TrainResult res;
  res.weights = class_weights(train_set.labels, cfg.weight_mode);

  ModelParams params = init_params(input_width, cfg.hidden, cfg.seed, cfg.variant,
                                   cfg.kernel_size);
  AdamState opt;
  opt.lr = cfg.lr;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.eps = cfg.adam_eps;

  double best_score = -1e300;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto batches = make_batches(train_set.size(), cfg.batch_size, cfg.seed, epoch);
    double epoch_loss = 0.0;
    for (const auto& batch : batches) {
      ModelGrads grads = make_grads(params);
      std::vector<Prediction> preds;
      std::vector<int> labels;
      for (const std::size_t idx : batch) {
        ModelCache cache;
        const Prediction pred = model_forward(train_set.inputs[idx], params, &cache);
        const int label = train_set.labels[idx];
        const double w = label == 1 ? res.weights[1] : res.weights[0];
        model_backward(cache, params, label, w, grads);
        preds.push_back(pred);
        labels.push_back(label);
      }
      grads.scale(1.0 / static_cast<double>(batch.size()));
      if (cfg.grad_clip) {
        const double norm = grads.l2_norm();
        if (norm > cfg.clip_norm) grads.scale(cfg.clip_norm / norm);
      }
      const double batch_loss =
          weighted_cross_entropy(preds, labels, res.weights[0], res.weights[1]);
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: loss diverged at epoch " +
                                 std::to_string(epoch) + "; last finite epoch " +
                                 std::to_string(epoch - 1));
      }
      epoch_loss += batch_loss * static_cast<double>(batch.size());
      adam_step(params, grads, opt);
    }
    epoch_loss /= static_cast<double>(train_set.size());

    const ValMetrics vm = eval_prepared(val_set, params, res.weights);
    res.history.train_loss.push_back(epoch_loss);
    res.history.val_loss.push_back(vm.loss);
    res.history.val_auroc.push_back(vm.auroc_v);
    res.history.val_auprc.push_back(vm.auprc_v);

    const double score = stop_score(vm, cfg.stop_metric);
    if (score > best_score) {
      best_score = score;
      res.best = params;
      res.history.best_epoch = epoch;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= cfg.patience) break;
    }
  }
  return res;
}

TrainOutput train(const Dataset& ds_train, const Dataset& ds_val,
                  const TrainConfig& cfg) {
  TrainOutput out;
  out.norm = fit_normalizer(ds_train, cfg.norm_mode);
  const PreparedSet train_set = PreparedSet::from_dataset(ds_train, out.norm);
  const PreparedSet val_set = PreparedSet::from_dataset(ds_val, out.norm);
  out.result = train_prepared(train_set, val_set, cfg, ds_train.n_features);
  return out;
}

}  // namespace jr
