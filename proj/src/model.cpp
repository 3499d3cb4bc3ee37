#include "jr/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "jr/rng.hpp"

namespace jr {

using nlohmann::json;

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "no_recurrent") return Variant::no_recurrent;
  if (s == "gru_only") return Variant::gru_only;
  throw std::invalid_argument("unknown variant: " + s);
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_recurrent: return "no_recurrent";
    case Variant::gru_only: return "gru_only";
  }
  return "?";
}

namespace {

void fill_xavier(DenseMatrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : m.data) v = rng.uniform(-limit, limit);
}

bool uses_conv(Variant v) { return v != Variant::gru_only; }
bool uses_gru(Variant v) { return v != Variant::no_recurrent; }

}  // namespace

ModelParams init_params(std::size_t n_features, std::size_t hidden,
                        std::uint64_t seed, Variant variant,
                        std::size_t kernel_size) {
  if (n_features < 1 || hidden < 1) {
    throw std::invalid_argument("init_params: n_features and hidden must be >= 1");
  }
  if (kernel_size % 2 == 0) {
    throw std::invalid_argument("init_params: kernel size must be odd");
  }
  Rng rng(mix_seed(seed, 0x1417));
  ModelParams p;
  p.variant = variant;
  p.n_features = n_features;
  p.hidden = hidden;

  if (uses_conv(variant)) {
    p.conv.kernels = DenseMatrix(n_features, kernel_size);
    // Inputs are non-negative after zero prefill, so a kernel row that is
    // negative wherever observations land starts dead and cannot recover.
    // A non-negative center tap plus a small positive bias keeps every row
    // responsive to its own current observation.
    p.conv.biases = DenseMatrix(n_features, 1, 0.5);
    fill_xavier(p.conv.kernels, kernel_size, 1, rng);
    for (std::size_t f = 0; f < n_features; ++f) {
      double& center = p.conv.kernels(f, kernel_size / 2);
      center = std::fabs(center);
    }
  }
  if (uses_gru(variant)) {
    p.gru.input = n_features;
    p.gru.hidden = hidden;
    const std::size_t width = n_features + hidden;
    p.gru.w_reset = DenseMatrix(hidden, width);
    p.gru.w_update = DenseMatrix(hidden, width);
    p.gru.w_cand = DenseMatrix(hidden, width);
    p.gru.b_reset = DenseMatrix(hidden, 1);
    p.gru.b_update = DenseMatrix(hidden, 1, 1.0);
    p.gru.b_cand = DenseMatrix(hidden, 1);
    fill_xavier(p.gru.w_reset, width, hidden, rng);
    fill_xavier(p.gru.w_update, width, hidden, rng);
    fill_xavier(p.gru.w_cand, width, hidden, rng);
  }
  const std::size_t head_in = uses_gru(variant) ? hidden : n_features;
  p.head_w = DenseMatrix(2, head_in);
  p.head_b = DenseMatrix(2, 1);
  fill_xavier(p.head_w, head_in, 2, rng);
  return p;
}

void for_each_tensor(ModelParams& p,
                     const std::function<void(const std::string&, DenseMatrix&)>& fn) {
  if (uses_conv(p.variant)) {
    fn("conv_kernels", p.conv.kernels);
    fn("conv_biases", p.conv.biases);
  }
  if (uses_gru(p.variant)) {
    fn("gru_w_reset", p.gru.w_reset);
    fn("gru_w_update", p.gru.w_update);
    fn("gru_w_cand", p.gru.w_cand);
    fn("gru_b_reset", p.gru.b_reset);
    fn("gru_b_update", p.gru.b_update);
    fn("gru_b_cand", p.gru.b_cand);
  }
  fn("head_w", p.head_w);
  fn("head_b", p.head_b);
}

void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::string&, const DenseMatrix&)>& fn) {
  for_each_tensor(const_cast<ModelParams&>(p),
                  [&fn](const std::string& name, DenseMatrix& m) {
                    fn(name, static_cast<const DenseMatrix&>(m));
                  });
}

std::array<double, 2> softmax2(const std::array<double, 2>& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

Prediction model_forward(const DenseMatrix& x, const ModelParams& p,
                         ModelCache* cache) {
  ModelCache local;
  ModelCache& c = cache ? *cache : local;
  c.input = x;

  if (p.variant == Variant::gru_only) {
    c.h_final = gru_sequence_forward(x, p.gru, &c.trace);
  } else {
    c.z = conv_forward(x, p.conv, &c.conv);
    if (p.variant == Variant::full) {
      c.h_final = gru_sequence_forward(c.z, p.gru, &c.trace);
    } else {
      c.pooled.assign(p.n_features, 0.0);
      for (std::size_t f = 0; f < c.z.rows; ++f) {
        double acc = 0.0;
        for (std::size_t t = 0; t < c.z.cols; ++t) acc += c.z(f, t);
        c.pooled[f] = acc / static_cast<double>(c.z.cols);
      }
    }
  }

  const std::vector<double>& readout =
      (p.variant == Variant::no_recurrent) ? c.pooled : c.h_final;
  Prediction pred;
  std::array<double, 2> logits{};
  for (std::size_t i = 0; i < 2; ++i) {
    double acc = p.head_b(i, 0);
    const double* row = p.head_w.row_ptr(i);
    for (std::size_t k = 0; k < readout.size(); ++k) acc += row[k] * readout[k];
    logits[i] = acc;
  }
  pred.logits = logits;
  pred.probs = softmax2(logits);
  c.pred = pred;
  return pred;
}

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
  return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

/// One patient's weighted two-term cross-entropy with y one-hot.
double sample_loss(const Prediction& pred, int label, double w) {
  double loss = 0.0;
  for (int c = 0; c < 2; ++c) {
    const double y = (label == c) ? 1.0 : 0.0;
    const double p = clamp_prob(pred.probs[c]);
    loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return w * loss;
}

}  // namespace

double weighted_cross_entropy(const std::vector<Prediction>& preds,
                              const std::vector<int>& labels,
                              double weight_neg, double weight_pos) {
  if (preds.empty() || preds.size() != labels.size()) {
    throw std::invalid_argument("weighted_cross_entropy: empty or mismatched batch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    total += sample_loss(preds[i], labels[i], labels[i] == 1 ? weight_pos : weight_neg);
  }
  return total / static_cast<double>(preds.size());
}

ModelGrads make_grads(const ModelParams& p) {
  ModelGrads g;
  if (uses_conv(p.variant)) {
    g.conv.kernels = DenseMatrix(p.conv.kernels.rows, p.conv.kernels.cols);
    g.conv.biases = DenseMatrix(p.conv.biases.rows, 1);
  }
  if (uses_gru(p.variant)) g.gru = make_gru_grads(p.gru);
  g.head_w = DenseMatrix(p.head_w.rows, p.head_w.cols);
  g.head_b = DenseMatrix(p.head_b.rows, 1);
  return g;
}

DenseMatrix& grads_tensor(ModelGrads& g, const std::string& name) {
  if (name == "conv_kernels") return g.conv.kernels;
  if (name == "conv_biases") return g.conv.biases;
  if (name == "gru_w_reset") return g.gru.w_reset;
  if (name == "gru_w_update") return g.gru.w_update;
  if (name == "gru_w_cand") return g.gru.w_cand;
  if (name == "gru_b_reset") return g.gru.b_reset;
  if (name == "gru_b_update") return g.gru.b_update;
  if (name == "gru_b_cand") return g.gru.b_cand;
  if (name == "head_w") return g.head_w;
  if (name == "head_b") return g.head_b;
  throw std::invalid_argument("unknown tensor name: " + name);
}

namespace {

void scale_matrix(DenseMatrix& m, double a) {
  for (double& v : m.data) v *= a;
}

void add_matrix(DenseMatrix& m, const DenseMatrix& o) {
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] += o.data[i];
}

template <typename Fn>
void visit_grad_tensors(ModelGrads& g, Fn fn) {
  for (DenseMatrix* m : {&g.conv.kernels, &g.conv.biases, &g.gru.w_reset,
                         &g.gru.w_update, &g.gru.w_cand, &g.gru.b_reset,
                         &g.gru.b_update, &g.gru.b_cand, &g.head_w, &g.head_b}) {
    if (m->size() > 0) fn(*m);
  }
}

}  // namespace

void ModelGrads::scale(double a) {
  visit_grad_tensors(*this, [a](DenseMatrix& m) { scale_matrix(m, a); });
}

void ModelGrads::add(const ModelGrads& other) {
  auto& o = const_cast<ModelGrads&>(other);
  std::vector<DenseMatrix*> mine, theirs;
  visit_grad_tensors(*this, [&mine](DenseMatrix& m) { mine.push_back(&m); });
  visit_grad_tensors(o, [&theirs](DenseMatrix& m) { theirs.push_back(&m); });
  for (std::size_t i = 0; i < mine.size(); ++i) add_matrix(*mine[i], *theirs[i]);
}

double ModelGrads::l2_norm() const {
  double acc = 0.0;
  visit_grad_tensors(const_cast<ModelGrads&>(*this), [&acc](DenseMatrix& m) {
    for (double v : m.data) acc += v * v;
  });
  return std::sqrt(acc);
}

void model_backward(const ModelCache& cache, const ModelParams& p, int label,
                    double class_weight, ModelGrads& grads) {
  const std::vector<double>& readout =
      (p.variant == Variant::no_recurrent) ? cache.pooled : cache.h_final;
  if (readout.size() != p.head_w.cols) {
    throw std::invalid_argument("model_backward: cache does not match params");
  }

  // d loss / d prob, through the clamped two-term cross-entropy.
  const auto& probs = cache.pred.probs;
  std::array<double, 2> dprob{};
  for (int c = 0; c < 2; ++c) {
    const double y = (label == c) ? 1.0 : 0.0;
    if (probs[c] <= kProbClamp || probs[c] >= 1.0 - kProbClamp) continue;
    dprob[c] = -class_weight * (y / probs[c] - (1.0 - y) / (1.0 - probs[c]));
  }
  // Chain through the softmax Jacobian: dlogit_i = sum_c dprob_c * p_c (d_ci - p_i).
  std::array<double, 2> dlogits{};
  for (int i = 0; i < 2; ++i) {
    double acc = 0.0;
    for (int c = 0; c < 2; ++c) {
      acc += dprob[c] * probs[c] * ((c == i ? 1.0 : 0.0) - probs[i]);
    }
    dlogits[i] = acc;
  }

  std::vector<double> dreadout(readout.size(), 0.0);
  for (int i = 0; i < 2; ++i) {
    grads.head_b(i, 0) += dlogits[i];
    const double* row = p.head_w.row_ptr(i);
    double* grow = grads.head_w.row_ptr(i);
    for (std::size_t k = 0; k < readout.size(); ++k) {
      grow[k] += dlogits[i] * readout[k];
      dreadout[k] += dlogits[i] * row[k];
    }
  }

  if (p.variant == Variant::gru_only) {
    gru_backward(dreadout, cache.trace, cache.input, p.gru, nullptr, &grads.gru);
    return;
  }
  DenseMatrix grad_z;
  if (p.variant == Variant::full) {
    gru_backward(dreadout, cache.trace, cache.z, p.gru, &grad_z, &grads.gru);
  } else {
    grad_z = DenseMatrix(cache.z.rows, cache.z.cols);
    const double inv_t = 1.0 / static_cast<double>(cache.z.cols);
    for (std::size_t f = 0; f < cache.z.rows; ++f) {
      for (std::size_t t = 0; t < cache.z.cols; ++t) {
        grad_z(f, t) = dreadout[f] * inv_t;
      }
    }
  }
  conv_backward(grad_z, cache.conv, p.conv, nullptr, &grads.conv);
}

std::vector<double> pack_params(const ModelParams& p) {
  std::vector<double> theta;
  for_each_tensor(p, [&theta](const std::string&, const DenseMatrix& m) {
    theta.insert(theta.end(), m.data.begin(), m.data.end());
  });
  return theta;
}

void unpack_params(ModelParams& p, const std::vector<double>& theta) {
  std::size_t off = 0;
  for_each_tensor(p, [&](const std::string&, DenseMatrix& m) {
    std::copy(theta.begin() + off, theta.begin() + off + m.size(), m.data.begin());
    off += m.size();
  });
  if (off != theta.size()) {
    throw std::invalid_argument("unpack_params: length mismatch");
  }
}

std::vector<double> pack_grads(const ModelParams& p, ModelGrads& g) {
  std::vector<double> out;
  for_each_tensor(p, [&](const std::string& name, const DenseMatrix&) {
    const DenseMatrix& m = grads_tensor(g, name);
    out.insert(out.end(), m.data.begin(), m.data.end());
  });
  return out;
}

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void emit_tensor(std::ostream& out, const std::string& name, const DenseMatrix& m,
                 bool& first) {
  if (!first) out << ", ";
  first = false;
  out << "\"" << name << "\": {\"rows\": " << m.rows << ", \"cols\": " << m.cols
      << ", \"data\": [";
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    if (i) out << ", ";
    out << fmt_real(m.data[i]);
  }
  out << "]}";
}

void emit_real_array(std::ostream& out, const std::vector<double>& v) {
  out << "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    out << fmt_real(v[i]);
  }
  out << "]";
}

DenseMatrix tensor_from_json(const json& t) {
  DenseMatrix m(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>());
  const auto& data = t.at("data");
  if (data.size() != m.size()) {
    throw std::runtime_error("checkpoint tensor data length mismatch");
  }
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = data[i].get<double>();
  return m;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const ModelParams& p, const Normalizer& norm,
                     const std::string& path) {
  std::ostringstream out;
  out << "{\"version\": " << kCheckpointVersion
      << ", \"variant\": \"" << variant_name(p.variant) << "\""
      << ", \"n_features\": " << p.n_features
      << ", \"hidden\": " << p.hidden
      << ", \"kernel_size\": " << (p.conv.kernels.size() ? p.conv.kernel_size() : 0)
      << ", \"normalizer\": {\"mode\": \"" << norm_mode_name(norm.mode) << "\""
      << ", \"mean\": ";
  emit_real_array(out, norm.mean);
  out << ", \"std\": ";
  emit_real_array(out, norm.stddev);
  out << ", \"max_abs\": ";
  emit_real_array(out, norm.max_abs);
  out << "}, \"tensors\": {";
  bool first = true;
  for_each_tensor(p, [&](const std::string& name, const DenseMatrix& m) {
    emit_tensor(out, name, m, first);
  });
  out << "}}\n";

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    f << out.str();
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot move checkpoint into place: " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt checkpoint " + path + ": " + e.what());
  }
  try {
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw std::runtime_error("checkpoint version " + std::to_string(version) +
                               " not supported");
    }
    Checkpoint cp;
    cp.params.variant = parse_variant(doc.at("variant").get<std::string>());
    cp.params.n_features = doc.at("n_features").get<std::size_t>();
    cp.params.hidden = doc.at("hidden").get<std::size_t>();
    const auto& nj = doc.at("normalizer");
    cp.norm.mode = parse_norm_mode(nj.at("mode").get<std::string>());
    cp.norm.mean = nj.at("mean").get<std::vector<double>>();
    cp.norm.stddev = nj.at("std").get<std::vector<double>>();
    cp.norm.max_abs = nj.at("max_abs").get<std::vector<double>>();

    const auto& tensors = doc.at("tensors");
    if (cp.params.variant != Variant::gru_only) {
      cp.params.conv.kernels = tensor_from_json(tensors.at("conv_kernels"));
      cp.params.conv.biases = tensor_from_json(tensors.at("conv_biases"));
    }
    if (cp.params.variant != Variant::no_recurrent) {
      cp.params.gru.input = cp.params.n_features;
      cp.params.gru.hidden = cp.params.hidden;
      cp.params.gru.w_reset = tensor_from_json(tensors.at("gru_w_reset"));
      cp.params.gru.w_update = tensor_from_json(tensors.at("gru_w_update"));
      cp.params.gru.w_cand = tensor_from_json(tensors.at("gru_w_cand"));
      cp.params.gru.b_reset = tensor_from_json(tensors.at("gru_b_reset"));
      cp.params.gru.b_update = tensor_from_json(tensors.at("gru_b_update"));
      cp.params.gru.b_cand = tensor_from_json(tensors.at("gru_b_cand"));
    }
    cp.params.head_w = tensor_from_json(tensors.at("head_w"));
    cp.params.head_b = tensor_from_json(tensors.at("head_b"));
    return cp;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt checkpoint " + path + ": " + e.what());
  }
}

}  // namespace jr
