// journey-risk: command-line entry point for the health-risk model.
//
// Subcommands: generate, train, evaluate, impute, gradcheck, report.
// Option precedence is flag > --config JSON > built-in default; the JR_SEED
// environment variable overrides the seed when set. Exit codes: 0 success,
// 1 usage error, 2 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "jr/baselines.hpp"
#include "jr/data.hpp"
#include "jr/datagen.hpp"
#include "jr/experiment.hpp"
#include "jr/gradcheck.hpp"
#include "jr/metrics.hpp"
#include "jr/model.hpp"
#include "jr/rng.hpp"
#include "jr/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kArtifactVersion = 1;

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file not found: " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw std::runtime_error("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) {
    throw std::runtime_error("config file " + path + " must hold a JSON object");
  }
  return cfg;
}

/// Fills every option that was not given on the command line from the config
/// object, so that flag > config > default.
void apply_config(CLI::App* cmd, const json& cfg) {
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr || opt->count() > 0) continue;
    std::string text =
        value.is_string() ? value.get<std::string>() : value.dump();
    opt->add_result(text);
    opt->run_callback();
  }
}

std::uint64_t seed_from_env(std::uint64_t seed) {
  const char* env = std::getenv("JR_SEED");
  if (env == nullptr || *env == '\0') return seed;
  return std::strtoull(env, nullptr, 10);
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("input file not found: " + path);
}

struct TrainCli {
  jr::TrainConfig cfg;
  std::string data, out;
  std::size_t runs = 1;
  std::string stop_metric = "auprc", variant = "full", norm = "paper_scale",
              weights = "balanced";

  jr::TrainConfig resolved() const {
    jr::TrainConfig c = cfg;
    c.stop_metric = jr::parse_stop_metric(stop_metric);
    c.variant = jr::parse_variant(variant);
    c.norm_mode = jr::parse_norm_mode(norm);
    if (weights == "balanced") {
      c.weight_mode = jr::WeightMode::balanced;
    } else if (weights == "none") {
      c.weight_mode = jr::WeightMode::none;
    } else {
      throw std::runtime_error("unknown weight mode: " + weights);
    }
    c.seed = seed_from_env(c.seed);
    return c;
  }
};

void add_train_flags(CLI::App* cmd, TrainCli& t) {
  cmd->add_option("--max-epochs", t.cfg.max_epochs, "Epoch budget");
  cmd->add_option("--batch-size", t.cfg.batch_size, "Journeys per gradient step");
  cmd->add_option("--lr", t.cfg.lr, "Adam learning rate");
  cmd->add_option("--beta1", t.cfg.beta1, "Adam beta1");
  cmd->add_option("--beta2", t.cfg.beta2, "Adam beta2");
  cmd->add_option("--adam-eps", t.cfg.adam_eps, "Adam epsilon");
  cmd->add_option("--seed", t.cfg.seed, "Split/init/shuffle seed");
  cmd->add_option("--patience", t.cfg.patience, "Early-stop patience (epochs)");
  cmd->add_option("--stop-metric", t.stop_metric, "auprc, auroc, or loss");
  cmd->add_option("--variant", t.variant, "full, no_recurrent, or gru_only");
  cmd->add_option("--norm", t.norm, "paper_scale or zscore");
  cmd->add_option("--weights", t.weights, "balanced or none");
  cmd->add_option("--hidden", t.cfg.hidden, "GRU hidden size");
  cmd->add_option("--kernel-size", t.cfg.kernel_size, "Conv kernel size (odd)");
  cmd->add_flag("--grad-clip", t.cfg.grad_clip, "Clip gradient L2 norm");
  cmd->add_option("--clip-norm", t.cfg.clip_norm, "Gradient clip threshold");
}

json config_json(const jr::TrainConfig& c) {
  // Keys mirror the train flags one-to-one so a config.json round-trips:
  // `train --config <dir>/config.json` reproduces the run.
  return json{{"version", kArtifactVersion},
              {"max-epochs", c.max_epochs},
              {"batch-size", c.batch_size},
              {"lr", c.lr},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam-eps", c.adam_eps},
              {"seed", c.seed},
              {"patience", c.patience},
              {"stop-metric", jr::stop_metric_name(c.stop_metric)},
              {"variant", jr::variant_name(c.variant)},
              {"norm", jr::norm_mode_name(c.norm_mode)},
              {"weights", c.weight_mode == jr::WeightMode::balanced ? "balanced"
                                                                    : "none"},
              {"hidden", c.hidden},
              {"kernel-size", c.kernel_size},
              {"grad-clip", c.grad_clip},
              {"clip-norm", c.clip_norm}};
}

std::string train_log_text(const jr::TrainHistory& h) {
  std::ostringstream out;
  for (std::size_t e = 0; e < h.train_loss.size(); ++e) {
    out << "epoch " << e << " train_loss " << h.train_loss[e] << " val_loss "
        << h.val_loss[e] << " val_auroc " << h.val_auroc[e] << " val_auprc "
        << h.val_auprc[e] << "\n";
  }
  out << "best_epoch " << h.best_epoch << "\n";
  return out.str();
}

/// One trained run written as a complete experiment directory.
void write_run_dir(const std::string& dir, const jr::TrainConfig& cfg,
                   const std::string& data_path, const jr::TrainOutput& out,
                   const jr::EvalResult& test_eval) {
  fs::create_directories(dir);
  json cj = config_json(cfg);
  cj["data"] = data_path;
  jr::write_text_file_atomic(dir + "/config.json", cj.dump(2) + "\n");
  jr::save_checkpoint(out.result.best, out.norm, dir + "/checkpoint.json");
  jr::write_history_csv(out.result.history, dir + "/history.csv");
  jr::write_scores_csv(test_eval, dir + "/scores.csv");
  jr::write_text_file_atomic(
      dir + "/metrics.json",
      json{{"auroc", test_eval.auroc}, {"auprc", test_eval.auprc}}.dump() + "\n");
  jr::EvalReport rep;
  rep.method = jr::variant_name(cfg.variant);
  rep.seeds = {cfg.seed};
  rep.auroc_runs = {test_eval.auroc};
  rep.auprc_runs = {test_eval.auprc};
  jr::write_text_file_atomic(dir + "/report.md",
                             jr::report_table_markdown({rep}, "Test metrics"));
  jr::write_text_file_atomic(dir + "/log.txt", train_log_text(out.result.history));
}

int cmd_generate(const jr::GenConfig& cfg, const std::string& out_path) {
  const jr::Dataset ds = jr::generate(cfg);
  jr::save_dataset(ds, out_path);
  const std::string summary = jr::summary_markdown(jr::describe(ds), ds.feature_names);
  jr::write_text_file_atomic(out_path + ".summary.md", summary);
  std::cout << summary;
  return 0;
}

int cmd_train(const TrainCli& t) {
  require_file(t.data);
  if (t.out.empty()) throw std::runtime_error("train needs --out DIR");
  const jr::TrainConfig cfg = t.resolved();
  const jr::Dataset ds = jr::load_dataset(t.data);

  if (t.runs <= 1) {
    const jr::SplitResult s = jr::split_dataset(ds, 0.70, 0.15, 0.15, cfg.seed);
    const jr::TrainOutput out = jr::train(s.train, s.val, cfg);
    const jr::EvalResult ev = jr::evaluate_model(out.result.best, s.test, out.norm);
    write_run_dir(t.out, cfg, t.data, out, ev);
    std::cout << "test auroc " << ev.auroc << " auprc " << ev.auprc << "\n";
    return 0;
  }

  const jr::RepeatedResult rep = jr::run_repeated(ds, cfg, t.runs, cfg.seed, true);
  fs::create_directories(t.out);
  for (const auto& run : rep.runs) {
    jr::TrainConfig run_cfg = cfg;
    run_cfg.seed = run.seed;
    write_run_dir(t.out + "/run_" + std::to_string(run.seed), run_cfg, t.data,
                  run.output, run.test_eval);
  }
  json cj = config_json(cfg);
  cj["data"] = t.data;
  cj["runs"] = t.runs;
  jr::write_text_file_atomic(t.out + "/config.json", cj.dump(2) + "\n");
  jr::write_text_file_atomic(
      t.out + "/report.md",
      jr::report_table_markdown({rep.report}, "Repeated-run test metrics"));
  jr::write_text_file_atomic(t.out + "/report.csv",
                             jr::report_table_csv({rep.report}));
  std::cout << rep.report.method << " auroc " << rep.report.auroc_cell()
            << " auprc " << rep.report.auprc_cell() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data,
                 const std::string& out_dir) {
  require_file(checkpoint);
  require_file(data);
  const jr::Checkpoint cp = jr::load_checkpoint(checkpoint);
  const jr::Dataset ds = jr::load_dataset(data, cp.params.n_features);
  const jr::EvalResult ev = jr::evaluate_model(cp.params, ds, cp.norm);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    jr::write_scores_csv(ev, out_dir + "/scores.csv");
    jr::write_text_file_atomic(
        out_dir + "/metrics.json",
        json{{"auroc", ev.auroc}, {"auprc", ev.auprc}}.dump() + "\n");
  }
  std::cout << json{{"auroc", ev.auroc}, {"auprc", ev.auprc}}.dump() << "\n";
  return 0;
}

int cmd_impute(const std::string& method, const std::string& train_path,
               const std::string& data_path, const std::string& out_path,
               std::size_t k) {
  require_file(train_path);
  require_file(data_path);
  const jr::Dataset train = jr::load_dataset(train_path);
  const jr::Dataset ds = jr::load_dataset(data_path, train.n_features);
  jr::ImputedDataset imputed;
  const jr::BaselineMethod m = jr::parse_baseline(method);
  if (m == jr::BaselineMethod::mean) {
    imputed = jr::mean_impute(jr::fit_normalizer(train, jr::NormMode::paper_scale), ds);
  } else if (m == jr::BaselineMethod::knn) {
    imputed = jr::knn_impute(train, ds, k);
  } else {
    throw std::runtime_error("impute supports methods: mean, knn");
  }
  jr::save_imputed(imputed, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_gradcheck(std::size_t n, std::size_t t, std::size_t g, std::uint64_t seed) {
  const jr::ModelParams p0 = jr::init_params(n, g, seed_from_env(seed));
  jr::Rng rng(jr::mix_seed(seed, 0x6c));
  jr::DenseMatrix x(n, t);
  for (double& v : x.data) v = rng.uniform(-1.5, 1.5);
  const int label = 1;
  const double w = 1.0;

  jr::ModelCache cache;
  jr::model_forward(x, p0, &cache);
  jr::ModelGrads grads = jr::make_grads(p0);
  jr::model_backward(cache, p0, label, w, grads);

  auto loss_at = [&](const std::vector<double>& theta) {
    jr::ModelParams p = p0;
    jr::unpack_params(p, theta);
    return jr::weighted_cross_entropy({jr::model_forward(x, p)}, {label}, w, w);
  };
  const std::vector<double> fd = jr::finite_diff_grad(loss_at, jr::pack_params(p0));

  bool ok = true;
  std::size_t offset = 0;
  jr::for_each_tensor(p0, [&](const std::string& name, const jr::DenseMatrix& m) {
    std::vector<double> a, b;
    const std::vector<double> packed = jr::pack_grads(p0, grads);
    for (std::size_t i = 0; i < m.size(); ++i) {
      a.push_back(packed[offset + i]);
      b.push_back(fd[offset + i]);
    }
    offset += m.size();
    const double err = jr::max_relative_error(a, b);
    std::cout << name << " max_rel_err " << err << "\n";
    ok = ok && err < 1e-4;
  });
  if (!ok) throw std::runtime_error("gradient check failed (max_rel_err >= 1e-4)");
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& title,
               const std::string& out_dir) {
  jr::EvalReport rep;
  rep.method = title;
  for (const auto& dir : dirs) {
    const std::string path = dir + "/metrics.json";
    require_file(path);
    std::ifstream in(path);
    json m;
    in >> m;
    rep.auroc_runs.push_back(m.at("auroc").get<double>());
    rep.auprc_runs.push_back(m.at("auprc").get<double>());
  }
  const std::string md = jr::report_table_markdown({rep}, title);
  std::cout << md;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    jr::write_text_file_atomic(out_dir + "/report.md", md);
    jr::write_text_file_atomic(out_dir + "/report.csv", jr::report_table_csv({rep}));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patient-journey health-risk model"};
  app.require_subcommand(1);
  std::string config_path;

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic JSONL dataset");
  jr::GenConfig gen_cfg;
  std::string gen_out, gen_missing = "mcar", gen_signal = "easy";
  gen->add_option("--config", config_path, "JSON config file");
  gen->add_option("--out", gen_out, "Output JSONL path");
  gen->add_option("--patients", gen_cfg.n_patients, "Number of patients");
  gen->add_option("--features", gen_cfg.n_features, "Number of features");
  gen->add_option("--t-min", gen_cfg.t_min, "Minimum journey length");
  gen->add_option("--t-max", gen_cfg.t_max, "Maximum journey length");
  gen->add_option("--missing-rate", gen_cfg.missing_rate, "Cell drop rate");
  gen->add_option("--missing-mode", gen_missing, "mcar or mnar");
  gen->add_option("--signal-mode", gen_signal, "easy, short_term, or long_range");
  gen->add_option("--prevalence", gen_cfg.prevalence, "Positive-label target");
  gen->add_option("--seed", gen_cfg.seed, "Generator seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train and evaluate on a 70:15:15 split");
  TrainCli train_cli;
  train_cmd->add_option("--config", config_path, "JSON config file");
  train_cmd->add_option("--data", train_cli.data, "Dataset JSONL");
  train_cmd->add_option("--out", train_cli.out, "Experiment directory");
  train_cmd->add_option("--runs", train_cli.runs, "Repeated runs (seed, seed+1, ...)");
  add_train_flags(train_cmd, train_cli);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a dataset with a checkpoint");
  std::string eval_ckpt, eval_data, eval_out;
  eval_cmd->add_option("--config", config_path, "JSON config file");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint JSON");
  eval_cmd->add_option("--data", eval_data, "Dataset JSONL");
  eval_cmd->add_option("--out", eval_out, "Optional output directory");

  // impute
  auto* imp_cmd = app.add_subcommand("impute", "Write an imputed copy of a dataset");
  std::string imp_method = "mean", imp_train, imp_data, imp_out;
  std::size_t imp_k = 5;
  imp_cmd->add_option("--config", config_path, "JSON config file");
  imp_cmd->add_option("--method", imp_method, "mean or knn");
  imp_cmd->add_option("--train", imp_train, "Training split JSONL (statistics source)");
  imp_cmd->add_option("--data", imp_data, "Dataset JSONL to impute");
  imp_cmd->add_option("--out", imp_out, "Output JSONL path");
  imp_cmd->add_option("--k", imp_k, "Neighbors for knn");

  // gradcheck
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::size_t gc_n = 5, gc_t = 7, gc_g = 8;
  std::uint64_t gc_seed = 1;
  gc_cmd->add_option("--config", config_path, "JSON config file");
  gc_cmd->add_option("--n", gc_n, "Features");
  gc_cmd->add_option("--t", gc_t, "Journey length");
  gc_cmd->add_option("--g", gc_g, "Hidden size");
  gc_cmd->add_option("--seed", gc_seed, "Model seed");

  // report
  auto* rep_cmd = app.add_subcommand("report", "Aggregate experiment directories");
  std::vector<std::string> rep_dirs;
  std::string rep_title = "model", rep_out;
  rep_cmd->add_option("dirs", rep_dirs, "Experiment directories")->expected(-1);
  rep_cmd->add_option("--title", rep_title, "Row label for the table");
  rep_cmd->add_option("--out", rep_out, "Optional output directory");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
    }
    if (!config_path.empty()) {
      const json cfg = load_config_file(config_path);
      for (CLI::App* sub : app.get_subcommands()) apply_config(sub, cfg);
    }
    CLI::App* sub = app.get_subcommands().front();
    if (sub == gen) {
      if (gen_out.empty()) throw std::runtime_error("generate needs --out PATH");
      gen_cfg.missing_mode = jr::parse_missing_mode(gen_missing);
      gen_cfg.signal_mode = jr::parse_signal_mode(gen_signal);
      gen_cfg.seed = seed_from_env(gen_cfg.seed);
      return cmd_generate(gen_cfg, gen_out);
    }
    if (sub == train_cmd) return cmd_train(train_cli);
    if (sub == eval_cmd) return cmd_evaluate(eval_ckpt, eval_data, eval_out);
    if (sub == imp_cmd) {
      if (imp_out.empty()) throw std::runtime_error("impute needs --out PATH");
      return cmd_impute(imp_method, imp_train, imp_data, imp_out, imp_k);
    }
    if (sub == gc_cmd) return cmd_gradcheck(gc_n, gc_t, gc_g, gc_seed);
    if (sub == rep_cmd) {
      if (rep_dirs.empty()) throw std::runtime_error("report needs directories");
      return cmd_report(rep_dirs, rep_title, rep_out);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
