// contlearn: generate drifting streams, train continual-learning strategies,
// compare them across seeds and score text files.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "contlearn/corpus.hpp"
#include "contlearn/harness.hpp"

namespace {

using namespace contlearn;
using json = nlohmann::json;

// Applies a value from the --config JSON unless the flag was given on the
// command line.
class ConfigOverlay {
 public:
  ConfigOverlay(CLI::App* app, const std::string& path) : app_(app) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    try {
      doc_ = json::parse(in);
    } catch (const json::exception& e) {
      throw std::invalid_argument("config file " + path + ": " + e.what());
    }
    if (!doc_.is_object()) throw std::invalid_argument("config file " + path + " must hold a JSON object");
  }

  template <typename T>
  void pick(const std::string& key, T& value) {
    if (!doc_.contains(key) || app_->count("--" + key) > 0) return;
    try {
      value = doc_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument("config key '" + key + "': " + e.what());
    }
  }

 private:
  CLI::App* app_;
  json doc_ = json::object();
};

struct TrainingFlags {
  std::string config;
  std::string manifest;
  std::string out_dir = ".";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> strategies{"ft", "emr", "ewc", "repeat", "upper"};
  std::string strategy = "repeat";
  std::uint64_t seed = 1;
  int epochs = 10;
  int batch_size = 32;
  double budget = 0.01;
  int k = 5;
  int mu = 5;
  double lambda_base = 2000.0;
  bool random_selection = false;
  int feature_bits = 14;
  int hidden = 64;
  double learning_rate = 1e-3;
  int threads = 0;
};

void add_training_flags(CLI::App* cmd, TrainingFlags& f, bool grid) {
  cmd->add_option("--config", f.config, "JSON file with flag values (flags win)");
  cmd->add_option("--manifest", f.manifest, "stream manifest.json");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  if (grid) {
    cmd->add_option("--seeds", f.seeds, "run seeds")->delimiter(',');
    cmd->add_option("--strategies", f.strategies, "strategies to compare")->delimiter(',');
    cmd->add_option("--threads", f.threads, "worker threads (0: hardware)");
  } else {
    cmd->add_option("--strategy", f.strategy, "ft | emr | ewc | repeat | upper");
    cmd->add_option("--seed", f.seed, "run seed");
  }
  cmd->add_option("--epochs", f.epochs, "epochs per partition");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
  cmd->add_option("--budget", f.budget, "exemplar budget: fraction of seen data if < 1, else a count");
  cmd->add_option("--k", f.k, "clusters per class");
  cmd->add_option("--mu", f.mu, "low-loss pool multiplier");
  cmd->add_option("--lambda-base", f.lambda_base, "base penalty strength");
  cmd->add_flag("--random-selection", f.random_selection, "pick exemplars at random inside clusters");
  cmd->add_option("--feature-bits", f.feature_bits, "log2 of the hashed feature dimension");
  cmd->add_option("--hidden", f.hidden, "hidden units");
  cmd->add_option("--learning-rate", f.learning_rate, "Adam step size");
}

ExperimentConfig resolve(CLI::App* cmd, TrainingFlags f) {
  ConfigOverlay cfg(cmd, f.config);
  cfg.pick("manifest", f.manifest);
  cfg.pick("out-dir", f.out_dir);
  cfg.pick("seeds", f.seeds);
  cfg.pick("strategies", f.strategies);
  cfg.pick("threads", f.threads);
  cfg.pick("strategy", f.strategy);
  cfg.pick("seed", f.seed);
  cfg.pick("epochs", f.epochs);
  cfg.pick("batch-size", f.batch_size);
  cfg.pick("budget", f.budget);
  cfg.pick("k", f.k);
  cfg.pick("mu", f.mu);
  cfg.pick("lambda-base", f.lambda_base);
  cfg.pick("random-selection", f.random_selection);
  cfg.pick("feature-bits", f.feature_bits);
  cfg.pick("hidden", f.hidden);
  cfg.pick("learning-rate", f.learning_rate);

  if (f.manifest.empty()) throw std::invalid_argument("--manifest is required");
  if (f.feature_bits < 1 || f.feature_bits > 30) throw std::invalid_argument("--feature-bits must lie in [1, 30]");
  if (!(f.budget > 0.0)) throw std::invalid_argument("--budget must be positive");

  ExperimentConfig out;
  out.manifest = f.manifest;
  out.out_dir = f.out_dir;
  out.threads = f.threads;
  out.seeds = cmd->get_name() == "run" ? std::vector<std::uint64_t>{f.seed} : f.seeds;
  if (cmd->get_name() == "run") {
    out.strategies = {parse_strategy(f.strategy)};
  } else {
    out.strategies.clear();
    for (const auto& s : f.strategies) out.strategies.push_back(parse_strategy(s));
  }
  StrategyConfig& b = out.base;
  b.kind = out.strategies.front();
  b.seed = out.seeds.front();
  b.epochs = f.epochs;
  b.batch_size = f.batch_size;
  b.budget = f.budget < 1.0 ? Budget{true, f.budget, 0} : Budget{false, 0.0, static_cast<std::int64_t>(f.budget)};
  b.k = f.k;
  b.mu = f.mu;
  b.lambda_base = f.lambda_base;
  b.loss_filter = !f.random_selection;
  b.feature_dim = Eigen::Index{1} << f.feature_bits;
  b.hidden_dim = f.hidden;
  b.learning_rate = f.learning_rate;
  out.validate();
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual-learning experiments on drifting text streams"};
  app.set_version_flag("--version", std::string(CONTLEARN_VERSION));
  app.require_subcommand(1);

  DriftConfig drift;
  std::string gen_out = ".";
  std::string gen_config;
  auto* gen = app.add_subcommand("generate", "write a synthetic drifting stream");
  gen->add_option("--config", gen_config, "JSON file with flag values (flags win)");
  gen->add_option("--out-dir", gen_out, "output directory");
  gen->add_option("--partitions", drift.n_partitions, "stream length");
  gen->add_option("--classes", drift.n_classes, "label count");
  gen->add_option("--train", drift.train_size, "train samples per partition");
  gen->add_option("--valid", drift.valid_size, "validation samples per partition");
  gen->add_option("--test", drift.test_size, "test samples per partition");
  gen->add_option("--vocab", drift.vocab_size, "vocabulary size");
  gen->add_option("--tokens", drift.tokens_per_sample, "tokens per sample");
  gen->add_option("--drift", drift.drift_strength, "drift strength in [0, 1]");
  gen->add_option("--noise", drift.noise_rate, "label noise rate in [0, 0.5)");
  gen->add_option("--seed", drift.seed, "generator seed");
  gen->add_option("--signature-size", drift.signature_size, "signature pool size");
  gen->add_option("--signature-share", drift.signature_share, "signature token share");
  gen->add_option("--context-share", drift.context_share, "context token share");
  gen->add_option("--recycle-share", drift.recycle_share, "share of replaced signature tokens recycled from other classes");
  gen->add_option("--groups", drift.groups_per_partition, "source groups per partition");

  TrainingFlags run_flags, cmp_flags, sweep_flags;
  auto* run = app.add_subcommand("run", "train one strategy on a stream");
  add_training_flags(run, run_flags, false);
  auto* cmp = app.add_subcommand("compare", "run strategies across seeds");
  add_training_flags(cmp, cmp_flags, true);
  auto* sweep = app.add_subcommand("sweep", "compare over a hyper-parameter grid");
  add_training_flags(sweep, sweep_flags, true);
  std::string sweep_param;
  std::vector<double> sweep_values;
  sweep->add_option("--param", sweep_param, "M | lambda_base | K | mu")->required();
  sweep->add_option("--values", sweep_values, "values to try")->delimiter(',')->required();

  std::string cand_path, ref_path, score_out = ".";
  auto* score = app.add_subcommand("score", "BLEU-4 / METEOR / ROUGE-L over parallel text files");
  score->add_option("--candidates", cand_path, "candidate sentences, one per line")->required();
  score->add_option("--references", ref_path, "reference sentences, one per line")->required();
  score->add_option("--out-dir", score_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      ConfigOverlay cfg(gen, gen_config);
      cfg.pick("out-dir", gen_out);
      cfg.pick("partitions", drift.n_partitions);
      cfg.pick("classes", drift.n_classes);
      cfg.pick("train", drift.train_size);
      cfg.pick("valid", drift.valid_size);
      cfg.pick("test", drift.test_size);
      cfg.pick("vocab", drift.vocab_size);
      cfg.pick("tokens", drift.tokens_per_sample);
      cfg.pick("drift", drift.drift_strength);
      cfg.pick("noise", drift.noise_rate);
      cfg.pick("seed", drift.seed);
      cfg.pick("signature-size", drift.signature_size);
      cfg.pick("signature-share", drift.signature_share);
      cfg.pick("context-share", drift.context_share);
      cfg.pick("recycle-share", drift.recycle_share);
      cfg.pick("groups", drift.groups_per_partition);
      std::cout << cmd_generate(drift, gen_out).string() << '\n';
    } else if (*run) {
      const auto out = cmd_run(resolve(run, run_flags));
      std::cout << out.summary_json.string() << '\n';
    } else if (*cmp) {
      const auto out = cmd_compare(resolve(cmp, cmp_flags));
      std::cout << out.comparison_csv.string() << '\n';
    } else if (*sweep) {
      std::cout << cmd_sweep(resolve(sweep, sweep_flags), sweep_param, sweep_values).string() << '\n';
    } else if (*score) {
      std::cout << cmd_score(cand_path, ref_path, score_out).string() << '\n';
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
