#include "contlearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "contlearn/csv.hpp"
#include "contlearn/metrics.hpp"

namespace contlearn {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (strategies.empty()) throw std::invalid_argument("at least one strategy is required");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
  base.validate();
}

ordered_json to_json(const StrategyConfig& cfg) {
  ordered_json budget = cfg.budget.fractional ? ordered_json{{"fraction", cfg.budget.fraction}}
                                              : ordered_json{{"absolute", cfg.budget.absolute}};
  return {{"strategy", to_string(cfg.kind)},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"budget", budget},
          {"k", cfg.k},
          {"mu", cfg.mu},
          {"lambda_base", cfg.lambda_base},
          {"loss_filter", cfg.loss_filter},
          {"seed", cfg.seed},
          {"feature_dim", cfg.feature_dim},
          {"hidden_dim", cfg.hidden_dim},
          {"learning_rate", cfg.learning_rate}};
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json strategies = ordered_json::array();
  for (auto k : cfg.strategies) strategies.push_back(to_string(k));
  ordered_json base = to_json(cfg.base);
  base.erase("strategy");
  base.erase("seed");
  return {{"manifest", cfg.manifest.generic_string()},
          {"seeds", cfg.seeds},
          {"strategies", strategies},
          {"training", base}};
}

RunSummary summarize(StrategyKind kind, std::uint64_t seed, const RunState& state) {
  RunSummary s;
  s.kind = kind;
  s.seed = seed;
  s.history = state.history;
  s.trace = state.trace;
  s.store = state.store;
  OmegaMatrix acc(state.step), prec(state.step), rec(state.step), f1(state.step);
  for (const auto& r : state.history) {
    acc.set(r.test_partition, r.step, r.accuracy);
    prec.set(r.test_partition, r.step, r.precision);
    rec.set(r.test_partition, r.step, r.recall);
    f1.set(r.test_partition, r.step, r.f1);
  }
  s.omega_accuracy = omega(acc).overall;
  s.omega_precision = omega(prec).overall;
  s.omega_recall = omega(rec).overall;
  s.omega_f1 = omega(f1).overall;
  return s;
}

std::vector<RunSummary> run_grid(const ExperimentConfig& cfg, const Stream& stream) {
  cfg.validate();
  struct Job {
    StrategyKind kind;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto kind : cfg.strategies)
    for (auto seed : cfg.seeds) jobs.push_back({kind, seed});

  std::vector<RunSummary> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      try {
        StrategyConfig run_cfg = cfg.base;
        run_cfg.kind = jobs[i].kind;
        run_cfg.seed = jobs[i].seed;
        results[i] = summarize(jobs[i].kind, jobs[i].seed, run_stream(run_cfg, stream));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  n_threads = std::clamp<unsigned>(n_threads, 1, static_cast<unsigned>(jobs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

fs::path cmd_generate(const DriftConfig& cfg, const fs::path& out_dir) {
  generate_synthetic(cfg, out_dir);
  return out_dir / "manifest.json";
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw std::invalid_argument("output directory " + dir.string() + " is not writable");
}

std::vector<HistoryRow> all_history(std::span<const RunSummary> runs) {
  std::vector<HistoryRow> rows;
  for (const auto& r : runs) {
    auto part = history_rows(to_string(r.kind), r.seed, r.history);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

ordered_json omega_json(const RunSummary& r) {
  return {{"accuracy", r.omega_accuracy}, {"precision", r.omega_precision}, {"recall", r.omega_recall}, {"f1", r.omega_f1}};
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

void write_comparison(const fs::path& path, const ExperimentConfig& cfg, std::span<const RunSummary> runs,
                      const ordered_json& meta) {
  std::ostringstream out;
  csv::write_meta(out, meta);
  out << "strategy,seed,omega_accuracy,omega_precision,omega_recall,omega_f1\n";
  for (const auto& r : runs)
    out << to_string(r.kind) << ',' << r.seed << ',' << csv::number(r.omega_accuracy) << ','
        << csv::number(r.omega_precision) << ',' << csv::number(r.omega_recall) << ',' << csv::number(r.omega_f1)
        << '\n';
  for (auto kind : cfg.strategies) {
    std::vector<double> cols[4];
    for (const auto& r : runs) {
      if (r.kind != kind) continue;
      cols[0].push_back(r.omega_accuracy);
      cols[1].push_back(r.omega_precision);
      cols[2].push_back(r.omega_recall);
      cols[3].push_back(r.omega_f1);
    }
    out << to_string(kind) << ",mean";
    for (auto& c : cols) {
      double sum = 0.0;
      for (double v : c) sum += v;
      out << ',' << csv::number(sum / static_cast<double>(c.size()));
    }
    out << '\n' << to_string(kind) << ",median";
    for (auto& c : cols) out << ',' << csv::number(median(c));
    out << '\n';
  }
  write_text(path, out.str());
}

void write_curve(const fs::path& path, const ExperimentConfig& cfg, std::span<const RunSummary> runs,
                 const ordered_json& meta) {
  std::ostringstream out;
  csv::write_meta(out, meta);
  out << "strategy,seed,step,accuracy,f1\n";
  for (const auto& r : runs)
    for (const auto& e : r.history)
      if (e.test_partition == 1)
        out << to_string(r.kind) << ',' << r.seed << ',' << e.step << ',' << csv::number(e.accuracy) << ','
            << csv::number(e.f1) << '\n';
  for (auto kind : cfg.strategies) {
    int steps = 0;
    for (const auto& r : runs)
      if (r.kind == kind) steps = std::max(steps, static_cast<int>(r.trace.size()));
    for (int step = 1; step <= steps; ++step) {
      std::vector<double> acc, f1;
      for (const auto& r : runs)
        if (r.kind == kind)
          for (const auto& e : r.history)
            if (e.test_partition == 1 && e.step == step) {
              acc.push_back(e.accuracy);
              f1.push_back(e.f1);
            }
      out << to_string(kind) << ",median," << step << ',' << csv::number(median(acc)) << ','
          << csv::number(median(f1)) << '\n';
    }
  }
  write_text(path, out.str());
}

void write_trace(const fs::path& path, std::span<const RunSummary> runs, const ordered_json& meta) {
  std::ostringstream out;
  csv::write_meta(out, meta);
  out << "strategy,seed,step,budget,lambda,mixture_size,store_total,store_sizes,first_epoch_loss,last_epoch_loss\n";
  for (const auto& r : runs)
    for (const auto& t : r.trace) {
      std::int64_t total = 0;
      std::string sizes;
      for (std::size_t i = 0; i < t.store_sizes.size(); ++i) {
        total += t.store_sizes[i];
        sizes += (i ? ";" : "") + std::to_string(t.store_sizes[i]);
      }
      out << to_string(r.kind) << ',' << r.seed << ',' << t.step << ',' << t.budget << ','
          << csv::number(t.lambda) << ',' << t.mixture_size << ',' << total << ',' << sizes << ','
          << csv::number(t.epoch_losses.front()) << ',' << csv::number(t.epoch_losses.back()) << '\n';
    }
  write_text(path, out.str());
}

}  // namespace

RunOutputs cmd_run(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const Stream stream = load_stream(cfg.manifest);
  StrategyConfig run_cfg = cfg.base;
  run_cfg.seed = cfg.seeds.front();
  const RunState state = run_stream(run_cfg, stream);
  const RunSummary summary = summarize(run_cfg.kind, run_cfg.seed, state);

  ordered_json meta = to_json(run_cfg);
  meta["manifest"] = cfg.manifest.generic_string();
  RunOutputs out;
  out.history_csv = cfg.out_dir / "history.csv";
  const auto rows = history_rows(to_string(run_cfg.kind), run_cfg.seed, state.history);
  write_history_csv(out.history_csv, rows, meta);

  out.forgetting_csv = cfg.out_dir / "forgetting.csv";
  const auto forgetting = forgetting_report(rows);
  write_forgetting_csv(out.forgetting_csv, forgetting, meta);

  ordered_json per_step = ordered_json::array();
  for (const auto& t : state.trace)
    per_step.push_back({{"step", t.step}, {"budget", t.budget}, {"lambda", t.lambda}, {"store_sizes", t.store_sizes}});
  ordered_json summary_doc{{"meta", {{"tool", "contlearn"}, {"version", CONTLEARN_VERSION}, {"config", meta}}},
                           {"omega", omega_json(summary)},
                           {"steps", per_step}};
  out.summary_json = cfg.out_dir / "summary.json";
  write_text(out.summary_json, summary_doc.dump(2) + "\n");

  out.model_bin = cfg.out_dir / "model.bin";
  save_model(out.model_bin, state.model);
  if (state.anchor) {
    out.anchor_bin = cfg.out_dir / "anchor.bin";
    save_anchor(out.anchor_bin, *state.anchor);
  }
  if (run_cfg.kind == StrategyKind::EMR || run_cfg.kind == StrategyKind::REPEAT) {
    out.store_json = cfg.out_dir / "exemplars.json";
    write_text(out.store_json, to_json(state.store).dump(2) + "\n");
  }
  return out;
}

CompareOutputs cmd_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const Stream stream = load_stream(cfg.manifest);
  CompareOutputs out;
  out.runs = run_grid(cfg, stream);
  const ordered_json meta = to_json(cfg);

  out.comparison_csv = cfg.out_dir / "comparison.csv";
  write_comparison(out.comparison_csv, cfg, out.runs, meta);
  const auto rows = all_history(out.runs);
  out.history_csv = cfg.out_dir / "history.csv";
  write_history_csv(out.history_csv, rows, meta);
  out.curve_csv = cfg.out_dir / "curve.csv";
  write_curve(out.curve_csv, cfg, out.runs, meta);
  out.trace_csv = cfg.out_dir / "trace.csv";
  write_trace(out.trace_csv, out.runs, meta);
  out.forgetting_csv = cfg.out_dir / "forgetting.csv";
  const auto forgetting = forgetting_report(rows);
  write_forgetting_csv(out.forgetting_csv, forgetting, meta);
  return out;
}

fs::path cmd_sweep(const ExperimentConfig& cfg, const std::string& parameter, const std::vector<double>& values) {
  if (parameter != "M" && parameter != "lambda_base" && parameter != "K" && parameter != "mu")
    throw std::invalid_argument("unknown sweep parameter '" + parameter + "' (expected M, lambda_base, K, mu)");
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  cfg.validate();
  ensure_dir(cfg.out_dir);

  std::ostringstream body;
  ordered_json meta = to_json(cfg);
  meta["sweep"] = {{"parameter", parameter}, {"values", values}};
  csv::write_meta(body, meta);
  body << "parameter,value,strategy,seed,omega_accuracy,omega_precision,omega_recall,omega_f1\n";
  std::ostringstream aggregates;
  for (double value : values) {
    ExperimentConfig point = cfg;
    if (parameter == "M") {
      if (value < 1.0) {
        point.base.budget = Budget{true, value, 0};
      } else {
        point.base.budget = Budget{false, 0.0, static_cast<std::int64_t>(value)};
      }
    } else if (parameter == "lambda_base") {
      point.base.lambda_base = value;
    } else if (parameter == "K") {
      point.base.k = static_cast<int>(value);
    } else {
      point.base.mu = static_cast<int>(value);
    }
    point.out_dir = cfg.out_dir / ("sweep_" + parameter + "_" + csv::number(value));
    const auto result = cmd_compare(point);
    for (const auto& r : result.runs)
      body << parameter << ',' << csv::number(value) << ',' << to_string(r.kind) << ',' << r.seed << ','
           << csv::number(r.omega_accuracy) << ',' << csv::number(r.omega_precision) << ','
           << csv::number(r.omega_recall) << ',' << csv::number(r.omega_f1) << '\n';
    for (auto kind : cfg.strategies) {
      std::vector<double> acc, prec, rec, f1;
      for (const auto& r : result.runs)
        if (r.kind == kind) {
          acc.push_back(r.omega_accuracy);
          prec.push_back(r.omega_precision);
          rec.push_back(r.omega_recall);
          f1.push_back(r.omega_f1);
        }
      aggregates << parameter << ',' << csv::number(value) << ',' << to_string(kind) << ",median,"
                 << csv::number(median(acc)) << ',' << csv::number(median(prec)) << ','
                 << csv::number(median(rec)) << ',' << csv::number(median(f1)) << '\n';
    }
  }
  const fs::path path = cfg.out_dir / ("sweep_" + parameter + ".csv");
  write_text(path, body.str() + aggregates.str());
  return path;
}

namespace {

std::vector<Tokens> read_sentences(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::vector<Tokens> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    Tokens tokens;
    for (std::string w; words >> w;) tokens.push_back(w);
    out.push_back(std::move(tokens));
  }
  return out;
}

}  // namespace

fs::path cmd_score(const fs::path& candidates, const fs::path& references, const fs::path& out_dir) {
  const auto cands = read_sentences(candidates);
  const auto refs = read_sentences(references);
  if (cands.size() != refs.size())
    throw std::invalid_argument("candidate and reference files differ in line count (" + std::to_string(cands.size()) +
                                " vs " + std::to_string(refs.size()) + ")");
  if (cands.empty()) throw std::invalid_argument("nothing to score: empty input files");
  ensure_dir(out_dir);

  std::ostringstream out;
  csv::write_meta(out, ordered_json{{"candidates", candidates.generic_string()},
                                    {"references", references.generic_string()}});
  out << "line,bleu4,meteor,rouge_l\n";
  double meteor_sum = 0.0, rouge_sum = 0.0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const double b = sentence_bleu4(cands[i], refs[i]);
    const double m = meteor(cands[i], refs[i]);
    const double r = rouge_l(cands[i], refs[i]);
    meteor_sum += m;
    rouge_sum += r;
    out << i + 1 << ',' << csv::number(b) << ',' << csv::number(m) << ',' << csv::number(r) << '\n';
  }
  const double n = static_cast<double>(cands.size());
  out << "corpus," << csv::number(bleu4(cands, refs, BleuMode::Corpus)) << ',' << csv::number(meteor_sum / n) << ','
      << csv::number(rouge_sum / n) << '\n';
  const fs::path path = out_dir / "scores.csv";
  write_text(path, out.str());
  return path;
}

}  // namespace contlearn
