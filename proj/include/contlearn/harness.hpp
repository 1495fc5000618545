#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contlearn/corpus.hpp"
#include "contlearn/report.hpp"
#include "contlearn/strategy.hpp"

namespace contlearn {

struct ExperimentConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir = ".";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<StrategyKind> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  StrategyConfig base;  // kind and seed are overridden per run
  int threads = 0;      // 0: one per hardware thread

  void validate() const;
};

nlohmann::ordered_json to_json(const StrategyConfig& cfg);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

/// Outcome of one (strategy, seed) run, without the heavy model state.
struct RunSummary {
  StrategyKind kind = StrategyKind::FT;
  std::uint64_t seed = 0;
  std::vector<EvalRecord> history;
  std::vector<StepTrace> trace;
  ExemplarStore store;
  double omega_accuracy = 0.0;
  double omega_precision = 0.0;
  double omega_recall = 0.0;
  double omega_f1 = 0.0;
};

RunSummary summarize(StrategyKind kind, std::uint64_t seed, const RunState& state);

/// Runs every (strategy, seed) pair, in parallel when threads allow.
/// Results come back sorted by strategy order, then seed order.
std::vector<RunSummary> run_grid(const ExperimentConfig& cfg, const Stream& stream);

std::filesystem::path cmd_generate(const DriftConfig& cfg, const std::filesystem::path& out_dir);

struct RunOutputs {
  std::filesystem::path history_csv;
  std::filesystem::path summary_json;
  std::filesystem::path forgetting_csv;
  std::filesystem::path model_bin;
  std::filesystem::path anchor_bin;  // empty unless EWC/REPEAT
  std::filesystem::path store_json;  // empty unless EMR/REPEAT
};

/// Single strategy, single seed: base.kind and seeds.front() are used.
RunOutputs cmd_run(const ExperimentConfig& cfg);

struct CompareOutputs {
  std::filesystem::path comparison_csv;
  std::filesystem::path history_csv;
  std::filesystem::path curve_csv;
  std::filesystem::path trace_csv;
  std::filesystem::path forgetting_csv;
  std::vector<RunSummary> runs;
};

CompareOutputs cmd_compare(const ExperimentConfig& cfg);

/// `parameter` is one of M, lambda_base, K, mu. M values below 1 are budget
/// fractions, values of 1 and above absolute counts.
std::filesystem::path cmd_sweep(const ExperimentConfig& cfg, const std::string& parameter,
                                const std::vector<double>& values);

/// Scores parallel candidate / reference files (one whitespace-tokenized
/// sentence per line). Writes per-line rows and an aggregate row.
std::filesystem::path cmd_score(const std::filesystem::path& candidates, const std::filesystem::path& references,
                                const std::filesystem::path& out_dir);

}  // namespace contlearn
