#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contlearn/strategy.hpp"

namespace contlearn {

/// One line of the harness history CSV.
struct HistoryRow {
  std::string strategy;
  std::uint64_t seed = 0;
  int step = 0;
  int test_partition = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  double metric(std::string_view name) const;
};

std::vector<HistoryRow> history_rows(std::string_view strategy, std::uint64_t seed,
                                     std::span<const EvalRecord> records);

void write_history_csv(const std::filesystem::path& path, std::span<const HistoryRow> rows,
                       const nlohmann::ordered_json& meta);
std::vector<HistoryRow> read_history_csv(const std::filesystem::path& path);

/// Score of test partition j from the step it was learned (j) to the last
/// step K. `seed` is the run seed, or "median" for aggregate rows.
struct ForgettingRecord {
  std::string strategy;
  std::string seed;
  int test_partition = 0;
  std::vector<double> scores;           // steps j..K
  std::optional<double> relative_drop;  // (s_jj - s_jK) / s_jj when s_jj > 0
};

/// One record per (strategy, seed, j) followed by median rows across seeds.
/// Throws std::invalid_argument if any run's triangle is incomplete.
std::vector<ForgettingRecord> forgetting_report(std::span<const HistoryRow> history,
                                                std::string_view metric = "accuracy");

void write_forgetting_csv(const std::filesystem::path& path, std::span<const ForgettingRecord> records,
                          const nlohmann::ordered_json& meta);

double median(std::vector<double> values);

}  // namespace contlearn
