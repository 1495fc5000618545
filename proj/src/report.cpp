#include "contlearn/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>
#include <tuple>

#include "contlearn/csv.hpp"

namespace contlearn {

double HistoryRow::metric(std::string_view name) const {
  if (name == "accuracy") return accuracy;
  if (name == "precision") return precision;
  if (name == "recall") return recall;
  if (name == "f1") return f1;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

std::vector<HistoryRow> history_rows(std::string_view strategy, std::uint64_t seed,
                                     std::span<const EvalRecord> records) {
  std::vector<HistoryRow> rows;
  for (const auto& r : records)
    rows.push_back({std::string(strategy), seed, r.step, r.test_partition, r.accuracy, r.precision, r.recall, r.f1});
  return rows;
}

void write_history_csv(const std::filesystem::path& path, std::span<const HistoryRow> rows,
                       const nlohmann::ordered_json& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  csv::write_meta(out, meta);
  out << "strategy,seed,step,test_partition,accuracy,precision,recall,f1\n";
  for (const auto& r : rows)
    out << r.strategy << ',' << r.seed << ',' << r.step << ',' << r.test_partition << ',' << csv::number(r.accuracy)
        << ',' << csv::number(r.precision) << ',' << csv::number(r.recall) << ',' << csv::number(r.f1) << '\n';
}

std::vector<HistoryRow> read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> header;
  const auto rows = csv::read(in, header);
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument(path.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_strategy = column("strategy"), c_seed = column("seed"), c_step = column("step"),
                    c_test = column("test_partition"), c_acc = column("accuracy"), c_p = column("precision"),
                    c_r = column("recall"), c_f1 = column("f1");
  std::vector<HistoryRow> out;
  for (const auto& f : rows) {
    if (f.size() != header.size()) throw std::invalid_argument(path.string() + ": ragged row");
    out.push_back({f[c_strategy], std::stoull(f[c_seed]), std::stoi(f[c_step]), std::stoi(f[c_test]),
                   std::stod(f[c_acc]), std::stod(f[c_p]), std::stod(f[c_r]), std::stod(f[c_f1])});
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<ForgettingRecord> forgetting_report(std::span<const HistoryRow> history, std::string_view metric) {
  // (strategy, seed) -> (j, i) -> score, keeping first-appearance order of runs.
  std::vector<std::pair<std::string, std::uint64_t>> runs;
  std::map<std::pair<std::string, std::uint64_t>, std::map<std::pair<int, int>, double>> cells;
  for (const auto& row : history) {
    const auto key = std::make_pair(row.strategy, row.seed);
    if (!cells.count(key)) runs.push_back(key);
    cells[key][{row.test_partition, row.step}] = row.metric(metric);
  }

  std::vector<ForgettingRecord> out;
  std::vector<std::string> strategies;
  std::map<std::string, std::map<int, std::vector<ForgettingRecord>>> by_strategy;
  for (const auto& key : runs) {
    const auto& grid = cells[key];
    int steps = 0;
    for (const auto& [ji, score] : grid) steps = std::max(steps, ji.second);
    for (int i = 1; i <= steps; ++i)
      for (int j = 1; j <= i; ++j)
        if (!grid.count({j, i}))
          throw std::invalid_argument("incomplete history for " + key.first + " seed " + std::to_string(key.second) +
                                      ": missing (" + std::to_string(j) + ", " + std::to_string(i) + ")");
    if (!by_strategy.count(key.first)) strategies.push_back(key.first);
    for (int j = 1; j <= steps; ++j) {
      ForgettingRecord rec;
      rec.strategy = key.first;
      rec.seed = std::to_string(key.second);
      rec.test_partition = j;
      for (int i = j; i <= steps; ++i) rec.scores.push_back(grid.at({j, i}));
      if (rec.scores.front() > 0.0) rec.relative_drop = (rec.scores.front() - rec.scores.back()) / rec.scores.front();
      by_strategy[key.first][j].push_back(rec);
      out.push_back(std::move(rec));
    }
  }

  for (const auto& strategy : strategies) {
    for (const auto& [j, recs] : by_strategy[strategy]) {
      ForgettingRecord agg;
      agg.strategy = strategy;
      agg.seed = "median";
      agg.test_partition = j;
      std::size_t len = recs.front().scores.size();
      for (const auto& r : recs) len = std::min(len, r.scores.size());
      for (std::size_t s = 0; s < len; ++s) {
        std::vector<double> column;
        for (const auto& r : recs) column.push_back(r.scores[s]);
        agg.scores.push_back(median(column));
      }
      std::vector<double> drops;
      for (const auto& r : recs)
        if (r.relative_drop) drops.push_back(*r.relative_drop);
      if (!drops.empty()) agg.relative_drop = median(drops);
      out.push_back(std::move(agg));
    }
  }
  return out;
}

void write_forgetting_csv(const std::filesystem::path& path, std::span<const ForgettingRecord> records,
                          const nlohmann::ordered_json& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  csv::write_meta(out, meta);
  out << "strategy,seed,test_partition,score_when_learned,score_final,relative_drop,curve\n";
  for (const auto& r : records) {
    out << r.strategy << ',' << r.seed << ',' << r.test_partition << ',' << csv::number(r.scores.front()) << ','
        << csv::number(r.scores.back()) << ',' << (r.relative_drop ? csv::number(*r.relative_drop) : "") << ',';
    for (std::size_t s = 0; s < r.scores.size(); ++s) out << (s ? ";" : "") << csv::number(r.scores[s]);
    out << '\n';
  }
}

}  // namespace contlearn
