#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "contlearn/corpus.hpp"
#include "contlearn/model.hpp"

namespace contlearn {

struct StoredExemplar {
  Sample sample;
  double stored_loss = 0.0;  // loss under the model that selected it
  int source_partition = 1;

  friend bool operator==(const StoredExemplar&, const StoredExemplar&) = default;
};

struct PartitionExemplars {
  int t = 1;
  std::vector<StoredExemplar> exemplars;

  friend bool operator==(const PartitionExemplars&, const PartitionExemplars&) = default;
};

/// Replay memory E_{1:t}: one ordered list per source partition.
struct ExemplarStore {
  std::int64_t budget = 0;
  std::vector<PartitionExemplars> partitions;  // ascending t

  std::size_t total() const;
  std::vector<std::int64_t> sizes() const;
  std::vector<Sample> samples() const;
  bool empty() const { return total() == 0; }

  friend bool operator==(const ExemplarStore&, const ExemplarStore&) = default;
};

/// How previous partitions are trimmed when the store shrinks.
enum class RemovalOrder {
  HighestLoss,     // drop highest stored loss first, ties by id ascending
  RandomPriority,  // drop in seeded random order (replay baseline)
};

/// Per-cluster quotas proportional to cluster size, summing to `budget`,
/// none above its cluster size. Throws if budget exceeds the total.
std::vector<std::int64_t> cluster_quotas(std::span<const std::int64_t> cluster_sizes, std::int64_t budget);

/// Representative selection for partition t: per-class budgets from
/// floor(M/t), TF-IDF + k-means inside each class, then per cluster a seeded
/// random pick of m_i among the min(mu*m_i, |cluster|) lowest-loss members.
/// With loss_filter = false the pool is the whole cluster.
std::vector<StoredExemplar> select_for_partition(std::span<const Sample> train_set, const Model& model, int t,
                                                 std::int64_t budget, int k, int mu, std::uint64_t seed,
                                                 bool loss_filter = true);

/// Uniform random selection of floor(M/t) samples with the same per-class
/// apportionment and seed discipline as select_for_partition.
std::vector<StoredExemplar> select_random(std::span<const Sample> train_set, const Model& model, int t,
                                          std::int64_t budget, std::uint64_t seed);

/// Largest-remainder split of M over t partitions; lowest indices get the +1s.
std::vector<std::int64_t> partition_targets(std::int64_t budget, int t);

ExemplarStore shrink_previous(const ExemplarStore& store, int t, std::int64_t budget,
                              RemovalOrder order = RemovalOrder::HighestLoss, std::uint64_t seed = 0);

/// Shrinks partitions 1..t-1 and appends the new exemplars under t.
/// Throws std::logic_error if the result exceeds the budget.
ExemplarStore update_store(const ExemplarStore& store, std::vector<StoredExemplar> new_exemplars, int t,
                           std::int64_t budget, RemovalOrder order = RemovalOrder::HighestLoss,
                           std::uint64_t seed = 0);

nlohmann::ordered_json to_json(const ExemplarStore& store);
ExemplarStore store_from_json(const nlohmann::json& doc);

}  // namespace contlearn
