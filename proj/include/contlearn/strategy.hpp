#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "contlearn/corpus.hpp"
#include "contlearn/ewc.hpp"
#include "contlearn/exemplar.hpp"
#include "contlearn/model.hpp"

namespace contlearn {

enum class StrategyKind { FT, EMR, EWC, REPEAT, UPPER };

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);  // case-insensitive
inline constexpr StrategyKind kAllStrategies[] = {StrategyKind::FT, StrategyKind::EMR, StrategyKind::EWC,
                                                  StrategyKind::REPEAT, StrategyKind::UPPER};

/// Exemplar budget M: an absolute count, or a fraction of the training data
/// seen so far (re-resolved at every step).
struct Budget {
  bool fractional = true;
  double fraction = 0.01;
  std::int64_t absolute = 0;

  std::int64_t resolve(std::int64_t cumulative_train) const;
  std::string describe() const;
};

struct StrategyConfig {
  StrategyKind kind = StrategyKind::REPEAT;
  int epochs = 10;
  int batch_size = 32;
  Budget budget;
  int k = 5;
  int mu = 5;
  double lambda_base = 2000.0;
  bool loss_filter = true;  // false: random pick inside clusters and random removal
  std::uint64_t seed = 1;
  Eigen::Index feature_dim = Eigen::Index{1} << 14;
  Eigen::Index hidden_dim = 64;
  double learning_rate = 1e-3;

  void validate() const;
};

struct EvalRecord {
  int step = 0;            // i: partitions learned so far
  int test_partition = 0;  // j <= i
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct StepTrace {
  int step = 0;
  std::int64_t budget = 0;
  double lambda = 0.0;
  std::size_t mixture_size = 0;
  std::vector<double> epoch_losses;  // mean task loss per epoch
  std::vector<std::int64_t> store_sizes;
};

struct RunState {
  Model model;
  OptimizerState<double> optimizer;
  ExemplarStore store;
  std::optional<AnchorState> anchor;
  std::vector<EvalRecord> history;
  std::vector<StepTrace> trace;
  int step = 0;
  int class_count = 0;
  std::int64_t cumulative_train = 0;
  std::vector<std::vector<Sample>> seen_tests;
  std::vector<Eigen::Index> active_rows;  // W1 rows that have ever received gradient
  std::vector<char> row_active;
};

RunState init_run(const StrategyConfig& cfg, int class_count);

/// Training sets of earlier partitions. Every read is counted so tests can
/// check that only the joint-training upper bound touches them.
class PastTrainData {
 public:
  explicit PastTrainData(std::span<const DatasetPartition> partitions) : partitions_(partitions) {}

  std::size_t size() const { return partitions_.size(); }
  const std::vector<Sample>& train(std::size_t j) const {
    ++reads_;
    return partitions_[j].train;
  }
  std::size_t reads() const { return reads_; }

 private:
  std::span<const DatasetPartition> partitions_;
  mutable std::size_t reads_ = 0;
};

/// Trains on one partition, updates replay memory / anchor, evaluates on
/// S_1..S_t. `past` is required for UPPER and ignored by everything else.
void run_step(const StrategyConfig& cfg, RunState& state, const DatasetPartition& partition,
              const PastTrainData* past = nullptr);

RunState run_stream(const StrategyConfig& cfg, const Stream& stream);

/// Scores `model` on a labeled set: accuracy plus binary (C = 2, positive
/// class 1) or macro P/R/F1.
EvalRecord evaluate(const Model& model, std::span<const Sample> samples, int class_count);

namespace detail {

/// Mini-batch Adam over a sample mixture with an optional elastic penalty.
/// Only W1 rows that have ever been touched are visited; this is exactly
/// equivalent to dense Adam because untouched rows have zero moments.
std::vector<double> train_epochs(RunState& state, std::span<const LabeledFeatures<double>> mixture, int epochs,
                                 int batch_size, std::uint64_t shuffle_seed, const AnchorState* anchor,
                                 double lambda);

}  // namespace detail

}  // namespace contlearn
