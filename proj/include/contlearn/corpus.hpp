#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace contlearn {

/// Raised for malformed manifests and data files, bad labels and duplicate ids.
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Sample {
  std::string id;
  std::string text;
  int label = 0;
  std::string group;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct DatasetPartition {
  int index = 0;  // 1-based position in the stream
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<Sample> test;
};

struct PartitionFiles {
  std::string train;
  std::string valid;
  std::string test;
};

struct StreamManifest {
  int class_count = 0;
  std::vector<PartitionFiles> partitions;  // relative to the manifest directory
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};

struct Stream {
  int class_count = 0;
  std::vector<DatasetPartition> partitions;
};

struct DriftConfig {
  int n_partitions = 5;
  int n_classes = 3;
  int train_size = 2000;
  int valid_size = 250;
  int test_size = 250;
  int vocab_size = 3000;
  int tokens_per_sample = 24;
  double drift_strength = 0.9;
  double noise_rate = 0.1;
  std::uint64_t seed = 7;
  // Generator shape; the defaults are tuned to make forgetting visible.
  int signature_size = 40;        // signature pool per (class, partition)
  double signature_share = 0.55;  // fraction of a sample's tokens drawn from its signature pool
  double context_share = 0.4;     // fraction drawn from the partition's class-context pool
  double recycle_share = 0.5;     // fraction of replaced signature tokens taken from other classes' retired ones
  int groups_per_partition = 10;

  void validate() const;
};

// Line-delimited JSON records: {"id","text","label","group"}.
std::vector<Sample> read_samples(const std::filesystem::path& path, int class_count);
void write_samples(const std::filesystem::path& path, const std::vector<Sample>& samples);

StreamManifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const std::filesystem::path& manifest_path, const StreamManifest& manifest);

/// Loads every partition named by the manifest, in order, with indices 1..N.
/// Ids must be unique across the whole stream.
Stream load_stream(const std::filesystem::path& manifest_path);

/// Group-keyed split: groups are shuffled and dealt round-robin to `n`
/// partitions, then each partition is shuffled and cut by `ratios` with
/// largest-remainder rounding (ties favour train).
std::vector<DatasetPartition> split_by_group(const std::vector<Sample>& samples, int n,
                                             std::array<int, 3> ratios, std::uint64_t seed);

/// Writes partition_<t>_{train,valid,test}.jsonl and manifest.json into
/// `out_dir`. Byte-identical output for identical configs.
StreamManifest generate_synthetic(const DriftConfig& cfg, const std::filesystem::path& out_dir);

nlohmann::ordered_json to_json(const DriftConfig& cfg);

}  // namespace contlearn
