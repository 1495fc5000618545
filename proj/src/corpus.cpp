#include "contlearn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "contlearn/apportion.hpp"
#include "contlearn/rng.hpp"

namespace contlearn {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void DriftConfig::validate() const {
  if (n_partitions < 1 || n_classes < 2 || train_size < 1 || valid_size < 1 || test_size < 1 ||
      vocab_size < 1 || tokens_per_sample < 1 || signature_size < 1 || groups_per_partition < 1)
    throw CorpusError("drift config: sizes must be positive (and at least 2 classes)");
  if (!(drift_strength >= 0.0 && drift_strength <= 1.0))
    throw CorpusError("drift config: drift_strength must lie in [0, 1]");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0))
    throw CorpusError("drift config: noise_rate must lie in [0, 1]");
  if (!(signature_share > 0.5 && signature_share <= 1.0))
    throw CorpusError("drift config: signature_share must lie in (0.5, 1]");
  if (!(context_share >= 0.0 && signature_share + context_share <= 1.0))
    throw CorpusError("drift config: context_share must be >= 0 and leave room for the signature");
  if (!(recycle_share >= 0.0 && recycle_share <= 1.0))
    throw CorpusError("drift config: recycle_share must lie in [0, 1]");
}

ordered_json to_json(const DriftConfig& cfg) {
  return ordered_json{{"n_partitions", cfg.n_partitions},
                      {"n_classes", cfg.n_classes},
                      {"train_size", cfg.train_size},
                      {"valid_size", cfg.valid_size},
                      {"test_size", cfg.test_size},
                      {"vocab_size", cfg.vocab_size},
                      {"tokens_per_sample", cfg.tokens_per_sample},
                      {"drift_strength", cfg.drift_strength},
                      {"noise_rate", cfg.noise_rate},
                      {"seed", cfg.seed},
                      {"signature_size", cfg.signature_size},
                      {"signature_share", cfg.signature_share},
                      {"context_share", cfg.context_share},
                      {"recycle_share", cfg.recycle_share},
                      {"groups_per_partition", cfg.groups_per_partition}};
}

std::vector<Sample> read_samples(const fs::path& path, int class_count) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open data file " + path.string());
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ", line " + std::to_string(line_no);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorpusError(where + ": malformed record (" + e.what() + ")");
    }
    if (!record.is_object()) throw CorpusError(where + ": record is not a JSON object");
    auto field = [&](const char* name) -> const nlohmann::json& {
      auto it = record.find(name);
      if (it == record.end()) throw CorpusError(where + ": missing field '" + name + "'");
      return *it;
    };
    const auto& id = field("id");
    const auto& text = field("text");
    const auto& label = field("label");
    const auto& group = field("group");
    if (!id.is_string() || !text.is_string() || !group.is_string())
      throw CorpusError(where + ": id, text and group must be strings");
    if (!label.is_number_integer()) throw CorpusError(where + ": label must be an integer");
    Sample s{id.get<std::string>(), text.get<std::string>(), 0, group.get<std::string>()};
    if (s.id.empty()) throw CorpusError(where + ": empty id");
    const auto raw_label = label.get<std::int64_t>();
    if (raw_label < 0 || raw_label >= class_count)
      throw CorpusError(where + ": sample '" + s.id + "' has label " + std::to_string(raw_label) +
                        " outside [0, " + std::to_string(class_count) + ")");
    s.label = static_cast<int>(raw_label);
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_samples(const fs::path& path, const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + path.string());
  for (const auto& s : samples) {
    ordered_json record{{"id", s.id}, {"text", s.text}, {"label", s.label}, {"group", s.group}};
    out << record.dump() << '\n';
  }
  if (!out) throw CorpusError("write failed for " + path.string());
}

StreamManifest read_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw CorpusError("cannot open manifest " + manifest_path.string());
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw CorpusError("manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
  }
  StreamManifest manifest;
  try {
    manifest.class_count = doc.at("class_count").get<int>();
    for (const auto& p : doc.at("partitions")) {
      manifest.partitions.push_back({p.at("train").get<std::string>(),
                                     p.at("valid").get<std::string>(),
                                     p.at("test").get<std::string>()});
    }
    if (doc.contains("meta")) manifest.meta = doc["meta"];
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError("manifest " + manifest_path.string() + ": " + e.what());
  }
  if (manifest.class_count < 1) throw CorpusError("manifest: class_count must be positive");
  if (manifest.partitions.empty()) throw CorpusError("manifest: no partitions");
  return manifest;
}

void write_manifest(const fs::path& manifest_path, const StreamManifest& manifest) {
  ordered_json parts = ordered_json::array();
  for (const auto& p : manifest.partitions)
    parts.push_back({{"train", p.train}, {"valid", p.valid}, {"test", p.test}});
  ordered_json doc{{"class_count", manifest.class_count},
                   {"partitions", std::move(parts)},
                   {"meta", manifest.meta}};
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + manifest_path.string());
  out << doc.dump(2) << '\n';
}

Stream load_stream(const fs::path& manifest_path) {
  const StreamManifest manifest = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  Stream stream;
  stream.class_count = manifest.class_count;
  std::unordered_set<std::string> seen;
  int index = 0;
  for (const auto& files : manifest.partitions) {
    DatasetPartition part;
    part.index = ++index;
    auto load = [&](const std::string& rel) {
      const fs::path p = base / rel;
      if (!fs::exists(p)) throw CorpusError("missing data file " + p.string());
      auto samples = read_samples(p, manifest.class_count);
      for (const auto& s : samples)
        if (!seen.insert(s.id).second) throw CorpusError("duplicate sample id '" + s.id + "' in " + p.string());
      return samples;
    };
    part.train = load(files.train);
    part.valid = load(files.valid);
    part.test = load(files.test);
    stream.partitions.push_back(std::move(part));
  }
  return stream;
}

std::vector<DatasetPartition> split_by_group(const std::vector<Sample>& samples, int n,
                                             std::array<int, 3> ratios, std::uint64_t seed) {
  if (samples.empty()) throw CorpusError("split_by_group: empty input");
  if (n < 1) throw CorpusError("split_by_group: partition count must be positive");
  for (int r : ratios)
    if (r <= 0) throw CorpusError("split_by_group: ratios must be positive");

  std::set<std::string> group_set;
  for (const auto& s : samples) {
    if (s.group.empty()) throw CorpusError("split_by_group: sample '" + s.id + "' has no group");
    group_set.insert(s.group);
  }
  if (static_cast<std::size_t>(n) > group_set.size())
    throw CorpusError("split_by_group: " + std::to_string(n) + " partitions requested but only " +
                      std::to_string(group_set.size()) + " distinct groups");

  std::vector<std::string> groups(group_set.begin(), group_set.end());
  Rng rng(derive_seed(seed, "split-groups"));
  rng.shuffle(std::span<std::string>(groups));
  std::map<std::string, int> owner;
  for (std::size_t i = 0; i < groups.size(); ++i) owner[groups[i]] = static_cast<int>(i % n);

  std::vector<std::vector<Sample>> pooled(n);
  for (const auto& s : samples) pooled[owner.at(s.group)].push_back(s);

  const std::array<std::int64_t, 3> weights{ratios[0], ratios[1], ratios[2]};
  std::vector<DatasetPartition> out;
  for (int p = 0; p < n; ++p) {
    auto& pool = pooled[p];
    Rng part_rng(derive_seed(seed, "split-samples", static_cast<std::uint64_t>(p)));
    part_rng.shuffle(std::span<Sample>(pool));
    const auto sizes = largest_remainder(weights, static_cast<std::int64_t>(pool.size()));
    DatasetPartition part;
    part.index = p + 1;
    auto it = pool.begin();
    part.train.assign(it, it + sizes[0]);
    it += sizes[0];
    part.valid.assign(it, it + sizes[1]);
    it += sizes[1];
    part.test.assign(it, it + sizes[2]);
    out.push_back(std::move(part));
  }
  return out;
}

namespace {

std::string token_name(int id) { return "w" + std::to_string(id); }

struct Vocabulary {
  std::vector<int> background;
  std::vector<std::vector<int>> context;                 // [class]
  std::vector<std::vector<std::vector<int>>> signature;  // [partition][class]
};

Vocabulary allocate_vocabulary(const DriftConfig& cfg, Rng& rng) {
  const int replaced = static_cast<int>(std::lround(cfg.drift_strength * cfg.signature_size));
  const int context_tokens = cfg.context_share > 0.0 ? cfg.n_classes * cfg.signature_size : 0;
  const long signature_tokens =
      static_cast<long>(cfg.n_classes) * (cfg.signature_size + (cfg.n_partitions - 1) * replaced);
  const long background = cfg.vocab_size - context_tokens - signature_tokens;
  if (background < 1)
    throw CorpusError("vocab_size " + std::to_string(cfg.vocab_size) +
                      " too small: disjoint pools need " +
                      std::to_string(context_tokens + signature_tokens + 1) + " tokens");

  Vocabulary v;
  int next = 0;
  for (long i = 0; i < background; ++i) v.background.push_back(next++);
  v.context.resize(cfg.n_classes);
  if (context_tokens > 0)
    for (auto& pool : v.context)
      for (int i = 0; i < cfg.signature_size; ++i) pool.push_back(next++);

  v.signature.assign(cfg.n_partitions, std::vector<std::vector<int>>(cfg.n_classes));
  for (int c = 0; c < cfg.n_classes; ++c)
    for (int i = 0; i < cfg.signature_size; ++i) v.signature[0][c].push_back(next++);
  // Replaced slots take tokens another class retired at the same step (never
  // one this class has used before), then fresh tokens.
  const int recycled = static_cast<int>(std::lround(cfg.recycle_share * replaced));
  std::vector<std::set<int>> used(cfg.n_classes);
  for (int c = 0; c < cfg.n_classes; ++c) used[c].insert(v.signature[0][c].begin(), v.signature[0][c].end());
  std::vector<int> positions(cfg.signature_size);
  for (int t = 1; t < cfg.n_partitions; ++t) {
    std::vector<std::vector<int>> retired(cfg.n_classes), slots(cfg.n_classes);
    for (int c = 0; c < cfg.n_classes; ++c) {
      v.signature[t][c] = v.signature[t - 1][c];
      for (int i = 0; i < cfg.signature_size; ++i) positions[i] = i;
      rng.shuffle(std::span<int>(positions));
      slots[c].assign(positions.begin(), positions.begin() + replaced);
      for (int slot : slots[c]) retired[c].push_back(v.signature[t - 1][c][slot]);
    }
    for (int c = 0; c < cfg.n_classes; ++c) {
      std::vector<int> donors;
      for (int o = 1; o < cfg.n_classes; ++o)
        for (int tok : retired[(c + o) % cfg.n_classes])
          if (!used[c].count(tok)) donors.push_back(tok);
      rng.shuffle(std::span<int>(donors));
      for (int k = 0; k < replaced; ++k) {
        const int tok = k < recycled && k < static_cast<int>(donors.size()) ? donors[k] : next++;
        v.signature[t][c][slots[c][k]] = tok;
        used[c].insert(tok);
      }
    }
  }
  return v;
}

std::vector<Sample> draw_split(const DriftConfig& cfg, const Vocabulary& vocab, int t,
                               const char* split, int count, Rng& rng) {
  const int n_sig = static_cast<int>(std::lround(cfg.signature_share * cfg.tokens_per_sample));
  const int n_ctx = static_cast<int>(std::lround(cfg.context_share * cfg.tokens_per_sample));
  const int n_bg = std::max(0, cfg.tokens_per_sample - n_sig - n_ctx);
  auto pick = [&](const std::vector<int>& pool) { return pool[rng.index(pool.size())]; };

  std::vector<int> labels(count);
  for (int i = 0; i < count; ++i) labels[i] = i % cfg.n_classes;
  rng.shuffle(std::span<int>(labels));

  std::vector<Sample> out;
  out.reserve(count);
  std::vector<int> tokens;
  for (int i = 0; i < count; ++i) {
    const int c = labels[i];
    // Context cues rotate between classes from one partition to the next.
    const int rotated = (c + t) % cfg.n_classes;
    tokens.clear();
    for (int k = 0; k < n_sig; ++k) tokens.push_back(pick(vocab.signature[t][c]));
    for (int k = 0; k < n_ctx; ++k) {
      const bool shift = rng.uniform() < cfg.drift_strength;
      tokens.push_back(pick(vocab.context[shift ? rotated : c]));
    }
    for (int k = 0; k < n_bg; ++k) tokens.push_back(pick(vocab.background));
    rng.shuffle(std::span<int>(tokens));

    std::string text;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      if (k) text += ' ';
      text += token_name(tokens[k]);
    }
    char id[64];
    std::snprintf(id, sizeof id, "p%d-%s-%05d", t + 1, split, i);
    const int group = static_cast<int>(rng.index(cfg.groups_per_partition));
    out.push_back({id, std::move(text), c, "p" + std::to_string(t + 1) + "-g" + std::to_string(group)});
  }
  return out;
}

void flip_labels(std::vector<Sample>& samples, int n_classes, double rate, Rng& rng) {
  const auto n_flip = static_cast<std::size_t>(std::llround(rate * static_cast<double>(samples.size())));
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t k = 0; k < n_flip; ++k) {
    auto& s = samples[order[k]];
    const int offset = 1 + static_cast<int>(rng.index(n_classes - 1));
    s.label = (s.label + offset) % n_classes;
  }
}

}  // namespace

StreamManifest generate_synthetic(const DriftConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw CorpusError("output directory " + out_dir.string() + " is not writable");

  Rng vocab_rng(derive_seed(cfg.seed, "vocabulary"));
  const Vocabulary vocab = allocate_vocabulary(cfg, vocab_rng);

  StreamManifest manifest;
  manifest.class_count = cfg.n_classes;
  manifest.meta = ordered_json{{"generator", "synthetic-drift"},
                               {"version", CONTLEARN_VERSION},
                               {"config", to_json(cfg)}};
  for (int t = 0; t < cfg.n_partitions; ++t) {
    Rng rng(derive_seed(cfg.seed, "partition", static_cast<std::uint64_t>(t)));
    auto train = draw_split(cfg, vocab, t, "train", cfg.train_size, rng);
    auto valid = draw_split(cfg, vocab, t, "valid", cfg.valid_size, rng);
    auto test = draw_split(cfg, vocab, t, "test", cfg.test_size, rng);
    flip_labels(train, cfg.n_classes, cfg.noise_rate, rng);

    const std::string stem = "partition_" + std::to_string(t + 1);
    PartitionFiles files{stem + "_train.jsonl", stem + "_valid.jsonl", stem + "_test.jsonl"};
    write_samples(out_dir / files.train, train);
    write_samples(out_dir / files.valid, valid);
    write_samples(out_dir / files.test, test);
    manifest.partitions.push_back(std::move(files));
  }
  write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace contlearn
