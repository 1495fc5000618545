#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "contlearn/corpus.hpp"
#include "contlearn/rng.hpp"
#include "test_util.hpp"

using namespace contlearn;
using contlearn::testing::scratch_dir;
using contlearn::testing::slurp;
using contlearn::testing::spit;

namespace {

std::string record(const std::string& id, int label, const std::string& group = "g") {
  return R"({"id":")" + id + R"(","text":"tok )" + id + R"(","label":)" + std::to_string(label) +
         R"(,"group":")" + group + "\"}\n";
}

std::filesystem::path write_stream(const std::filesystem::path& dir, int partitions, int class_count,
                                   int per_split = 1) {
  StreamManifest m;
  m.class_count = class_count;
  for (int t = 1; t <= partitions; ++t) {
    PartitionFiles f;
    for (const char* split : {"train", "valid", "test"}) {
      std::string body;
      for (int i = 0; i < per_split; ++i)
        body += record("p" + std::to_string(t) + split + std::to_string(i), i % class_count);
      const std::string name = "p" + std::to_string(t) + "_" + split + ".jsonl";
      spit(dir / name, body);
      (std::string(split) == "train" ? f.train : std::string(split) == "valid" ? f.valid : f.test) = name;
    }
    m.partitions.push_back(f);
  }
  write_manifest(dir / "manifest.json", m);
  return dir / "manifest.json";
}

}  // namespace

TEST(LoadStream, SinglePartitionTwoSamples) {
  const auto dir = scratch_dir();
  const auto manifest = write_stream(dir, 1, 2, 2);
  const Stream s = load_stream(manifest);
  ASSERT_EQ(s.partitions.size(), 1u);
  EXPECT_EQ(s.partitions[0].index, 1);
  EXPECT_EQ(s.partitions[0].train.size(), 2u);
  EXPECT_EQ(s.class_count, 2);
}

TEST(LoadStream, IndicesFollowManifestOrder) {
  const auto dir = scratch_dir();
  const Stream s = load_stream(write_stream(dir, 5, 3));
  ASSERT_EQ(s.partitions.size(), 5u);
  for (int t = 0; t < 5; ++t) {
    EXPECT_EQ(s.partitions[t].index, t + 1);
    EXPECT_EQ(s.partitions[t].train[0].id, "p" + std::to_string(t + 1) + "train0");
  }
}

TEST(LoadStream, LabelOutOfRangeNamesTheId) {
  const auto dir = scratch_dir();
  const auto manifest = write_stream(dir, 1, 3);
  spit(dir / "p1_train.jsonl", record("bad-one", 7));
  try {
    load_stream(manifest);
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("bad-one"), std::string::npos) << e.what();
  }
}

TEST(LoadStream, MalformedLineReportsLineNumber) {
  const auto dir = scratch_dir();
  const auto manifest = write_stream(dir, 1, 2);
  spit(dir / "p1_valid.jsonl", record("a", 0) + "{not json\n");
  try {
    load_stream(manifest);
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadStream, DuplicateIdsAcrossPartitionsRejected) {
  const auto dir = scratch_dir();
  const auto manifest = write_stream(dir, 2, 2);
  spit(dir / "p2_test.jsonl", record("p1train0", 0));
  EXPECT_THROW(load_stream(manifest), CorpusError);
}

TEST(LoadStream, MissingFileRejected) {
  const auto dir = scratch_dir();
  const auto manifest = write_stream(dir, 2, 2);
  std::filesystem::remove(dir / "p2_valid.jsonl");
  EXPECT_THROW(load_stream(manifest), CorpusError);
}

TEST(LoadStream, UnknownFieldsIgnored) {
  const auto dir = scratch_dir();
  const auto manifest = write_stream(dir, 1, 2);
  spit(dir / "p1_train.jsonl", R"({"id":"x","text":"t","label":1,"group":"","extra":[1,2]})" "\n");
  const Stream s = load_stream(manifest);
  EXPECT_EQ(s.partitions[0].train[0].id, "x");
  EXPECT_EQ(s.partitions[0].train[0].group, "");
}

TEST(Samples, WriteReadRoundTrip) {
  const auto dir = scratch_dir();
  std::vector<Sample> in{{"a", "int main() { return 0; }", 1, "proj/x"}, {"b", "caf\xc3\xa9 \"q\"", 0, ""}};
  write_samples(dir / "s.jsonl", in);
  EXPECT_EQ(read_samples(dir / "s.jsonl", 2), in);
}

TEST(SplitByGroup, TenGroupsFivePartitionsTwoEach) {
  std::vector<Sample> samples;
  for (int g = 0; g < 10; ++g)
    for (int i = 0; i < 10; ++i)
      samples.push_back({"s" + std::to_string(g) + "-" + std::to_string(i), "x", 0, "g" + std::to_string(g)});
  const auto parts = split_by_group(samples, 5, {8, 1, 1}, 3);
  ASSERT_EQ(parts.size(), 5u);
  for (const auto& p : parts) {
    std::set<std::string> groups;
    for (const auto* split : {&p.train, &p.valid, &p.test})
      for (const auto& s : *split) groups.insert(s.group);
    EXPECT_EQ(groups.size(), 2u);
  }
}

TEST(SplitByGroup, OneGroupTenSamplesIs811) {
  std::vector<Sample> samples;
  for (int i = 0; i < 10; ++i) samples.push_back({"s" + std::to_string(i), "x", 0, "only"});
  const auto parts = split_by_group(samples, 1, {8, 1, 1}, 1);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].train.size(), 8u);
  EXPECT_EQ(parts[0].valid.size(), 1u);
  EXPECT_EQ(parts[0].test.size(), 1u);
  EXPECT_EQ(parts[0].index, 1);
}

TEST(SplitByGroup, UnevenGroupsAudit) {
  Rng rng(99);
  std::vector<Sample> samples;
  std::map<std::string, std::size_t> group_sizes;
  for (int g = 0; g < 100; ++g) {
    const std::size_t n = 1 + rng.index(30);
    for (std::size_t i = 0; i < n; ++i)
      samples.push_back({"g" + std::to_string(g) + "s" + std::to_string(i), "x", 0, "g" + std::to_string(g)});
    group_sizes["g" + std::to_string(g)] = n;
  }
  const auto parts = split_by_group(samples, 5, {8, 1, 1}, 17);
  ASSERT_EQ(parts.size(), 5u);

  std::map<std::string, int> owner;
  std::set<std::string> ids;
  std::vector<std::size_t> group_counts;
  for (const auto& p : parts) {
    std::set<std::string> groups;
    for (const auto* split : {&p.train, &p.valid, &p.test})
      for (const auto& s : *split) {
        EXPECT_TRUE(ids.insert(s.id).second) << "sample placed twice: " << s.id;
        groups.insert(s.group);
        auto [it, fresh] = owner.emplace(s.group, p.index);
        EXPECT_EQ(it->second, p.index) << "group " << s.group << " in two partitions";
      }
    group_counts.push_back(groups.size());
    // Every group is complete inside its partition.
    std::map<std::string, std::size_t> seen;
    for (const auto* split : {&p.train, &p.valid, &p.test})
      for (const auto& s : *split) ++seen[s.group];
    for (const auto& [g, n] : seen) EXPECT_EQ(n, group_sizes[g]);
    // Largest-remainder 8:1:1.
    const std::size_t total = p.train.size() + p.valid.size() + p.test.size();
    const double exact[3] = {total * 0.8, total * 0.1, total * 0.1};
    const std::size_t got[3] = {p.train.size(), p.valid.size(), p.test.size()};
    for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(static_cast<double>(got[k]) - exact[k]), 1.0);
  }
  EXPECT_EQ(ids.size(), samples.size());
  const auto [lo, hi] = std::minmax_element(group_counts.begin(), group_counts.end());
  EXPECT_LE(*hi - *lo, 1u);
}

TEST(SplitByGroup, Errors) {
  std::vector<Sample> two{{"a", "x", 0, "g1"}, {"b", "x", 0, "g2"}};
  EXPECT_THROW(split_by_group({}, 1, {8, 1, 1}, 1), CorpusError);
  EXPECT_THROW(split_by_group(two, 3, {8, 1, 1}, 1), CorpusError);
  std::vector<Sample> ungrouped{{"a", "x", 0, ""}};
  EXPECT_THROW(split_by_group(ungrouped, 1, {8, 1, 1}, 1), CorpusError);
}

TEST(Generate, DefaultShape) {
  const auto dir = scratch_dir();
  DriftConfig cfg;
  const auto m = generate_synthetic(cfg, dir);
  EXPECT_EQ(m.partitions.size(), 5u);
  EXPECT_EQ(m.class_count, 3);
  const Stream s = load_stream(dir / "manifest.json");
  for (const auto& p : s.partitions) {
    EXPECT_EQ(p.train.size(), 2000u);
    EXPECT_EQ(p.valid.size(), 250u);
    EXPECT_EQ(p.test.size(), 250u);
  }
  EXPECT_EQ(m.meta.at("config").at("seed"), 7);
}

TEST(Generate, SameSeedByteIdentical) {
  const auto a = scratch_dir() / "a";
  const auto b = a.parent_path() / "b";
  DriftConfig cfg;
  cfg.train_size = 200;
  generate_synthetic(cfg, a);
  generate_synthetic(cfg, b);
  for (const auto& entry : std::filesystem::directory_iterator(a))
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
}

TEST(Generate, NoiseFreeLabelsMatchGenerativeClass) {
  const auto dir = scratch_dir();
  DriftConfig clean;
  clean.noise_rate = 0.0;
  clean.train_size = 300;
  DriftConfig noisy = clean;
  noisy.noise_rate = 0.1;
  generate_synthetic(clean, dir / "clean");
  generate_synthetic(noisy, dir / "noisy");
  const Stream c = load_stream(dir / "clean" / "manifest.json");
  const Stream n = load_stream(dir / "noisy" / "manifest.json");
  for (std::size_t t = 0; t < c.partitions.size(); ++t) {
    // The same texts are drawn either way; only train labels differ.
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < c.partitions[t].train.size(); ++i) {
      EXPECT_EQ(c.partitions[t].train[i].text, n.partitions[t].train[i].text);
      flipped += c.partitions[t].train[i].label != n.partitions[t].train[i].label;
    }
    EXPECT_EQ(flipped, 30u);
    EXPECT_EQ(c.partitions[t].test, n.partitions[t].test);
  }
}

TEST(Generate, DriftExtremes) {
  const auto dir = scratch_dir();
  // Tokens a class uses at least 8 times in a partition's train split: its
  // signature and context pools, not the thinly spread background.
  auto frequent = [](const Stream& s, std::size_t t, int label) {
    std::map<std::string, int> counts;
    for (const auto& x : s.partitions[t].train)
      if (x.label == label)
        for (std::size_t pos = 0, next; pos < x.text.size(); pos = next + 1) {
          next = x.text.find(' ', pos);
          if (next == std::string::npos) next = x.text.size();
          ++counts[x.text.substr(pos, next - pos)];
        }
    std::set<std::string> out;
    for (const auto& [tok, n] : counts)
      if (n >= 8) out.insert(tok);
    return out;
  };
  auto jaccard = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t both = 0;
    for (const auto& x : a) both += b.count(x);
    return static_cast<double>(both) / static_cast<double>(a.size() + b.size() - both);
  };
  DriftConfig cfg;
  cfg.noise_rate = 0.0;
  cfg.train_size = 600;
  cfg.n_partitions = 2;
  cfg.drift_strength = 0.0;
  generate_synthetic(cfg, dir / "still");
  cfg.drift_strength = 1.0;
  cfg.recycle_share = 0.0;
  generate_synthetic(cfg, dir / "full");
  const Stream still = load_stream(dir / "still" / "manifest.json");
  const Stream full = load_stream(dir / "full" / "manifest.json");
  for (int c = 0; c < 3; ++c) {
    EXPECT_GT(jaccard(frequent(still, 0, c), frequent(still, 1, c)), 0.9) << c;
    EXPECT_LT(jaccard(frequent(full, 0, c), frequent(full, 1, c)), 0.05) << c;
  }
}

TEST(Generate, ConfigErrors) {
  DriftConfig minority;
  minority.signature_share = 0.5;
  EXPECT_THROW(minority.validate(), CorpusError);
  DriftConfig tiny;
  tiny.vocab_size = 50;
  EXPECT_THROW(generate_synthetic(tiny, scratch_dir()), CorpusError);
  DriftConfig drift;
  drift.drift_strength = 1.5;
  EXPECT_THROW(drift.validate(), CorpusError);
}
