#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "selection_oracle.hpp"
#include "contlearn/exemplar.hpp"
#include "fixtures.hpp"

using namespace contlearn;

namespace {

std::vector<std::string> ids(const std::vector<StoredExemplar>& xs) {
  std::vector<std::string> out;
  for (const auto& x : xs) out.push_back(x.sample.id);
  return out;
}

}  // namespace

TEST(ClusterQuotas, Examples) {
  const std::vector<std::int64_t> a{30, 50, 20}, b{1, 1, 1};
  EXPECT_EQ(cluster_quotas(a, 10), (std::vector<std::int64_t>{3, 5, 2}));
  EXPECT_EQ(cluster_quotas(b, 2), (std::vector<std::int64_t>{1, 1, 0}));
  EXPECT_THROW(cluster_quotas(b, 4), std::invalid_argument);
  // Capping: proportional share of the big cluster is re-spread.
  const std::vector<std::int64_t> c{1, 9};
  EXPECT_EQ(cluster_quotas(c, 10), (std::vector<std::int64_t>{1, 9}));
}

TEST(ClusterQuotas, RandomConstraintAudit) {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::int64_t> sizes(1 + rng.index(6));
    std::int64_t total = 0;
    for (auto& s : sizes) total += s = 1 + static_cast<std::int64_t>(rng.index(20));
    const auto budget = static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(total) + 1));
    const auto q = cluster_quotas(sizes, budget);
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_GE(q[i], 0);
      EXPECT_LE(q[i], sizes[i]);
      sum += q[i];
    }
    EXPECT_EQ(sum, budget);
    EXPECT_EQ(q, oracle::quotas(sizes, budget));
  }
}

TEST(PartitionTargets, Examples) {
  EXPECT_EQ(partition_targets(99, 3), (std::vector<std::int64_t>{33, 33, 33}));
  EXPECT_EQ(partition_targets(100, 3), (std::vector<std::int64_t>{34, 33, 33}));
  EXPECT_EQ(partition_targets(10, 4), (std::vector<std::int64_t>{3, 3, 2, 2}));
}

TEST(Select, MuOneIsLowestLossPerCluster) {
  const auto train = fixture::random_samples(1, 120, 2);
  const Model m = fixture::random_model(2, 2);
  const auto picked = select_for_partition(train, m, 1, 12, 1, 1, 5);
  ASSERT_EQ(picked.size(), 12u);
  // K = 1: the single cluster per class is the class itself.
  for (int label = 0; label < 2; ++label) {
    std::vector<double> losses;
    for (const auto& s : train)
      if (s.label == label) losses.push_back(sample_loss(m, s));
    std::sort(losses.begin(), losses.end());
    std::vector<double> chosen;
    for (const auto& e : picked)
      if (e.sample.label == label) chosen.push_back(e.stored_loss);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i = 0; i < chosen.size(); ++i) EXPECT_EQ(chosen[i], losses[i]);
  }
}

TEST(Select, SaturatedBudgetTakesEverything) {
  const auto train = fixture::random_samples(3, 40, 3);
  const auto picked = select_for_partition(train, fixture::random_model(1, 3), 1, 100, 5, 5, 9);
  std::set<std::string> got;
  for (const auto& e : picked) got.insert(e.sample.id);
  EXPECT_EQ(got.size(), train.size());
}

TEST(Select, MatchesReferenceTranscription) {
  const auto train = fixture::random_samples(10, 300, 3);
  const Model m = fixture::random_model(11, 3);
  const auto picked = select_for_partition(train, m, 1, 30, 5, 5, 12);
  const auto expected = oracle::select_reference(train, m, 1, 30, 5, 5, 12);
  ASSERT_EQ(picked.size(), expected.size());
  for (std::size_t i = 0; i < picked.size(); ++i) {
    EXPECT_EQ(picked[i].sample.id, expected[i].id);
    EXPECT_EQ(picked[i].stored_loss, expected[i].loss);
    EXPECT_EQ(picked[i].source_partition, 1);
  }
}

TEST(Select, MuRankPropertyAndDeterminism) {
  const auto train = fixture::random_samples(20, 200, 2);
  const Model m = fixture::random_model(21, 2);
  const auto a = select_for_partition(train, m, 2, 40, 3, 2, 4);
  EXPECT_EQ(ids(a), ids(select_for_partition(train, m, 2, 40, 3, 2, 4)));
  EXPECT_EQ(a.size(), 20u);
  for (const auto& e : a) EXPECT_DOUBLE_EQ(e.stored_loss, sample_loss(m, e.sample));
}

TEST(Select, UniformWhenFilterOffAndOneCluster) {
  const auto train = fixture::random_samples(30, 150, 3);
  const Model m = fixture::random_model(31, 3);
  const auto repeat = select_for_partition(train, m, 2, 24, 1, 5, 8, false);
  const auto emr = select_random(train, m, 2, 24, 8);
  EXPECT_EQ(ids(repeat), ids(emr));
}

TEST(Shrink, HalvesOnSecondStep) {
  ExemplarStore store = fixture::random_store(1, 2, 100, 100);
  const auto out = shrink_previous(store, 2, 100);
  ASSERT_EQ(out.partitions.size(), 1u);
  EXPECT_EQ(out.partitions[0].exemplars.size(), 50u);
  const auto kept = oracle::keep_lowest(store, 2, 100);
  std::set<std::string> got;
  for (const auto& e : out.partitions[0].exemplars) got.insert(e.sample.id);
  EXPECT_EQ(got, kept.at(1));
}

TEST(Shrink, MatchesSortAndTruncateOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int t = 2 + static_cast<int>(seed % 4);
    const std::int64_t M = 40 + static_cast<std::int64_t>(seed);
    const auto store = fixture::random_store(seed, t, static_cast<std::size_t>(M / (t - 1)), M);
    const auto out = shrink_previous(store, t, M);
    const auto kept = oracle::keep_lowest(store, t, M);
    for (const auto& part : out.partitions) {
      std::set<std::string> got;
      for (const auto& e : part.exemplars) got.insert(e.sample.id);
      EXPECT_EQ(got, kept.at(part.t)) << "seed " << seed << " partition " << part.t;
      // Survivors keep their original relative order.
      const auto& before = store.partitions[static_cast<std::size_t>(part.t - 1)].exemplars;
      std::size_t cursor = 0;
      for (const auto& e : part.exemplars) {
        while (cursor < before.size() && !(before[cursor] == e)) ++cursor;
        EXPECT_LT(cursor, before.size());
      }
    }
  }
}

TEST(UpdateStore, SizesFollowLargestRemainder) {
  ExemplarStore store;
  const auto train = fixture::random_samples(2, 200, 2);
  const Model m = fixture::random_model(3, 2);
  for (int t = 1; t <= 5; ++t) {
    auto fresh = select_for_partition(train, m, t, 100, 2, 5, 1);
    for (auto& e : fresh) e.sample.id += "-t" + std::to_string(t);
    store = update_store(store, fresh, t, 100);
    if (t == 1) EXPECT_EQ(store.total(), 100u);
  }
  EXPECT_EQ(store.sizes(), (std::vector<std::int64_t>{20, 20, 20, 20, 20}));

  ExemplarStore small;
  for (int t = 1; t <= 4; ++t) small = update_store(small, select_for_partition(train, m, t, 10, 2, 5, 1), t, 10);
  EXPECT_EQ(small.sizes(), (std::vector<std::int64_t>{3, 3, 2, 2}));
}

TEST(UpdateStore, BudgetViolationIsLogicError) {
  const auto train = fixture::random_samples(2, 50, 2);
  auto too_many = select_for_partition(train, fixture::random_model(1, 2), 1, 20, 2, 5, 1);
  EXPECT_THROW(update_store({}, too_many, 1, 5), std::logic_error);
}

TEST(StoreJson, RoundTrip) {
  ExemplarStore store = fixture::random_store(4, 4, 3, 9);
  store.partitions[0].exemplars[0].sample = {"weird\"id", "text with \\ and \xc3\xa9", 2, "grp"};
  store.partitions[0].exemplars[0].stored_loss = 0.1 + 0.2;
  const auto back = store_from_json(nlohmann::json::parse(to_json(store).dump()));
  EXPECT_EQ(back, store);
}
