#include "contlearn/exemplar.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "contlearn/apportion.hpp"
#include "contlearn/cluster.hpp"
#include "contlearn/rng.hpp"
#include "contlearn/textvec.hpp"

namespace contlearn {

std::size_t ExemplarStore::total() const {
  std::size_t n = 0;
  for (const auto& p : partitions) n += p.exemplars.size();
  return n;
}

std::vector<std::int64_t> ExemplarStore::sizes() const {
  std::vector<std::int64_t> out;
  for (const auto& p : partitions) out.push_back(static_cast<std::int64_t>(p.exemplars.size()));
  return out;
}

std::vector<Sample> ExemplarStore::samples() const {
  std::vector<Sample> out;
  out.reserve(total());
  for (const auto& p : partitions)
    for (const auto& e : p.exemplars) out.push_back(e.sample);
  return out;
}

std::vector<std::int64_t> cluster_quotas(std::span<const std::int64_t> cluster_sizes, std::int64_t budget) {
  if (cluster_sizes.empty()) throw std::invalid_argument("cluster_quotas: no clusters");
  const std::int64_t total = std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::int64_t{0});
  if (budget < 0 || budget > total) throw std::invalid_argument("cluster_quotas: budget exceeds the sample count");

  std::vector<std::int64_t> quotas(cluster_sizes.size(), 0);
  std::vector<bool> capped(cluster_sizes.size(), false);
  std::int64_t remaining = budget;
  while (remaining > 0) {
    std::vector<std::int64_t> weights(cluster_sizes.size(), 0);
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (!capped[i]) weights[i] = cluster_sizes[i] - quotas[i];
    const auto share = largest_remainder(weights, remaining);
    bool overflow = false;
    for (std::size_t i = 0; i < share.size(); ++i)
      if (quotas[i] + share[i] > cluster_sizes[i]) overflow = true;
    if (!overflow) {
      for (std::size_t i = 0; i < share.size(); ++i) quotas[i] += share[i];
      break;
    }
    // Fill the clusters that would overflow and spread the rest again.
    for (std::size_t i = 0; i < share.size(); ++i)
      if (!capped[i] && quotas[i] + share[i] >= cluster_sizes[i]) {
        remaining -= cluster_sizes[i] - quotas[i];
        quotas[i] = cluster_sizes[i];
        capped[i] = true;
      }
  }
  return quotas;
}

namespace {

struct ClassSlice {
  int label;
  std::vector<std::size_t> members;  // indices into the train set, input order
  std::int64_t budget;
};

std::vector<ClassSlice> class_budgets(std::span<const Sample> train_set, std::int64_t per_partition) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < train_set.size(); ++i) by_class[train_set[i].label].push_back(i);
  std::vector<std::int64_t> counts;
  for (const auto& [label, members] : by_class) counts.push_back(static_cast<std::int64_t>(members.size()));
  const auto budgets = largest_remainder(counts, std::min<std::int64_t>(per_partition, train_set.size()));
  std::vector<ClassSlice> out;
  std::size_t k = 0;
  for (auto& [label, members] : by_class) out.push_back({label, std::move(members), budgets[k++]});
  return out;
}

/// The `count` entries of `pool` with the smallest priorities, in priority order.
std::vector<std::size_t> draw_by_priority(std::span<const Sample> train_set, std::vector<std::size_t> pool,
                                          std::int64_t count, std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(pool.size());
  for (std::size_t idx : pool) keyed.emplace_back(priority_key(seed, train_set[idx].id), idx);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (std::int64_t i = 0; i < count; ++i) out.push_back(keyed[static_cast<std::size_t>(i)].second);
  return out;
}

std::int64_t per_partition_budget(std::int64_t budget, int t) {
  if (t < 1) throw std::invalid_argument("partition index must be >= 1");
  if (budget < 0) throw std::invalid_argument("exemplar budget must be non-negative");
  return budget / t;
}

}  // namespace

std::vector<StoredExemplar> select_for_partition(std::span<const Sample> train_set, const Model& model, int t,
                                                 std::int64_t budget, int k, int mu, std::uint64_t seed,
                                                 bool loss_filter) {
  if (train_set.empty()) throw std::invalid_argument("select_for_partition: empty training set");
  if (k < 1 || mu < 1) throw std::invalid_argument("select_for_partition: K and mu must be >= 1");
  const std::int64_t per_partition = per_partition_budget(budget, t);

  std::vector<double> losses(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) losses[i] = sample_loss(model, train_set[i]);

  const std::uint64_t draw_seed = derive_seed(seed, "select", static_cast<std::uint64_t>(t));
  std::vector<StoredExemplar> selected;
  for (const auto& slice : class_budgets(train_set, per_partition)) {
    if (slice.budget == 0) continue;
    std::vector<TokenList> docs;
    docs.reserve(slice.members.size());
    for (std::size_t idx : slice.members) docs.push_back(tokenize(train_set[idx].text));
    const TfidfModel tfidf = fit_tfidf(docs);
    std::vector<SparseVector> vectors;
    vectors.reserve(docs.size());
    for (const auto& d : docs) vectors.push_back(transform(tfidf, d));

    const Clustering clusters =
        kmeans(vectors, k, derive_seed(seed, "select-kmeans", static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(slice.label)));
    const auto sizes = clusters.cluster_sizes();
    const auto quotas = cluster_quotas(sizes, slice.budget);

    for (int c = 0; c < clusters.effective_k; ++c) {
      const std::int64_t quota = quotas[static_cast<std::size_t>(c)];
      if (quota == 0) continue;
      std::vector<std::size_t> members;
      for (std::size_t j = 0; j < slice.members.size(); ++j)
        if (clusters.assignments[j] == c) members.push_back(slice.members[j]);
      std::stable_sort(members.begin(), members.end(),
                       [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
      if (loss_filter) {
        const auto pool = std::min<std::int64_t>(static_cast<std::int64_t>(mu) * quota,
                                                 static_cast<std::int64_t>(members.size()));
        members.resize(static_cast<std::size_t>(pool));
      }
      for (std::size_t idx : draw_by_priority(train_set, std::move(members), quota, draw_seed))
        selected.push_back({train_set[idx], losses[idx], t});
    }
  }
  return selected;
}

std::vector<StoredExemplar> select_random(std::span<const Sample> train_set, const Model& model, int t,
                                          std::int64_t budget, std::uint64_t seed) {
  if (train_set.empty()) throw std::invalid_argument("select_random: empty training set");
  const std::int64_t per_partition = per_partition_budget(budget, t);
  const std::uint64_t draw_seed = derive_seed(seed, "select", static_cast<std::uint64_t>(t));
  std::vector<StoredExemplar> selected;
  for (const auto& slice : class_budgets(train_set, per_partition)) {
    for (std::size_t idx : draw_by_priority(train_set, slice.members, slice.budget, draw_seed))
      selected.push_back({train_set[idx], sample_loss(model, train_set[idx]), t});
  }
  return selected;
}

std::vector<std::int64_t> partition_targets(std::int64_t budget, int t) {
  if (t < 1) throw std::invalid_argument("partition_targets: t must be >= 1");
  const std::vector<std::int64_t> equal(static_cast<std::size_t>(t), 1);
  return largest_remainder(equal, budget);
}

ExemplarStore shrink_previous(const ExemplarStore& store, int t, std::int64_t budget, RemovalOrder order,
                              std::uint64_t seed) {
  const auto targets = partition_targets(budget, t);
  const std::uint64_t retain_seed = derive_seed(seed, "retain");
  ExemplarStore out;
  out.budget = budget;
  for (const auto& part : store.partitions) {
    if (part.t < 1 || part.t >= t) throw std::invalid_argument("shrink_previous: store holds partition " +
                                                               std::to_string(part.t) + " at step " + std::to_string(t));
    const auto target = static_cast<std::size_t>(targets[static_cast<std::size_t>(part.t - 1)]);
    const auto& items = part.exemplars;
    PartitionExemplars kept{part.t, {}};
    if (items.size() <= target) {
      kept.exemplars = items;
    } else {
      std::vector<std::size_t> removal(items.size());
      std::iota(removal.begin(), removal.end(), std::size_t{0});
      if (order == RemovalOrder::HighestLoss) {
        std::sort(removal.begin(), removal.end(), [&](std::size_t a, std::size_t b) {
          if (items[a].stored_loss != items[b].stored_loss) return items[a].stored_loss > items[b].stored_loss;
          return items[a].sample.id < items[b].sample.id;
        });
      } else {
        std::sort(removal.begin(), removal.end(), [&](std::size_t a, std::size_t b) {
          return priority_key(retain_seed, items[a].sample.id) > priority_key(retain_seed, items[b].sample.id);
        });
      }
      std::vector<bool> drop(items.size(), false);
      for (std::size_t k = 0; k < items.size() - target; ++k) drop[removal[k]] = true;
      for (std::size_t i = 0; i < items.size(); ++i)
        if (!drop[i]) kept.exemplars.push_back(items[i]);
    }
    out.partitions.push_back(std::move(kept));
  }
  return out;
}

ExemplarStore update_store(const ExemplarStore& store, std::vector<StoredExemplar> new_exemplars, int t,
                           std::int64_t budget, RemovalOrder order, std::uint64_t seed) {
  ExemplarStore out;
  if (t == 1) {
    out.budget = budget;
  } else {
    out = shrink_previous(store, t, budget, order, seed);
  }
  out.partitions.push_back({t, std::move(new_exemplars)});
  if (static_cast<std::int64_t>(out.total()) > budget)
    throw std::logic_error("exemplar store exceeds its budget: " + std::to_string(out.total()) + " > " +
                           std::to_string(budget));
  return out;
}

nlohmann::ordered_json to_json(const ExemplarStore& store) {
  nlohmann::ordered_json parts = nlohmann::ordered_json::array();
  for (const auto& p : store.partitions) {
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    for (const auto& e : p.exemplars)
      items.push_back({{"id", e.sample.id},
                       {"label", e.sample.label},
                       {"text", e.sample.text},
                       {"group", e.sample.group},
                       {"stored_loss", e.stored_loss}});
    parts.push_back({{"t", p.t}, {"exemplars", std::move(items)}});
  }
  return {{"budget", store.budget}, {"partitions", std::move(parts)}};
}

ExemplarStore store_from_json(const nlohmann::json& doc) {
  ExemplarStore store;
  store.budget = doc.at("budget").get<std::int64_t>();
  for (const auto& p : doc.at("partitions")) {
    PartitionExemplars part;
    part.t = p.at("t").get<int>();
    for (const auto& e : p.at("exemplars")) {
      StoredExemplar ex;
      ex.sample.id = e.at("id").get<std::string>();
      ex.sample.label = e.at("label").get<int>();
      ex.sample.text = e.at("text").get<std::string>();
      ex.sample.group = e.value("group", std::string{});
      ex.stored_loss = e.at("stored_loss").get<double>();
      ex.source_partition = part.t;
      part.exemplars.push_back(std::move(ex));
    }
    store.partitions.push_back(std::move(part));
  }
  return store;
}

}  // namespace contlearn
