#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "contlearn/corpus.hpp"
#include "contlearn/exemplar.hpp"
#include "contlearn/model.hpp"
#include "contlearn/rng.hpp"

namespace contlearn::fixture {

/// Labeled texts over a small vocabulary with class-leaning tokens, so that
/// clustering and losses have some structure.
inline std::vector<Sample> random_samples(std::uint64_t seed, std::size_t n, int classes, const std::string& prefix = "s") {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.index(static_cast<std::size_t>(classes)));
    std::string text;
    const std::size_t len = 3 + rng.index(8);
    for (std::size_t k = 0; k < len; ++k) {
      if (k) text += ' ';
      text += rng.uniform() < 0.5 ? "c" + std::to_string(label) + "w" + std::to_string(rng.index(6))
                                  : "w" + std::to_string(rng.index(25));
    }
    char id[48];
    std::snprintf(id, sizeof id, "%s%05zu", prefix.c_str(), i);
    out.push_back({id, text, label, "g" + std::to_string(rng.index(4))});
  }
  return out;
}

inline Model random_model(std::uint64_t seed, int classes, Eigen::Index dim = 256, Eigen::Index hidden = 8) {
  Model m = init_model(Architecture{dim, hidden, classes}, seed);
  Rng rng(derive_seed(seed, "bias"));
  for (Eigen::Index c = 0; c < classes; ++c) m.params[m.arch.b2_offset() + c] = rng.uniform(-1.0, 1.0);
  return m;
}

/// Store for partitions 1..t-1 with `per_partition` exemplars each and
/// coarse losses so that ties occur.
inline ExemplarStore random_store(std::uint64_t seed, int t, std::size_t per_partition, std::int64_t budget) {
  Rng rng(seed);
  ExemplarStore store;
  store.budget = budget;
  for (int p = 1; p < t; ++p) {
    PartitionExemplars part{p, {}};
    for (std::size_t i = 0; i < per_partition; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "p%d-%04zu", p, rng.index(10000));
      part.exemplars.push_back({{id, "x", 0, ""}, static_cast<double>(rng.index(8)) / 4.0, p});
    }
    store.partitions.push_back(std::move(part));
  }
  return store;
}

}  // namespace contlearn::fixture
