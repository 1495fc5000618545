#include "contlearn/apportion.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace contlearn {

std::vector<std::int64_t> largest_remainder(std::span<const std::int64_t> weights,
                                            std::int64_t total) {
  if (total < 0) throw std::invalid_argument("largest_remainder: negative total");
  std::int64_t weight_sum = 0;
  for (auto w : weights) {
    if (w < 0) throw std::invalid_argument("largest_remainder: negative weight");
    weight_sum += w;
  }
  std::vector<std::int64_t> parts(weights.size(), 0);
  if (total == 0) return parts;
  if (weight_sum == 0) throw std::invalid_argument("largest_remainder: all weights are zero");

  std::vector<std::int64_t> remainders(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    // Exact integer arithmetic keeps remainder ties exact.
    const __int128 scaled = static_cast<__int128>(total) * weights[i];
    parts[i] = static_cast<std::int64_t>(scaled / weight_sum);
    remainders[i] = static_cast<std::int64_t>(scaled % weight_sum);
    assigned += parts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::int64_t k = 0; k < total - assigned; ++k) ++parts[order[static_cast<std::size_t>(k)]];
  return parts;
}

}  // namespace contlearn
