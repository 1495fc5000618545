#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace contlearn {

/// Splits `total` into integer parts proportional to `weights` using the
/// largest-remainder method. Remainder ties go to the lowest index.
/// Throws std::invalid_argument on negative inputs or all-zero weights
/// with a positive total.
std::vector<std::int64_t> largest_remainder(std::span<const std::int64_t> weights,
                                            std::int64_t total);

}  // namespace contlearn
