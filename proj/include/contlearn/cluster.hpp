#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "contlearn/textvec.hpp"

namespace contlearn {

struct Clustering {
  std::vector<int> assignments;     // per input, in [0, k)
  Eigen::MatrixXd centroids;        // k x dim, one centroid per row
  double inertia = 0.0;
  int requested_k = 0;
  int effective_k = 0;              // min(requested_k, distinct inputs)
  int iterations = 0;
  std::vector<double> inertia_trace;  // inertia after each assignment pass

  std::vector<std::int64_t> cluster_sizes() const;
};

/// k-means++ seeding followed by Lloyd iterations on squared Euclidean
/// distance. Ties resolve to the lowest centroid index; an empty cluster is
/// reseeded with the point farthest from its own centroid.
Clustering kmeans(std::span<const SparseVector> vectors, int k, std::uint64_t seed,
                  int max_iter = 50);

}  // namespace contlearn
