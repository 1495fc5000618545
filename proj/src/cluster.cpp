#include "contlearn/cluster.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include "contlearn/rng.hpp"

namespace contlearn {

namespace {

using Storage = SparseVector::Storage;

double squared_distance(const SparseVector& x, const Eigen::MatrixXd& centroids, Eigen::Index row,
                        const Eigen::VectorXd& centroid_sq) {
  double dot = 0.0;
  for (Storage::InnerIterator it(x.entries()); it; ++it) dot += it.value() * centroids(row, it.index());
  return std::max(0.0, x.norm() * x.norm() - 2.0 * dot + centroid_sq[row]);
}

int count_distinct(std::span<const SparseVector> vectors) {
  std::set<std::vector<std::pair<Eigen::Index, double>>> distinct;
  for (const auto& v : vectors) {
    std::vector<std::pair<Eigen::Index, double>> key;
    for (Storage::InnerIterator it(v.entries()); it; ++it) key.emplace_back(it.index(), it.value());
    distinct.insert(std::move(key));
  }
  return static_cast<int>(distinct.size());
}

void set_row(Eigen::MatrixXd& centroids, Eigen::Index row, const SparseVector& x) {
  centroids.row(row).setZero();
  for (Storage::InnerIterator it(x.entries()); it; ++it) centroids(row, it.index()) = it.value();
}

}  // namespace

std::vector<std::int64_t> Clustering::cluster_sizes() const {
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(effective_k), 0);
  for (int a : assignments) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

Clustering kmeans(std::span<const SparseVector> vectors, int k, std::uint64_t seed, int max_iter) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be at least 1");
  if (vectors.empty()) throw std::invalid_argument("kmeans: empty input");
  if (max_iter < 1) throw std::invalid_argument("kmeans: max_iter must be positive");
  const auto n = vectors.size();
  const Eigen::Index dim = vectors.front().dim();
  for (const auto& v : vectors)
    if (v.dim() != dim) throw std::invalid_argument("kmeans: inconsistent dimensions");

  Clustering result;
  result.requested_k = k;
  result.effective_k = std::min(k, count_distinct(vectors));
  const int kk = result.effective_k;
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(kk, dim);
  Eigen::VectorXd centroid_sq = Eigen::VectorXd::Zero(kk);

  // k-means++ seeding.
  Rng rng(derive_seed(seed, "kmeans++"));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.index(n);
  set_row(centroids, 0, vectors[first]);
  centroid_sq[0] = centroids.row(0).squaredNorm();
  for (int c = 1; c < kk; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(vectors[i], centroids, c - 1, centroid_sq));
      total += nearest[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      chosen = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] <= 0.0) continue;
        target -= nearest[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
      if (chosen == n)  // rounding fell off the end: last point with positive mass
        for (std::size_t i = n; i-- > 0;)
          if (nearest[i] > 0.0) {
            chosen = i;
            break;
          }
    }
    set_row(centroids, c, vectors[chosen]);
    centroid_sq[c] = centroids.row(c).squaredNorm();
  }

  std::vector<int> assign(n, -1);
  std::vector<double> dist(n, 0.0);
  auto assign_pass = [&]() {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(vectors[i], centroids, 0, centroid_sq);
      for (int c = 1; c < kk; ++c) {
        const double d = squared_distance(vectors[i], centroids, c, centroid_sq);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
      dist[i] = best_d;
      inertia += best_d;
    }
    result.inertia_trace.push_back(inertia);
    return changed;
  };

  auto update_centroids = [&]() {
    std::vector<std::int64_t> sizes(kk, 0);
    for (int a : assign) ++sizes[a];
    for (int c = 0; c < kk; ++c) {
      if (sizes[c] > 0) continue;
      // Reseed with the farthest point that does not leave its cluster empty.
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (sizes[assign[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      if (far == n) continue;
      --sizes[assign[far]];
      assign[far] = c;
      dist[far] = 0.0;
      sizes[c] = 1;
    }
    centroids.setZero();
    for (std::size_t i = 0; i < n; ++i)
      for (Storage::InnerIterator it(vectors[i].entries()); it; ++it)
        centroids(assign[i], it.index()) += it.value();
    for (int c = 0; c < kk; ++c) {
      if (sizes[c] > 0) centroids.row(c) /= static_cast<double>(sizes[c]);
      centroid_sq[c] = centroids.row(c).squaredNorm();
    }
  };

  assign_pass();
  for (int iter = 0; iter < max_iter; ++iter) {
    update_centroids();
    ++result.iterations;
    if (!assign_pass()) break;
  }

  result.assignments = std::move(assign);
  result.centroids = std::move(centroids);
  result.inertia = result.inertia_trace.back();
  return result;
}

}  // namespace contlearn
