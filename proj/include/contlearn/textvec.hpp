#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "contlearn/corpus.hpp"

namespace contlearn {

using TokenList = std::vector<std::string>;

/// Splits on non-alphanumeric bytes, then on camelCase boundaries
/// ("getUser" -> get|user, "HTTPServer" -> http|server), and lowercases.
/// Digits stay attached to the preceding word. Non-ASCII bytes are
/// separators.
TokenList tokenize(std::string_view text);

/// Non-negative sparse vector with a cached L2 norm. Zero weights are
/// never stored.
class SparseVector {
 public:
  using Storage = Eigen::SparseVector<double>;

  SparseVector() = default;
  explicit SparseVector(Eigen::Index dim) : entries_(dim) {}
  /// Builds from (index, weight) pairs; duplicate indices are summed and
  /// zero results dropped.
  static SparseVector from_entries(Eigen::Index dim, std::vector<std::pair<Eigen::Index, double>> entries);
  static SparseVector from_dense(const Eigen::VectorXd& dense);

  const Storage& entries() const { return entries_; }
  Eigen::Index dim() const { return entries_.size(); }
  Eigen::Index nonzeros() const { return entries_.nonZeros(); }
  double norm() const { return norm_; }
  double coeff(Eigen::Index i) const { return entries_.coeff(i); }
  bool is_zero() const { return entries_.nonZeros() == 0; }

  Eigen::VectorXd to_dense() const { return Eigen::VectorXd(entries_); }

  friend bool operator==(const SparseVector& a, const SparseVector& b);

 private:
  explicit SparseVector(Storage entries);

  Storage entries_;
  double norm_ = 0.0;
};

struct TfidfModel {
  std::unordered_map<std::string, Eigen::Index> vocabulary;  // dense indices, first-seen order
  std::vector<std::int64_t> doc_freq;
  std::int64_t corpus_size = 0;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(doc_freq.size()); }
  double idf(Eigen::Index index) const;
};

TfidfModel fit_tfidf(std::span<const TokenList> docs);

/// count * (ln((1+N)/(1+df)) + 1), L2-normalized. Unknown tokens ignored.
SparseVector transform(const TfidfModel& model, const TokenList& doc);

/// Mean of the samples' normalized TF-IDF vectors, re-normalized.
SparseVector dataset_vector(const TfidfModel& model, std::span<const Sample> samples);
SparseVector dataset_vector(const TfidfModel& model, std::span<const TokenList> docs);

/// Cosine similarity; 0 when either vector is zero.
double cosine(const SparseVector& a, const SparseVector& b);

}  // namespace contlearn
