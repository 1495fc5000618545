#include "contlearn/textvec.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace contlearn {

namespace {

bool is_alnum(unsigned char c) { return c < 0x80 && std::isalnum(c); }
bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(unsigned char c) { return c >= 'a' && c <= 'z'; }

void split_camel(std::string_view word, TokenList& out) {
  std::size_t start = 0;
  for (std::size_t i = 1; i < word.size(); ++i) {
    const auto prev = static_cast<unsigned char>(word[i - 1]);
    const auto cur = static_cast<unsigned char>(word[i]);
    const bool lower_to_upper = (is_lower(prev) || std::isdigit(prev)) && is_upper(cur);
    const bool acronym_end = is_upper(prev) && is_upper(cur) && i + 1 < word.size() &&
                             is_lower(static_cast<unsigned char>(word[i + 1]));
    if (lower_to_upper || acronym_end) {
      out.emplace_back(word.substr(start, i - start));
      start = i;
    }
  }
  out.emplace_back(word.substr(start));
}

}  // namespace

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_alnum(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && is_alnum(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) split_camel(text.substr(i, j - i), tokens);
    i = j;
  }
  for (auto& t : tokens)
    for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return tokens;
}

SparseVector::SparseVector(Storage entries) : entries_(std::move(entries)) {
  entries_.prune(0.0, 0.0);
  norm_ = entries_.norm();
}

SparseVector SparseVector::from_entries(Eigen::Index dim,
                                        std::vector<std::pair<Eigen::Index, double>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Storage s(dim);
  s.reserve(static_cast<Eigen::Index>(entries.size()));
  for (std::size_t k = 0; k < entries.size();) {
    const Eigen::Index idx = entries[k].first;
    if (idx < 0 || idx >= dim) throw std::out_of_range("SparseVector: index out of range");
    double w = 0.0;
    for (; k < entries.size() && entries[k].first == idx; ++k) w += entries[k].second;
    if (w != 0.0) s.insertBack(idx) = w;
  }
  return SparseVector(std::move(s));
}

SparseVector SparseVector::from_dense(const Eigen::VectorXd& dense) {
  return SparseVector(Storage(dense.sparseView(0.0, 0.0)));
}

bool operator==(const SparseVector& a, const SparseVector& b) {
  if (a.dim() != b.dim() || a.nonzeros() != b.nonzeros()) return false;
  Eigen::SparseVector<double>::InnerIterator ia(a.entries_), ib(b.entries_);
  for (; ia && ib; ++ia, ++ib)
    if (ia.index() != ib.index() || ia.value() != ib.value()) return false;
  return true;
}

double TfidfModel::idf(Eigen::Index index) const {
  return std::log(static_cast<double>(1 + corpus_size) /
                  static_cast<double>(1 + doc_freq[static_cast<std::size_t>(index)])) +
         1.0;
}

TfidfModel fit_tfidf(std::span<const TokenList> docs) {
  if (docs.empty()) throw std::invalid_argument("fit_tfidf: empty corpus");
  TfidfModel model;
  model.corpus_size = static_cast<std::int64_t>(docs.size());
  std::vector<Eigen::Index> last_doc;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& token : docs[d]) {
      auto [it, inserted] = model.vocabulary.try_emplace(token, model.dim());
      if (inserted) {
        model.doc_freq.push_back(0);
        last_doc.push_back(-1);
      }
      const auto idx = static_cast<std::size_t>(it->second);
      if (last_doc[idx] != static_cast<Eigen::Index>(d)) {
        last_doc[idx] = static_cast<Eigen::Index>(d);
        ++model.doc_freq[idx];
      }
    }
  }
  return model;
}

SparseVector transform(const TfidfModel& model, const TokenList& doc) {
  std::vector<std::pair<Eigen::Index, double>> counts;
  counts.reserve(doc.size());
  for (const auto& token : doc) {
    auto it = model.vocabulary.find(token);
    if (it != model.vocabulary.end()) counts.emplace_back(it->second, 1.0);
  }
  SparseVector raw = SparseVector::from_entries(model.dim(), std::move(counts));
  if (raw.is_zero()) return raw;
  std::vector<std::pair<Eigen::Index, double>> weighted;
  weighted.reserve(static_cast<std::size_t>(raw.nonzeros()));
  double sq = 0.0;
  for (SparseVector::Storage::InnerIterator it(raw.entries()); it; ++it) {
    const double w = it.value() * model.idf(it.index());
    weighted.emplace_back(it.index(), w);
    sq += w * w;
  }
  const double norm = std::sqrt(sq);
  for (auto& [idx, w] : weighted) w /= norm;
  return SparseVector::from_entries(model.dim(), std::move(weighted));
}

SparseVector dataset_vector(const TfidfModel& model, std::span<const TokenList> docs) {
  if (docs.empty()) throw std::invalid_argument("dataset_vector: empty sample list");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.dim());
  for (const auto& doc : docs) {
    const SparseVector v = transform(model, doc);
    for (SparseVector::Storage::InnerIterator it(v.entries()); it; ++it) sum[it.index()] += it.value();
  }
  sum /= static_cast<double>(docs.size());
  const double norm = sum.norm();
  if (norm > 0.0) sum /= norm;
  return SparseVector::from_dense(sum);
}

SparseVector dataset_vector(const TfidfModel& model, std::span<const Sample> samples) {
  std::vector<TokenList> docs;
  docs.reserve(samples.size());
  for (const auto& s : samples) docs.push_back(tokenize(s.text));
  return dataset_vector(model, std::span<const TokenList>(docs));
}

double cosine(const SparseVector& a, const SparseVector& b) {
  if (a.norm() == 0.0 || b.norm() == 0.0) return 0.0;
  if (a.dim() != b.dim()) throw std::invalid_argument("cosine: dimension mismatch");
  return std::clamp(a.entries().dot(b.entries()) / (a.norm() * b.norm()), 0.0, 1.0);
}

}  // namespace contlearn
