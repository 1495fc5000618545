#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "contlearn/rng.hpp"
#include "contlearn/textvec.hpp"

using namespace contlearn;

namespace {

enum class Kind { Sep, Lower, Upper, Digit };

Kind kind_of(char c) {
  if (c >= 'a' && c <= 'z') return Kind::Lower;
  if (c >= 'A' && c <= 'Z') return Kind::Upper;
  if (c >= '0' && c <= '9') return Kind::Digit;
  return Kind::Sep;
}

// Character-at-a-time reference: a boundary opens before an upper-case letter
// that follows a lower-case letter or digit, and before the last capital of
// an acronym when a lower-case letter follows it.
TokenList reference_split(const std::string& s) {
  TokenList out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Kind k = kind_of(s[i]);
    if (k == Kind::Sep) {
      flush();
      continue;
    }
    if (k == Kind::Upper && i > 0) {
      const Kind prev = kind_of(s[i - 1]);
      const bool next_lower = i + 1 < s.size() && kind_of(s[i + 1]) == Kind::Lower;
      if (prev == Kind::Lower || prev == Kind::Digit || (prev == Kind::Upper && next_lower)) flush();
    }
    cur += static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
  }
  flush();
  return out;
}

SparseVector sv(std::vector<std::pair<Eigen::Index, double>> e, Eigen::Index dim = 4) {
  return SparseVector::from_entries(dim, std::move(e));
}

}  // namespace

TEST(Tokenize, Empty) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, CamelAndUnderscore) {
  EXPECT_EQ(tokenize("getUserName_fast"), (TokenList{"get", "user", "name", "fast"}));
}

TEST(Tokenize, AcronymMatchesReferenceSplitter) {
  EXPECT_EQ(tokenize("HTTPServer2 start"), reference_split("HTTPServer2 start"));
  EXPECT_EQ(tokenize("HTTPServer2 start"), (TokenList{"http", "server2", "start"}));
}

TEST(Tokenize, RandomStringsMatchReferenceSplitter) {
  const std::string alphabet = "aZbY09_ .(-xQ";
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const std::size_t len = rng.index(20);
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.index(alphabet.size())];
    EXPECT_EQ(tokenize(s), reference_split(s)) << '"' << s << '"';
  }
}

TEST(Tfidf, TwoDocCounts) {
  std::vector<TokenList> docs{{"a", "b"}, {"a", "c"}};
  const TfidfModel m = fit_tfidf(docs);
  EXPECT_EQ(m.corpus_size, 2);
  ASSERT_EQ(m.dim(), 3);
  EXPECT_EQ(m.doc_freq[m.vocabulary.at("a")], 2);
  EXPECT_EQ(m.doc_freq[m.vocabulary.at("b")], 1);
  EXPECT_EQ(m.doc_freq[m.vocabulary.at("c")], 1);
}

TEST(Tfidf, SingleDocAllOnes) {
  std::vector<TokenList> docs{{"x", "y", "x"}};
  const TfidfModel m = fit_tfidf(docs);
  for (auto df : m.doc_freq) EXPECT_EQ(df, 1);
}

TEST(Tfidf, EmptyCorpusThrows) { EXPECT_THROW(fit_tfidf(std::span<const TokenList>{}), std::invalid_argument); }

TEST(Tfidf, RandomDocFrequencyMatchesBruteForce) {
  Rng rng(11);
  std::vector<TokenList> docs(50);
  for (auto& d : docs) {
    const std::size_t n = rng.index(12);
    for (std::size_t i = 0; i < n; ++i) d.push_back("t" + std::to_string(rng.index(30)));
  }
  const TfidfModel m = fit_tfidf(docs);
  std::set<std::string> all;
  for (const auto& d : docs) all.insert(d.begin(), d.end());
  EXPECT_EQ(static_cast<std::size_t>(m.dim()), all.size());
  for (const auto& tok : all) {
    std::int64_t df = 0;
    for (const auto& d : docs) df += std::find(d.begin(), d.end(), tok) != d.end();
    EXPECT_EQ(m.doc_freq[m.vocabulary.at(tok)], df) << tok;
  }
}

TEST(Transform, HandEvaluatedWeights) {
  std::vector<TokenList> docs{{"a", "b"}, {"a", "c"}};
  const TfidfModel m = fit_tfidf(docs);
  const SparseVector v = transform(m, {"a", "b"});
  const double a = 1.0, b = std::log(1.5) + 1.0;
  const double n = std::hypot(a, b);
  EXPECT_NEAR(v.coeff(m.vocabulary.at("a")), a / n, 1e-12);
  EXPECT_NEAR(v.coeff(m.vocabulary.at("b")), b / n, 1e-12);
  EXPECT_NEAR(v.coeff(m.vocabulary.at("a")), 0.5798, 1e-4);
  EXPECT_NEAR(v.coeff(m.vocabulary.at("b")), 0.8149, 1e-4);
  EXPECT_EQ(v.coeff(m.vocabulary.at("c")), 0.0);
}

TEST(Transform, OutOfVocabularyIsZero) {
  std::vector<TokenList> docs{{"a"}};
  const SparseVector v = transform(fit_tfidf(docs), {"zz", "yy"});
  EXPECT_TRUE(v.is_zero());
  EXPECT_EQ(v.norm(), 0.0);
}

TEST(Transform, UnitNormAndDuplicationInvariance) {
  Rng rng(2);
  std::vector<TokenList> docs(30);
  for (auto& d : docs)
    for (std::size_t i = 0, n = 1 + rng.index(10); i < n; ++i) d.push_back("w" + std::to_string(rng.index(15)));
  const TfidfModel m = fit_tfidf(docs);
  for (const auto& d : docs) {
    const SparseVector v = transform(m, d);
    EXPECT_NEAR(v.norm(), 1.0, 1e-9);
    EXPECT_NEAR(v.to_dense().norm(), v.norm(), 1e-12);
    TokenList twice = d;
    twice.insert(twice.end(), d.begin(), d.end());
    EXPECT_LT((transform(m, twice).to_dense() - v.to_dense()).norm(), 1e-12);
    EXPECT_NEAR(cosine(v, v), 1.0, 1e-9);
    for (Eigen::Index i = 0; i < m.dim(); ++i) EXPECT_GE(v.coeff(i), 0.0);
  }
}

TEST(DatasetVector, OneAndTwoIdenticalSamples) {
  std::vector<TokenList> corpus{{"a", "b"}, {"a", "c"}};
  const TfidfModel m = fit_tfidf(corpus);
  std::vector<TokenList> one{{"a", "b"}}, two{{"a", "b"}, {"a", "b"}};
  const SparseVector v = transform(m, one[0]);
  EXPECT_LT((dataset_vector(m, std::span<const TokenList>(one)).to_dense() - v.to_dense()).norm(), 1e-12);
  EXPECT_LT((dataset_vector(m, std::span<const TokenList>(two)).to_dense() - v.to_dense()).norm(), 1e-12);
}

TEST(DatasetVector, MatchesDenseOracle) {
  Rng rng(8);
  std::vector<Sample> samples;
  std::vector<TokenList> docs;
  for (int i = 0; i < 20; ++i) {
    std::string text;
    for (std::size_t k = 0, n = 1 + rng.index(8); k < n; ++k) text += "w" + std::to_string(rng.index(12)) + " ";
    samples.push_back({"s" + std::to_string(i), text, 0, ""});
    docs.push_back(tokenize(text));
  }
  const TfidfModel m = fit_tfidf(docs);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m.dim());
  for (const auto& d : docs) {
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(m.dim());
    for (const auto& tok : d) {
      const auto idx = m.vocabulary.at(tok);
      raw[idx] += std::log((1.0 + 20.0) / (1.0 + static_cast<double>(m.doc_freq[idx]))) + 1.0;
    }
    sum += raw / raw.norm();
  }
  const Eigen::VectorXd expected = (sum / 20.0).normalized();
  EXPECT_LT((dataset_vector(m, std::span<const Sample>(samples)).to_dense() - expected).norm(), 1e-12);
  EXPECT_THROW(dataset_vector(m, std::span<const Sample>{}), std::invalid_argument);
}

TEST(Cosine, Examples) {
  EXPECT_NEAR(cosine(sv({{0, 1}}), sv({{0, 1}})), 1.0, 1e-15);
  EXPECT_EQ(cosine(sv({{0, 1}}), sv({{1, 1}})), 0.0);
  EXPECT_NEAR(cosine(sv({{0, 1}, {1, 1}}), sv({{0, 1}})), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(cosine(sv({}), sv({{0, 1}})), 0.0);
}

TEST(SparseVector, PrunesZerosAndSumsDuplicates) {
  const SparseVector v = sv({{1, 2.0}, {1, -2.0}, {3, 1.5}, {3, 1.5}, {0, 0.0}});
  EXPECT_EQ(v.nonzeros(), 1);
  EXPECT_EQ(v.coeff(3), 3.0);
  EXPECT_NEAR(v.norm(), 3.0, 1e-15);
}
