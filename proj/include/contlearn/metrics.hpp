#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace contlearn {

using Tokens = std::vector<std::string>;

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> golds, int positive_class);

/// Binary P/R/F1 for `positive_class`; every 0/0 is 0.
PrecisionRecallF1 prf1(std::span<const int> preds, std::span<const int> golds, int positive_class);

/// Unweighted mean of per-class P/R/F1 over classes 0..class_count-1.
PrecisionRecallF1 macro_prf1(std::span<const int> preds, std::span<const int> golds, int class_count);

double accuracy(std::span<const int> preds, std::span<const int> golds);

enum class BleuMode { Corpus, SentenceSmoothed };

/// BLEU-4 with uniform 1/4 weights and brevity penalty. Corpus mode pools
/// clipped n-gram counts; sentence mode averages per-pair scores with add-one
/// smoothing for n >= 2.
double bleu4(std::span<const Tokens> candidates, std::span<const Tokens> references,
             BleuMode mode = BleuMode::Corpus);
double sentence_bleu4(const Tokens& candidate, const Tokens& reference);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

struct RougeL {
  double precision = 0.0;  // LCS / |reference|
  double recall = 0.0;     // LCS / |candidate|
  double f = 0.0;
};

/// ROUGE-L with P = LCS/n, R = LCS/m (m = |candidate|, n = |reference|)
/// and beta = P/R.
RougeL rouge_l_scores(const Tokens& candidate, const Tokens& reference);
inline double rouge_l(const Tokens& candidate, const Tokens& reference) {
  return rouge_l_scores(candidate, reference).f;
}

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

/// Exact-match METEOR with greedy left-to-right alignment.
double meteor(const Tokens& candidate, const Tokens& reference, const MeteorParams& params = {});

/// Lower-triangular score table Omega_{j,i}, 1 <= j <= i <= K.
class OmegaMatrix {
 public:
  explicit OmegaMatrix(int steps) : steps_(steps) {}

  int steps() const { return steps_; }
  void set(int j, int i, double score);
  bool has(int j, int i) const { return cells_.count({j, i}) != 0; }
  double at(int j, int i) const;

 private:
  int steps_;
  std::map<std::pair<int, int>, double> cells_;
};

struct OmegaSummary {
  std::vector<double> per_step;  // Omega_i, i = 1..K
  double overall = 0.0;
};

/// Omega_i = mean_j Omega_{j,i}; Omega = mean_i Omega_i. Throws on a missing cell.
OmegaSummary omega(const OmegaMatrix& matrix);

}  // namespace contlearn
