#include "contlearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace contlearn {

ConfusionCounts confusion(std::span<const int> preds, std::span<const int> golds, int positive_class) {
  if (preds.size() != golds.size()) throw std::invalid_argument("confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == positive_class;
    const bool g = golds[i] == positive_class;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {
double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace

PrecisionRecallF1 prf1(std::span<const int> preds, std::span<const int> golds, int positive_class) {
  if (preds.empty()) throw std::invalid_argument("prf1: empty input");
  const ConfusionCounts c = confusion(preds, golds, positive_class);
  PrecisionRecallF1 r;
  r.precision = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  r.recall = safe_div(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  r.f1 = safe_div(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

PrecisionRecallF1 macro_prf1(std::span<const int> preds, std::span<const int> golds, int class_count) {
  if (class_count < 1) throw std::invalid_argument("macro_prf1: class_count must be positive");
  PrecisionRecallF1 mean;
  for (int c = 0; c < class_count; ++c) {
    const auto r = prf1(preds, golds, c);
    mean.precision += r.precision;
    mean.recall += r.recall;
    mean.f1 += r.f1;
  }
  mean.precision /= class_count;
  mean.recall /= class_count;
  mean.f1 /= class_count;
  return mean;
}

double accuracy(std::span<const int> preds, std::span<const int> golds) {
  if (preds.size() != golds.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == golds[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::int64_t>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

/// Clipped matches and candidate n-gram total for one pair.
std::pair<std::int64_t, std::int64_t> clipped(const Tokens& cand, const Tokens& ref, std::size_t n) {
  const NgramCounts c = ngrams(cand, n);
  const NgramCounts r = ngrams(ref, n);
  std::int64_t match = 0, total = 0;
  for (const auto& [gram, count] : c) {
    total += count;
    auto it = r.find(gram);
    if (it != r.end()) match += std::min(count, it->second);
  }
  return {match, total};
}

double brevity_penalty(double c, double r) {
  if (c > r) return 1.0;
  if (c == 0.0) return 0.0;
  return std::exp(1.0 - r / c);
}

}  // namespace

double sentence_bleu4(const Tokens& candidate, const Tokens& reference) {
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto [match, total] = clipped(candidate, reference, n);
    double p;
    if (n == 1) {
      p = safe_div(static_cast<double>(match), static_cast<double>(total));
    } else {
      p = (static_cast<double>(match) + 1.0) / (static_cast<double>(total) + 1.0);
    }
    if (p == 0.0) return 0.0;
    log_sum += 0.25 * std::log(p);
  }
  return brevity_penalty(static_cast<double>(candidate.size()), static_cast<double>(reference.size())) *
         std::exp(log_sum);
}

double bleu4(std::span<const Tokens> candidates, std::span<const Tokens> references, BleuMode mode) {
  if (candidates.size() != references.size()) throw std::invalid_argument("bleu4: list length mismatch");
  if (candidates.empty()) throw std::invalid_argument("bleu4: empty input");
  if (mode == BleuMode::SentenceSmoothed) {
    double sum = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) sum += sentence_bleu4(candidates[i], references[i]);
    return sum / static_cast<double>(candidates.size());
  }
  std::int64_t match[5] = {}, total[5] = {};
  double c_len = 0.0, r_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    c_len += static_cast<double>(candidates[i].size());
    r_len += static_cast<double>(references[i].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      auto [m, t] = clipped(candidates[i], references[i], n);
      match[n] += m;
      total[n] += t;
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    if (match[n] == 0) return 0.0;
    log_sum += 0.25 * std::log(static_cast<double>(match[n]) / static_cast<double>(total[n]));
  }
  return brevity_penalty(c_len, r_len) * std::exp(log_sum);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeL rouge_l_scores(const Tokens& candidate, const Tokens& reference) {
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  RougeL r;
  if (lcs == 0.0) return r;
  const double m = static_cast<double>(candidate.size());
  const double n = static_cast<double>(reference.size());
  r.precision = lcs / n;
  r.recall = lcs / m;
  const double beta = r.precision / r.recall;
  const double b2 = beta * beta;
  r.f = (1.0 + b2) * r.precision * r.recall / (r.recall + b2 * r.precision);
  return r;
}

double meteor(const Tokens& candidate, const Tokens& reference, const MeteorParams& params) {
  std::vector<bool> used(reference.size(), false);
  std::vector<std::ptrdiff_t> aligned(candidate.size(), -1);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    for (std::size_t j = 0; j < reference.size(); ++j) {
      if (!used[j] && reference[j] == candidate[i]) {
        used[j] = true;
        aligned[i] = static_cast<std::ptrdiff_t>(j);
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;

  std::size_t chunks = 0;
  std::ptrdiff_t last = -2;
  bool in_chunk = false;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (aligned[i] < 0) {
      in_chunk = false;
      continue;
    }
    if (!in_chunk || aligned[i] != last + 1) ++chunks;
    in_chunk = true;
    last = aligned[i];
  }

  const double p = static_cast<double>(matches) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(matches) / static_cast<double>(reference.size());
  const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
  const double penalty = params.gamma * std::pow(frag, params.beta);
  const double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
  return (1.0 - penalty) * fmean;
}

void OmegaMatrix::set(int j, int i, double score) {
  if (j < 1 || i < j || i > steps_) throw std::out_of_range("OmegaMatrix: cell outside the triangle");
  if (!std::isfinite(score)) throw std::invalid_argument("OmegaMatrix: non-finite score");
  cells_[{j, i}] = score;
}

double OmegaMatrix::at(int j, int i) const {
  auto it = cells_.find({j, i});
  if (it == cells_.end())
    throw std::out_of_range("OmegaMatrix: missing cell (" + std::to_string(j) + ", " + std::to_string(i) + ")");
  return it->second;
}

OmegaSummary omega(const OmegaMatrix& matrix) {
  if (matrix.steps() < 1) throw std::invalid_argument("omega: empty matrix");
  OmegaSummary s;
  double total = 0.0;
  for (int i = 1; i <= matrix.steps(); ++i) {
    double row = 0.0;
    for (int j = 1; j <= i; ++j) row += matrix.at(j, i);
    s.per_step.push_back(row / i);
    total += s.per_step.back();
  }
  s.overall = total / matrix.steps();
  return s;
}

}  // namespace contlearn
