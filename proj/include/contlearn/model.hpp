#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "contlearn/corpus.hpp"
#include "contlearn/rng.hpp"
#include "contlearn/textvec.hpp"

namespace contlearn {

struct Architecture {
  Eigen::Index feature_dim = Eigen::Index{1} << 14;
  Eigen::Index hidden_dim = 64;
  Eigen::Index class_count = 2;

  Eigen::Index w1_size() const { return feature_dim * hidden_dim; }
  Eigen::Index b1_offset() const { return w1_size(); }
  Eigen::Index w2_offset() const { return b1_offset() + hidden_dim; }
  Eigen::Index b2_offset() const { return w2_offset() + hidden_dim * class_count; }
  Eigen::Index param_count() const { return b2_offset() + class_count; }

  void validate() const {
    if (feature_dim < 1 || hidden_dim < 1 || class_count < 1)
      throw std::invalid_argument("architecture dimensions must be positive");
    if ((feature_dim & (feature_dim - 1)) != 0)
      throw std::invalid_argument("feature_dim must be a power of two");
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Flat parameter vector laid out as W1 (D x H, row per feature), b1,
/// W2 (H x C, row per hidden unit), b2.
template <typename Scalar>
struct ModelState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Architecture arch;
  Vector params;

  ModelState() = default;
  explicit ModelState(const Architecture& a) : arch(a), params(Vector::Zero(a.param_count())) {
    a.validate();
  }

  Eigen::Map<const Matrix> w1() const { return {params.data(), arch.feature_dim, arch.hidden_dim}; }
  Eigen::Map<const Vector> b1() const { return {params.data() + arch.b1_offset(), arch.hidden_dim}; }
  Eigen::Map<const Matrix> w2() const {
    return {params.data() + arch.w2_offset(), arch.hidden_dim, arch.class_count};
  }
  Eigen::Map<const Vector> b2() const { return {params.data() + arch.b2_offset(), arch.class_count}; }
};

using Model = ModelState<double>;

template <typename Scalar>
using SparseFeatures = Eigen::SparseVector<Scalar>;

template <typename Scalar>
struct LabeledFeatures {
  SparseFeatures<Scalar> features;
  int label = 0;
};

/// Hashed bag of tokens: FNV-1a(token) mod D, counts L2-normalized.
inline SparseFeatures<double> hashed_features(std::string_view text, Eigen::Index dim) {
  if (dim < 1 || (dim & (dim - 1)) != 0) throw std::invalid_argument("feature dim must be a power of two");
  std::vector<std::pair<Eigen::Index, double>> counts;
  for (const auto& token : tokenize(text))
    counts.emplace_back(static_cast<Eigen::Index>(fnv1a64(token) & static_cast<std::uint64_t>(dim - 1)), 1.0);
  const SparseVector v = SparseVector::from_entries(dim, std::move(counts));
  SparseFeatures<double> out = v.entries();
  if (v.norm() > 0.0) out /= v.norm();
  return out;
}

inline Eigen::VectorXd featurize(std::string_view text, Eigen::Index dim) {
  return Eigen::VectorXd(hashed_features(text, dim));
}

/// Glorot-uniform weights, zero biases.
template <typename Scalar = double>
ModelState<Scalar> init_model(const Architecture& arch, std::uint64_t seed) {
  ModelState<Scalar> model(arch);
  Rng rng(derive_seed(seed, "init"));
  const double lim1 = std::sqrt(6.0 / static_cast<double>(arch.feature_dim + arch.hidden_dim));
  const double lim2 = std::sqrt(6.0 / static_cast<double>(arch.hidden_dim + arch.class_count));
  for (Eigen::Index i = 0; i < arch.w1_size(); ++i) model.params[i] = static_cast<Scalar>(rng.uniform(-lim1, lim1));
  for (Eigen::Index i = 0; i < arch.hidden_dim * arch.class_count; ++i)
    model.params[arch.w2_offset() + i] = static_cast<Scalar>(rng.uniform(-lim2, lim2));
  return model;
}

template <typename Scalar>
struct Activations {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector pre_hidden;
  Vector hidden;
  Vector logits;
  Vector probs;
  Scalar log_norm = 0;  // log-sum-exp of logits
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::EigenBase<Derived>& x) {
  if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<Derived>, Derived>) {
    for (typename Derived::InnerIterator it(x.derived(), 0); it; ++it)
      if (!std::isfinite(it.value())) throw std::invalid_argument("forward: non-finite feature");
  } else {
    if (!x.derived().allFinite()) throw std::invalid_argument("forward: non-finite feature");
  }
}

}  // namespace detail

/// ReLU hidden layer, softmax output with max subtraction.
template <typename Scalar, typename Features>
Activations<Scalar> forward_pass(const ModelState<Scalar>& model, const Features& x) {
  if (x.size() != model.arch.feature_dim) throw std::invalid_argument("forward: feature length mismatch");
  detail::require_finite(x);
  Activations<Scalar> a;
  a.pre_hidden = model.w1().transpose() * x;
  a.pre_hidden += model.b1();
  a.hidden = a.pre_hidden.cwiseMax(Scalar(0));
  a.logits = model.w2().transpose() * a.hidden + model.b2();
  const Scalar shift = a.logits.maxCoeff();
  a.probs = (a.logits.array() - shift).exp().matrix();
  const Scalar total = a.probs.sum();
  a.probs /= total;
  a.log_norm = shift + std::log(total);
  return a;
}

template <typename Scalar, typename Features>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> forward(const ModelState<Scalar>& model, const Features& x) {
  return forward_pass(model, x).probs;
}

/// -ln p(label), capped at -ln(machine epsilon).
template <typename Scalar>
Scalar loss_from(const Activations<Scalar>& a, int label) {
  const Scalar cap = -std::log(std::numeric_limits<Scalar>::epsilon());
  return std::min(a.log_norm - a.logits[label], cap);
}

template <typename Scalar, typename Features>
Scalar feature_loss(const ModelState<Scalar>& model, const Features& x, int label) {
  if (label < 0 || label >= model.arch.class_count) throw std::invalid_argument("loss: invalid label");
  return loss_from(forward_pass(model, x), label);
}

inline double sample_loss(const Model& model, const Sample& sample) {
  return feature_loss(model, hashed_features(sample.text, model.arch.feature_dim), sample.label);
}

/// Adds weight * d loss / d params for one sample into `grad` and returns the
/// sample loss. Only W1 rows of the sample's nonzero features are touched.
template <typename Scalar>
Scalar accumulate_gradient(const ModelState<Scalar>& model, const SparseFeatures<Scalar>& x, int label,
                           Scalar weight, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grad) {
  const auto& arch = model.arch;
  if (label < 0 || label >= arch.class_count) throw std::invalid_argument("gradient: invalid label");
  const Activations<Scalar> a = forward_pass(model, x);

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d_logits = a.probs;
  d_logits[label] -= Scalar(1);
  d_logits *= weight;

  const Eigen::Index H = arch.hidden_dim;
  const Eigen::Index C = arch.class_count;
  Eigen::Map<typename ModelState<Scalar>::Matrix> g_w2(grad.data() + arch.w2_offset(), H, C);
  g_w2.noalias() += a.hidden * d_logits.transpose();
  grad.segment(arch.b2_offset(), C) += d_logits;

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d_hidden = model.w2() * d_logits;
  for (Eigen::Index h = 0; h < H; ++h)
    if (a.pre_hidden[h] <= Scalar(0)) d_hidden[h] = Scalar(0);
  grad.segment(arch.b1_offset(), H) += d_hidden;
  for (typename SparseFeatures<Scalar>::InnerIterator it(x); it; ++it)
    grad.segment(it.index() * H, H) += it.value() * d_hidden;
  return loss_from(a, label);
}

/// Gradient of the (weighted) mean cross-entropy over `batch`.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> batch_grad(const ModelState<Scalar>& model,
                                                    std::span<const LabeledFeatures<Scalar>> batch,
                                                    std::optional<std::span<const std::type_identity_t<Scalar>>> weights = std::nullopt) {
  if (batch.empty()) throw std::invalid_argument("batch_grad: empty batch");
  if (weights && weights->size() != batch.size()) throw std::invalid_argument("batch_grad: weight count mismatch");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(model.params.size());
  Scalar total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Scalar w = weights ? (*weights)[i] : Scalar(1);
    accumulate_gradient(model, batch[i].features, batch[i].label, w, grad);
    total += w;
  }
  if (total <= Scalar(0)) throw std::invalid_argument("batch_grad: weights must sum to a positive value");
  grad /= total;
  return grad;
}

template <typename Scalar>
struct OptimizerState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  std::int64_t step = 0;
  Vector m;
  Vector v;
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  OptimizerState() = default;
  explicit OptimizerState(Eigen::Index n) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

namespace detail {

template <typename Scalar>
struct AdamCoefficients {
  Scalar lr, b1, b2, eps, bc1, bc2;
};

template <typename Scalar>
inline void adam_update(Scalar& p, Scalar& m, Scalar& v, Scalar g, const AdamCoefficients<Scalar>& k) {
  m = k.b1 * m + (Scalar(1) - k.b1) * g;
  v = k.b2 * v + (Scalar(1) - k.b2) * g * g;
  const Scalar m_hat = m / k.bc1;
  const Scalar v_hat = v / k.bc2;
  p -= k.lr * m_hat / (std::sqrt(v_hat) + k.eps);
}

template <typename Scalar>
AdamCoefficients<Scalar> begin_adam_step(OptimizerState<Scalar>& opt) {
  ++opt.step;
  const auto t = static_cast<Scalar>(opt.step);
  return {opt.learning_rate, opt.beta1, opt.beta2, opt.epsilon,
          Scalar(1) - std::pow(opt.beta1, t), Scalar(1) - std::pow(opt.beta2, t)};
}

}  // namespace detail

/// Bias-corrected Adam. Throws on a non-finite gradient.
template <typename Scalar, typename Derived>
void adam_step(ModelState<Scalar>& model, OptimizerState<Scalar>& opt, const Eigen::MatrixBase<Derived>& grad) {
  const Eigen::Index n = model.params.size();
  if (grad.size() != n) throw std::invalid_argument("adam_step: gradient length mismatch");
  if (!grad.allFinite()) throw std::invalid_argument("adam_step: non-finite gradient");
  if (opt.m.size() != n) opt = [&] {
    OptimizerState<Scalar> fresh(n);
    fresh.learning_rate = opt.learning_rate;
    fresh.beta1 = opt.beta1;
    fresh.beta2 = opt.beta2;
    fresh.epsilon = opt.epsilon;
    return fresh;
  }();
  const auto k = detail::begin_adam_step(opt);
  for (Eigen::Index i = 0; i < n; ++i) detail::adam_update(model.params[i], opt.m[i], opt.v[i], grad[i], k);
}

// Binary checkpoint: three little-endian int64 architecture values followed
// by the parameters as little-endian float64.
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace contlearn
