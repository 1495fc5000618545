#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "contlearn/model.hpp"
#include "contlearn/textvec.hpp"

namespace contlearn {

/// Previous-model snapshot and its diagonal Fisher information.
struct AnchorState {
  Eigen::VectorXd params;
  Eigen::VectorXd fisher;

  void validate() const {
    if (params.size() != fisher.size()) throw std::invalid_argument("anchor: params/fisher length mismatch");
    if (!fisher.allFinite() || (fisher.array() < 0.0).any())
      throw std::invalid_argument("anchor: fisher entries must be finite and non-negative");
  }
};

struct LambdaConfig {
  double lambda_base = 2000.0;
};

/// lambda * sum_i F_i (theta_i - anchor_i)^2
template <typename Derived>
double penalty(const Eigen::MatrixBase<Derived>& params, const AnchorState& anchor, double lambda) {
  if (params.size() != anchor.params.size() || params.size() != anchor.fisher.size())
    throw std::invalid_argument("penalty: length mismatch");
  return lambda * (anchor.fisher.array() * (params.derived().array() - anchor.params.array()).square()).sum();
}

/// Component i is 2 lambda F_i (theta_i - anchor_i).
template <typename Derived>
Eigen::VectorXd penalty_grad(const Eigen::MatrixBase<Derived>& params, const AnchorState& anchor, double lambda) {
  if (params.size() != anchor.params.size() || params.size() != anchor.fisher.size())
    throw std::invalid_argument("penalty_grad: length mismatch");
  const double scale = 2.0 * lambda;
  Eigen::VectorXd g(params.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = scale * anchor.fisher[i] * (params[i] - anchor.params[i]);
  return g;
}

inline double penalty(const Model& model, const AnchorState& anchor, double lambda) {
  return penalty(model.params, anchor, lambda);
}
inline Eigen::VectorXd penalty_grad(const Model& model, const AnchorState& anchor, double lambda) {
  return penalty_grad(model.params, anchor, lambda);
}

/// Empirical diagonal Fisher: mean over samples of the squared per-sample
/// loss gradient.
Eigen::VectorXd estimate_fisher(const Model& model, std::span<const Sample> samples);
Eigen::VectorXd estimate_fisher(const Model& model, std::span<const LabeledFeatures<double>> samples);

/// lambda_base * cosine(current, exemplars); in [0, lambda_base].
inline double adaptive_lambda(const LambdaConfig& cfg, const SparseVector& current_dataset,
                              const SparseVector& exemplars) {
  return cfg.lambda_base * cosine(current_dataset, exemplars);
}

// Binary checkpoint: uint64 length + float64 params, uint64 length + float64
// fisher, all little-endian.
void save_anchor(const std::filesystem::path& path, const AnchorState& anchor);
AnchorState load_anchor(const std::filesystem::path& path);

}  // namespace contlearn
