#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of these call into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contlearn/model.hpp"
#include "contlearn/rng.hpp"

namespace contlearn::oracle {

/// FNV-1a written out from the published constants.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Forward pass straight off the flat parameter layout with plain loops.
inline std::vector<double> forward(const Eigen::VectorXd& p, int D, int H, int C, const std::vector<double>& x) {
  std::vector<double> hidden(H);
  for (int h = 0; h < H; ++h) {
    double acc = p[D * H + h];
    for (int d = 0; d < D; ++d) acc += x[d] * p[d * H + h];
    hidden[h] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> logits(C);
  const int w2 = D * H + H, b2 = w2 + H * C;
  for (int c = 0; c < C; ++c) {
    double acc = p[b2 + c];
    for (int h = 0; h < H; ++h) acc += hidden[h] * p[w2 + h * C + c];
    logits[c] = acc;
  }
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  std::vector<double> probs(C);
  for (int c = 0; c < C; ++c) probs[c] = std::exp(logits[c] - mx) / z;
  return probs;
}

struct Example {
  std::vector<double> x;
  int label = 0;
};

inline double mean_loss(const Eigen::VectorXd& p, int D, int H, int C, const std::vector<Example>& batch) {
  double total = 0.0;
  for (const auto& e : batch) total += -std::log(forward(p, D, H, C, e.x)[e.label]);
  return total / static_cast<double>(batch.size());
}

/// Central differences of f at p with step h.
inline Eigen::VectorXd central_diff(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd p,
                                    double h) {
  Eigen::VectorXd g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = f(p);
    p[i] = keep - h;
    const double down = f(p);
    p[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

/// Random small model plus a batch of sparse-ish random features.
struct Instance {
  Model model;
  std::vector<LabeledFeatures<double>> batch;
  std::vector<Example> dense;
};

inline Instance random_instance(std::uint64_t seed, int D = 32, int H = 4, int C = 3, int batch_size = 6) {
  Rng rng(seed);
  Instance inst;
  inst.model = Model(Architecture{D, H, C});
  for (Eigen::Index i = 0; i < inst.model.params.size(); ++i) inst.model.params[i] = rng.uniform(-0.8, 0.8);
  for (int b = 0; b < batch_size; ++b) {
    Example e;
    e.x.assign(D, 0.0);
    for (int d = 0; d < D; ++d)
      if (rng.uniform() < 0.3) e.x[d] = rng.uniform(-1.0, 1.0);
    e.label = static_cast<int>(rng.index(C));
    LabeledFeatures<double> lf;
    lf.features = SparseFeatures<double>(D);
    for (int d = 0; d < D; ++d)
      if (e.x[d] != 0.0) lf.features.insert(d) = e.x[d];
    lf.label = e.label;
    inst.batch.push_back(std::move(lf));
    inst.dense.push_back(std::move(e));
  }
  return inst;
}

/// Scalar Adam loop as usually written in tutorials.
inline std::vector<double> adam_reference(std::vector<double> p, const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                                          int steps, double lr = 1e-3, double b1 = 0.9, double b2 = 0.999,
                                          double eps = 1e-8) {
  std::vector<double> m(p.size(), 0.0), v(p.size(), 0.0);
  for (int t = 1; t <= steps; ++t) {
    const auto g = grad(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(b1, t));
      const double vh = v[i] / (1 - std::pow(b2, t));
      p[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
  return p;
}

}  // namespace contlearn::oracle
