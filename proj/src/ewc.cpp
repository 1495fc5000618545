#include "contlearn/ewc.hpp"

#include <fstream>
#include <vector>

#include "binary_io.hpp"

namespace contlearn {

Eigen::VectorXd estimate_fisher(const Model& model, std::span<const LabeledFeatures<double>> samples) {
  if (samples.empty()) throw std::invalid_argument("estimate_fisher: empty sample list");
  const auto& arch = model.arch;
  const Eigen::Index H = arch.hidden_dim;
  const Eigen::Index tail = arch.b1_offset();
  Eigen::VectorXd fisher = Eigen::VectorXd::Zero(model.params.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.params.size());
  for (const auto& s : samples) {
    accumulate_gradient(model, s.features, s.label, 1.0, grad);
    // Only the sample's own W1 rows and the dense tail can be nonzero.
    for (SparseFeatures<double>::InnerIterator it(s.features); it; ++it) {
      auto rows = grad.segment(it.index() * H, H);
      fisher.segment(it.index() * H, H).array() += rows.array().square();
      rows.setZero();
    }
    auto rest = grad.tail(grad.size() - tail);
    fisher.tail(grad.size() - tail).array() += rest.array().square();
    rest.setZero();
  }
  fisher /= static_cast<double>(samples.size());
  return fisher;
}

Eigen::VectorXd estimate_fisher(const Model& model, std::span<const Sample> samples) {
  std::vector<LabeledFeatures<double>> featurized;
  featurized.reserve(samples.size());
  for (const auto& s : samples)
    featurized.push_back({hashed_features(s.text, model.arch.feature_dim), s.label});
  return estimate_fisher(model, std::span<const LabeledFeatures<double>>(featurized));
}

void save_anchor(const std::filesystem::path& path, const AnchorState& anchor) {
  anchor.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write anchor checkpoint " + path.string());
  binio::put_u64(out, static_cast<std::uint64_t>(anchor.params.size()));
  binio::put_array(out, anchor.params);
  binio::put_u64(out, static_cast<std::uint64_t>(anchor.fisher.size()));
  binio::put_array(out, anchor.fisher);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

AnchorState load_anchor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open anchor checkpoint " + path.string());
  AnchorState anchor;
  anchor.params = binio::get_array(in, binio::get_u64(in));
  anchor.fisher = binio::get_array(in, binio::get_u64(in));
  anchor.validate();
  return anchor;
}

}  // namespace contlearn
