#include "contlearn/model.hpp"

#include <fstream>

#include "binary_io.hpp"

namespace contlearn {

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model checkpoint " + path.string());
  binio::put_u64(out, static_cast<std::uint64_t>(model.arch.feature_dim));
  binio::put_u64(out, static_cast<std::uint64_t>(model.arch.hidden_dim));
  binio::put_u64(out, static_cast<std::uint64_t>(model.arch.class_count));
  binio::put_array(out, model.params);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model checkpoint " + path.string());
  Architecture arch;
  arch.feature_dim = static_cast<Eigen::Index>(binio::get_u64(in));
  arch.hidden_dim = static_cast<Eigen::Index>(binio::get_u64(in));
  arch.class_count = static_cast<Eigen::Index>(binio::get_u64(in));
  arch.validate();
  Model model(arch);
  model.params = binio::get_array(in, static_cast<std::uint64_t>(arch.param_count()));
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in " + path.string());
  return model;
}

}  // namespace contlearn
