#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "adexsbi/common/normalizer.hpp"

namespace adexsbi {

using json = nlohmann::json;

inline json normalizer_to_json(const Normalizer& n) {
  return json{{"mean", n.mean}, {"scale", n.scale}, {"degenerate", n.degenerate}};
}

inline Normalizer normalizer_from_json(const json& j) {
  Normalizer n;
  n.mean = j.at("mean").get<std::vector<double>>();
  n.scale = j.at("scale").get<std::vector<double>>();
  if (j.contains("degenerate")) n.degenerate = j.at("degenerate").get<std::vector<std::size_t>>();
  if (n.mean.size() != n.scale.size()) throw std::runtime_error("normalizer: mean/scale length mismatch");
  return n;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace adexsbi
