#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "adexsbi/nn/graph.hpp"

namespace adexsbi::nn {

// Binary layout, all integers and values little-endian:
//   magic "ADXT" | u32 version | u64 tensor count
//   per tensor: u32 name length | name bytes | u32 rank | u64 dims[rank] | f64 values
inline constexpr char kCheckpointMagic[4] = {'A', 'D', 'X', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using NamedTensors = std::map<std::string, Tensor>;

void save_tensors(const std::filesystem::path& path, const std::vector<const Parameter*>& params);
void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::filesystem::path& path);

/// Copies stored values into `params` by name; shapes must match exactly.
void load_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params);
void save_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params);

}  // namespace adexsbi::nn
