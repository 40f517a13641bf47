#include "adexsbi/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "common/binary_io.hpp"

namespace adexsbi::nn {
namespace {

void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) io::write_le<std::uint64_t>(out, d);
  for (double v : t.data()) io::write_le<double>(out, v);
}

}  // namespace

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot write " + path.string());
  out.write(kCheckpointMagic, 4);
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  io::write_le<std::uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) write_tensor(out, name, t);
  if (!out) throw CheckpointError("checkpoint: write failed for " + path.string());
}

void save_tensors(const std::filesystem::path& path, const std::vector<const Parameter*>& params) {
  NamedTensors named;
  for (const Parameter* p : params) {
    if (!named.emplace(p->name, p->value).second) throw CheckpointError("checkpoint: duplicate tensor name " + p->name);
  }
  save_tensors(path, named);
}

void save_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params) {
  save_tensors(path, std::vector<const Parameter*>(params.begin(), params.end()));
}

NamedTensors load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw CheckpointError("checkpoint: bad magic in " + path.string());
  }
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  if (!io::read_le(in, version) || !io::read_le(in, count)) throw CheckpointError("checkpoint: truncated header");
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  NamedTensors out;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint32_t name_len = 0, rank = 0;
    if (!io::read_le(in, name_len)) throw CheckpointError("checkpoint: truncated tensor record");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!io::read_le(in, rank)) throw CheckpointError("checkpoint: truncated tensor record");
    Shape shape(rank);
    for (auto& d : shape) {
      std::uint64_t v = 0;
      if (!io::read_le(in, v)) throw CheckpointError("checkpoint: truncated shape of " + name);
      d = static_cast<std::size_t>(v);
    }
    Tensor t(shape);
    for (double& v : t.data()) {
      if (!io::read_le(in, v)) throw CheckpointError("checkpoint: truncated values of " + name);
    }
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

void load_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params) {
  const NamedTensors stored = load_tensors(path);
  for (Parameter* p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end()) throw CheckpointError("checkpoint: missing tensor " + p->name);
    if (it->second.shape() != p->value.shape()) {
      throw CheckpointError("checkpoint: tensor " + p->name + " has shape " + shape_string(it->second.shape()) +
                            ", expected " + shape_string(p->value.shape()));
    }
    p->value = it->second;
    p->zero_grad();
  }
}

}  // namespace adexsbi::nn
