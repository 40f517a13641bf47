#include "adexsbi/dataset/storage.hpp"

#include <charconv>
#include <sstream>

#include <spdlog/spdlog.h>

#include "adexsbi/common/hash.hpp"
#include "common/binary_io.hpp"
#include "config/json_convert.hpp"

namespace adexsbi::dataset {
namespace fs = std::filesystem;

namespace {

const char* const kDataFiles[] = {kCodesFile, kFeaturesFile, kSpikesFile, kTracesFile};

template <typename T>
void put(std::string& line, T value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  line.append(buf, res.ptr);
}

std::ofstream open_out(const fs::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw DatasetError("cannot create " + path.string());
  return out;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

template <typename T>
T parse(std::string_view cell, const fs::path& file, std::size_t line_no) {
  T value{};
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw CorruptDatasetError(file.string() + ":" + std::to_string(line_no) + ": bad value '" + std::string(cell) +
                              "'");
  }
  return value;
}

std::string combine_hashes(const std::map<std::string, std::string>& hashes) {
  Sha256 h;
  for (const char* name : kDataFiles) {
    h.update(std::string(name) + ":" + hashes.at(name) + "\n");
  }
  return h.hex_digest();
}

void check_hash(const fs::path& dir, const DatasetManifest& m, const char* name) {
  const fs::path path = dir / name;
  if (!fs::exists(path)) throw CorruptDatasetError("dataset file missing: " + path.string());
  const auto it = m.file_hashes.find(name);
  if (it == m.file_hashes.end()) throw CorruptDatasetError("manifest has no hash for " + std::string(name));
  if (sha256_file(path) != it->second) throw CorruptDatasetError("hash mismatch for " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CorruptDatasetError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  return lines;
}

}  // namespace

DatasetWriter::DatasetWriter(const fs::path& dir) : dir_(dir) {
  fs::create_directories(dir_);
  // An old manifest would make a half-written directory look complete.
  fs::remove(dir_ / kManifestFile);
  codes_ = open_out(dir_ / kCodesFile, false);
  features_ = open_out(dir_ / kFeaturesFile, false);
  spikes_ = open_out(dir_ / kSpikesFile, true);
  traces_ = open_out(dir_ / kTracesFile, true);

  std::string header = "index,seed,pathological";
  for (auto name : hw::kParamNames) header.append(",").append(name);
  codes_ << header << '\n';
  header = "index";
  for (auto name : features::kFeatureNames) header.append(",").append(name);
  for (auto name : features::kFeatureNames) header.append(",valid_").append(name);
  features_ << header << '\n';
}

void DatasetWriter::append(const DatasetRecord& r) {
  if (finished_) throw DatasetError("DatasetWriter: append after finish");
  if (r.index != count_) {
    throw DatasetError("DatasetWriter: expected record " + std::to_string(count_) + ", got " +
                       std::to_string(r.index));
  }
  std::string line;
  put(line, r.index);
  line += ',';
  put(line, r.seed);
  line += r.pathological ? ",1" : ",0";
  for (int c : r.code.values()) {
    line += ',';
    put(line, c);
  }
  codes_ << line << '\n';

  line.clear();
  put(line, r.index);
  for (double v : r.features.values) {
    line += ',';
    put(line, v);
  }
  for (bool ok : r.features.valid) line += ok ? ",1" : ",0";
  features_ << line << '\n';

  io::write_le<std::uint64_t>(spikes_, r.spike_times.size());
  for (double t : r.spike_times) io::write_le(spikes_, t);

  if (r.pathological || r.trace.voltages.empty()) {
    for (std::size_t i = 0; i < features::kGridPoints; ++i) io::write_le(traces_, 0.0f);
  } else {
    if (r.trace.voltages.size() != features::kGridPoints) {
      throw DatasetError("DatasetWriter: trace of record " + std::to_string(r.index) + " has " +
                         std::to_string(r.trace.voltages.size()) + " samples");
    }
    for (float v : r.trace.voltages) io::write_le(traces_, v);
  }
  ++count_;
  pathological_ += r.pathological ? 1 : 0;
}

DatasetManifest DatasetWriter::finish(const GenerationInfo& info) {
  if (finished_) throw DatasetError("DatasetWriter: finish called twice");
  finished_ = true;
  for (std::ofstream* f : {&codes_, &features_, &spikes_, &traces_}) {
    f->close();
    if (!*f) throw DatasetError("DatasetWriter: write failed in " + dir_.string());
  }
  DatasetManifest m;
  m.tool_version = info.tool_version;
  m.record_count = count_;
  m.pathological_count = pathological_;
  m.master_seed = info.master_seed;
  m.config_snapshot = info.config_snapshot;
  for (const char* name : kDataFiles) m.file_hashes[name] = sha256_file(dir_ / name);
  m.content_hash = combine_hashes(m.file_hashes);

  json j = {{"schema_version", m.schema_version},
            {"tool_version", m.tool_version},
            {"record_count", m.record_count},
            {"pathological_count", m.pathological_count},
            {"master_seed", m.master_seed},
            {"files", m.file_hashes},
            {"content_hash", m.content_hash}};
  j["config"] = m.config_snapshot.empty() ? json(nullptr) : json::parse(m.config_snapshot);
  const fs::path tmp = dir_ / (std::string(kManifestFile) + ".tmp");
  write_json_file(tmp, j);
  fs::rename(tmp, dir_ / kManifestFile);
  spdlog::info("dataset: wrote {} records to {} (content hash {})", m.record_count, dir_.string(),
               m.content_hash.substr(0, 16));
  return m;
}

DatasetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestFile;
  if (!fs::exists(path)) throw IncompleteDatasetError("no manifest in " + dir.string() + " (incomplete write?)");
  json j;
  try {
    j = read_json_file(path);
  } catch (const std::exception& e) {
    throw CorruptDatasetError("unreadable manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.record_count = j.at("record_count").get<std::size_t>();
    m.pathological_count = j.value("pathological_count", std::size_t{0});
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.file_hashes = j.at("files").get<std::map<std::string, std::string>>();
    m.content_hash = j.at("content_hash").get<std::string>();
    if (!j.at("config").is_null()) m.config_snapshot = j.at("config").dump();
  } catch (const json::exception& e) {
    throw CorruptDatasetError("malformed manifest " + path.string() + ": " + e.what());
  }
  if (m.schema_version != kSchemaVersion) {
    throw CorruptDatasetError("unsupported dataset schema version " + std::to_string(m.schema_version));
  }
  for (const char* name : kDataFiles) {
    if (!m.file_hashes.count(name)) throw CorruptDatasetError("manifest has no hash for " + std::string(name));
  }
  if (combine_hashes(m.file_hashes) != m.content_hash) {
    throw CorruptDatasetError("manifest content hash does not match its file hashes");
  }
  return m;
}

void verify_dataset(const fs::path& dir) {
  const DatasetManifest m = read_manifest(dir);
  for (const char* name : kDataFiles) check_hash(dir, m, name);
}

Dataset load_dataset(const fs::path& dir, const LoadOptions& options) {
  Dataset ds;
  ds.manifest = read_manifest(dir);
  const std::size_t n = ds.manifest.record_count;
  check_hash(dir, ds.manifest, kCodesFile);
  check_hash(dir, ds.manifest, kFeaturesFile);
  if (options.spikes) check_hash(dir, ds.manifest, kSpikesFile);
  if (options.traces) check_hash(dir, ds.manifest, kTracesFile);

  const fs::path codes_path = dir / kCodesFile;
  const fs::path feat_path = dir / kFeaturesFile;
  const auto code_lines = read_lines(codes_path);
  const auto feat_lines = read_lines(feat_path);
  if (code_lines.size() != n + 1 || feat_lines.size() != n + 1) {
    throw CorruptDatasetError("record count in CSV files does not match manifest");
  }
  double experiment_length = 0.0;
  if (!ds.manifest.config_snapshot.empty()) {
    const json cfg = json::parse(ds.manifest.config_snapshot);
    const json* sim = &cfg;
    if (cfg.contains("simulation")) sim = &cfg.at("simulation");
    if (sim->contains("stimulus")) experiment_length = sim->at("stimulus").value("experiment_length", 0.0);
  }

  std::ifstream spikes, traces;
  if (options.spikes) spikes.open(dir / kSpikesFile, std::ios::binary);
  if (options.traces) {
    traces.open(dir / kTracesFile, std::ios::binary);
    if (fs::file_size(dir / kTracesFile) != n * features::kGridPoints * sizeof(float)) {
      throw CorruptDatasetError("trace file size does not match record count");
    }
  }

  ds.records.reserve(n);
  std::vector<float> buffer(features::kGridPoints);
  for (std::size_t i = 0; i < n; ++i) {
    DatasetRecord r;
    const auto cc = split_csv(code_lines[i + 1]);
    const auto fc = split_csv(feat_lines[i + 1]);
    if (cc.size() != 3 + hw::kNumFree || fc.size() != 1 + 2 * features::kNumFeatures) {
      throw CorruptDatasetError("wrong column count in record " + std::to_string(i));
    }
    r.index = parse<std::size_t>(cc[0], codes_path, i + 2);
    if (r.index != i || parse<std::size_t>(fc[0], feat_path, i + 2) != i) {
      throw CorruptDatasetError("records out of order at " + std::to_string(i));
    }
    r.seed = parse<std::uint64_t>(cc[1], codes_path, i + 2);
    r.pathological = parse<int>(cc[2], codes_path, i + 2) != 0;
    std::array<int, hw::kNumFree> code{};
    for (std::size_t k = 0; k < hw::kNumFree; ++k) code[k] = parse<int>(cc[3 + k], codes_path, i + 2);
    try {
      r.code = hw::CodeVector(code);
    } catch (const hw::CodeRangeError& e) {
      throw CorruptDatasetError("record " + std::to_string(i) + ": " + e.what());
    }
    for (std::size_t k = 0; k < features::kNumFeatures; ++k) {
      r.features.values[k] = parse<double>(fc[1 + k], feat_path, i + 2);
      r.features.valid[k] = parse<int>(fc[1 + features::kNumFeatures + k], feat_path, i + 2) != 0;
    }
    if (options.spikes) {
      std::uint64_t count = 0;
      if (!io::read_le(spikes, count)) throw CorruptDatasetError("spike file truncated at record " + std::to_string(i));
      r.spike_times.resize(count);
      for (double& t : r.spike_times) {
        if (!io::read_le(spikes, t)) throw CorruptDatasetError("spike file truncated at record " + std::to_string(i));
      }
    }
    r.trace.t0 = 0.0;
    r.trace.t_end = experiment_length;
    if (options.traces) {
      for (float& v : buffer) {
        if (!io::read_le(traces, v)) throw CorruptDatasetError("trace file truncated at record " + std::to_string(i));
      }
      if (!r.pathological) r.trace.voltages = buffer;
    }
    if (options.skip_pathological && r.pathological) continue;
    ds.records.push_back(std::move(r));
  }
  if (options.spikes && spikes.peek() != std::char_traits<char>::eof()) {
    throw CorruptDatasetError("trailing bytes in spike file");
  }
  return ds;
}

TraceReader::TraceReader(const fs::path& dir, std::size_t record_count)
    : in_(dir / kTracesFile, std::ios::binary), count_(record_count) {
  if (!in_) throw CorruptDatasetError("cannot open " + (dir / kTracesFile).string());
}

features::RegularTrace TraceReader::read(std::size_t index, double experiment_length) {
  if (index >= count_) throw std::out_of_range("TraceReader: record index out of range");
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(index * features::kGridPoints * sizeof(float)));
  features::RegularTrace tr{0.0, experiment_length, std::vector<float>(features::kGridPoints)};
  for (float& v : tr.voltages) {
    if (!io::read_le(in_, v)) throw CorruptDatasetError("trace file truncated at record " + std::to_string(index));
  }
  return tr;
}

std::string simulation_config_to_json(const SimulationConfig& config) { return simulation_to_json(config).dump(); }

SimulationConfig simulation_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  return simulation_from_json(j.contains("simulation") ? j.at("simulation") : j);
}

}  // namespace adexsbi::dataset
