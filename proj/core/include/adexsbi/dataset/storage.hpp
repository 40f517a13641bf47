#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adexsbi/dataset/record.hpp"

// On-disk layout of one dataset directory (all binary data little-endian):
//   manifest      JSON, written last; its presence marks a complete dataset
//   codes.csv     index, seed, pathological flag, seven codes
//   features.csv  index, twelve feature values, twelve validity flags
//   spikes        per record: u64 count, then f64 spike times
//   traces.f32    per record: 10000 f32 samples (zeros for pathological records)
namespace adexsbi::dataset {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kManifestFile = "manifest";
inline constexpr const char* kCodesFile = "codes.csv";
inline constexpr const char* kFeaturesFile = "features.csv";
inline constexpr const char* kSpikesFile = "spikes";
inline constexpr const char* kTracesFile = "traces.f32";

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// No manifest: the write never completed.
class IncompleteDatasetError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};
/// Manifest present but the data files do not match it.
class CorruptDatasetError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

struct GenerationInfo {
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
  /// JSON text stored verbatim as the configuration snapshot. When empty the
  /// simulation config alone is recorded.
  std::string config_snapshot;
  std::string tool_version = "0.1.0";
};

struct DatasetManifest {
  int schema_version = kSchemaVersion;
  std::string tool_version;
  std::size_t record_count = 0;
  std::size_t pathological_count = 0;
  std::uint64_t master_seed = 0;
  std::map<std::string, std::string> file_hashes;
  /// SHA-256 over the per-file hashes; independent of the config snapshot.
  std::string content_hash;
  std::string config_snapshot;
};

/// Appends records in index order and commits the manifest on finish().
class DatasetWriter {
 public:
  explicit DatasetWriter(const std::filesystem::path& dir);
  void append(const DatasetRecord& record);
  DatasetManifest finish(const GenerationInfo& info);
  std::size_t count() const { return count_; }

 private:
  std::filesystem::path dir_;
  std::ofstream codes_, features_, spikes_, traces_;
  std::size_t count_ = 0;
  std::size_t pathological_ = 0;
  bool finished_ = false;
};

/// Simulates codes in parallel; record i receives the seed derived from
/// (master_seed, record stream, first_index + i).
std::vector<DatasetRecord> simulate_records(std::span<const hw::CodeVector> codes, const SimulationConfig& config,
                                            std::uint64_t master_seed, std::size_t first_index = 0,
                                            std::size_t jobs = 1);

DatasetManifest generate_dataset(std::span<const hw::CodeVector> codes, const SimulationConfig& config,
                                 const std::filesystem::path& out, const GenerationInfo& info);

struct LoadOptions {
  bool traces = true;
  bool spikes = true;
  bool skip_pathological = false;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<DatasetRecord> records;
};

DatasetManifest read_manifest(const std::filesystem::path& dir);

/// Reads records in stored order. Only files that are read are hash-checked,
/// so a features-only load does not depend on the trace file.
Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Random access to individual traces without loading the whole trace file.
class TraceReader {
 public:
  TraceReader(const std::filesystem::path& dir, std::size_t record_count);
  features::RegularTrace read(std::size_t index, double experiment_length);

 private:
  std::ifstream in_;
  std::size_t count_;
};

/// Verifies every data file against the manifest; throws CorruptDatasetError.
void verify_dataset(const std::filesystem::path& dir);

std::string simulation_config_to_json(const SimulationConfig& config);
SimulationConfig simulation_config_from_json(const std::string& text);

}  // namespace adexsbi::dataset
