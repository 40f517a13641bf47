#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "adexsbi/common/rng.hpp"
#include "adexsbi/config/pipeline_config.hpp"
#include "adexsbi/dataset/prior.hpp"
#include "adexsbi/dataset/storage.hpp"
#include "adexsbi/pipeline/stages.hpp"

namespace ds = adexsbi::dataset;
namespace fs = std::filesystem;
using adexsbi::hw::CodeVector;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() /
            ("adexsbi_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

const ds::SimulationConfig& sim_config() {
  static const ds::SimulationConfig c = adexsbi::config::default_config().simulation;
  return c;
}

ds::GenerationInfo info(std::uint64_t seed) {
  ds::GenerationInfo g;
  g.master_seed = seed;
  return g;
}

}  // namespace

TEST(Prior, DrawsInsideRangeWithCentredMean) {
  const auto codes = ds::sample_prior(100000, 5);
  std::array<double, adexsbi::hw::kNumFree> sum{};
  for (const auto& c : codes) {
    for (std::size_t j = 0; j < adexsbi::hw::kNumFree; ++j) {
      ASSERT_GE(c[j], 0);
      ASSERT_LE(c[j], 1022);
      sum[j] += c[j];
    }
  }
  for (double s : sum) EXPECT_NEAR(s / 1e5, 511.0, 5.0);
}

TEST(Prior, SeedDeterminesSequence) {
  EXPECT_EQ(ds::sample_prior(50, 9), ds::sample_prior(50, 9));
  EXPECT_NE(ds::sample_prior(50, 9), ds::sample_prior(50, 10));
  // A prefix of a longer draw matches the shorter draw.
  const auto longer = ds::sample_prior(80, 9);
  EXPECT_EQ(std::vector<CodeVector>(longer.begin(), longer.begin() + 50), ds::sample_prior(50, 9));
}

TEST(Prior, BoxRestrictsRange) {
  for (const auto& c : ds::sample_prior(500, 1, {100, 120})) {
    for (int v : c.values()) {
      EXPECT_GE(v, 100);
      EXPECT_LE(v, 120);
    }
  }
  EXPECT_THROW(ds::sample_prior(1, 1, {-1, 10}), std::invalid_argument);
}

TEST(Constrained, ZeroThresholdEqualsPrior) {
  const auto scorer = [](std::span<const CodeVector> b) { return std::vector<double>(b.size(), 0.0); };
  const auto s = ds::constrained_sample(scorer, 0.0, 300, 21);
  EXPECT_EQ(s.codes, ds::sample_prior(300, 21));
  EXPECT_EQ(s.draws, 300u);
}

TEST(Constrained, NeverAcceptsBelowThreshold) {
  // Score = first code / 1022, threshold 0.5.
  const auto scorer = [](std::span<const CodeVector> b) {
    std::vector<double> out;
    for (const auto& c : b) out.push_back(c[0] / 1022.0);
    return out;
  };
  const auto s = ds::constrained_sample(scorer, 0.5, 1000, 3);
  ASSERT_EQ(s.codes.size(), 1000u);
  for (const auto& c : s.codes) EXPECT_GE(c[0] / 1022.0, 0.5);
  EXPECT_NEAR(s.acceptance_rate, 0.5, 0.05);
  // Accepted codes are the passing subsequence of the prior stream.
  std::vector<CodeVector> expect;
  for (const auto& c : ds::sample_prior(s.draws, 3))
    if (c[0] / 1022.0 >= 0.5) expect.push_back(c);
  EXPECT_EQ(s.codes, expect);
}

TEST(Constrained, LowAcceptanceFailsFast) {
  const auto scorer = [](std::span<const CodeVector> b) { return std::vector<double>(b.size(), 0.1); };
  EXPECT_THROW(ds::constrained_sample(scorer, 0.5, 10, 1), ds::ConstrainedSamplingError);
  EXPECT_THROW(ds::constrained_sample(scorer, 1.0, 10, 1), std::invalid_argument);
}

TEST(Storage, SmallDatasetVerifiesAndReloads) {
  TempDir dir("small");
  const auto codes = ds::sample_prior(10, 2);
  const auto m = ds::generate_dataset(codes, sim_config(), dir / "d", info(77));
  EXPECT_EQ(m.record_count, 10u);
  EXPECT_EQ(m.content_hash.size(), 64u);
  EXPECT_NO_THROW(ds::verify_dataset(dir / "d"));

  const auto loaded = ds::load_dataset(dir / "d");
  ASSERT_EQ(loaded.records.size(), 10u);
  const auto fresh = ds::simulate_records(codes, sim_config(), 77);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& a = loaded.records[i];
    const auto& b = fresh[i];
    EXPECT_EQ(a.index, i);
    EXPECT_EQ(a.code, codes[i]);
    EXPECT_EQ(a.seed, b.seed);
    EXPECT_EQ(a.pathological, b.pathological);
    EXPECT_EQ(a.spike_times, b.spike_times);
    EXPECT_EQ(a.trace.voltages, b.trace.voltages);
    for (std::size_t k = 0; k < adexsbi::features::kNumFeatures; ++k) {
      EXPECT_EQ(a.features.values[k], b.features.values[k]);
      EXPECT_EQ(a.features.valid[k], b.features.valid[k]);
    }
  }
  ds::TraceReader reader(dir / "d", 10);
  EXPECT_EQ(reader.read(7, sim_config().experiment_length).voltages, loaded.records[7].trace.voltages);
}

TEST(Storage, HashReproducibleAndSeedSensitive) {
  TempDir dir("hash");
  const auto codes = ds::sample_prior(6, 4);
  const auto a = ds::generate_dataset(codes, sim_config(), dir / "a", info(1));
  auto par = info(1);
  par.jobs = 3;
  const auto b = ds::generate_dataset(codes, sim_config(), dir / "b", par);
  const auto c = ds::generate_dataset(codes, sim_config(), dir / "c", info(2));
  EXPECT_EQ(a.content_hash, b.content_hash);
  EXPECT_NE(a.content_hash, c.content_hash);
  // Distinct records get distinct derived seeds.
  const auto recs = ds::simulate_records(codes, sim_config(), 1);
  for (std::size_t i = 0; i < recs.size(); ++i)
    for (std::size_t j = i + 1; j < recs.size(); ++j) EXPECT_NE(recs[i].seed, recs[j].seed);
}

TEST(Storage, WriterRoundTripsHandBuiltRecords) {
  TempDir dir("writer");
  std::vector<ds::DatasetRecord> recs(3);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto& r = recs[i];
    r.index = i;
    r.code = CodeVector({int(i), 1, 2, 3, 4, 5, 1022});
    r.seed = 1000 + i;
    r.pathological = i == 1;
    if (!r.pathological) {
      r.spike_times = {0.4e-3 + 1e-7 * double(i), 0.61e-3};
      r.trace.t_end = sim_config().experiment_length;
      r.trace.voltages.assign(adexsbi::features::kGridPoints, 0.5f + 0.01f * float(i));
    }
    r.features.set(adexsbi::features::Feature::kRate, 2000.0 + double(i), true);
    r.features.set(adexsbi::features::Feature::kLatency, 0.1e-3 / 3.0, i != 2);
  }
  {
    ds::DatasetWriter w(dir / "w");
    for (const auto& r : recs) w.append(r);
    const auto m = w.finish(info(5));
    EXPECT_EQ(m.pathological_count, 1u);
  }
  const auto back = ds::load_dataset(dir / "w");
  ASSERT_EQ(back.records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.records[i].code, recs[i].code);
    EXPECT_EQ(back.records[i].seed, recs[i].seed);
    EXPECT_EQ(back.records[i].pathological, recs[i].pathological);
    EXPECT_EQ(back.records[i].spike_times, recs[i].spike_times);
    EXPECT_EQ(back.records[i].features.values, recs[i].features.values);
    EXPECT_EQ(back.records[i].features.valid, recs[i].features.valid);
    if (!recs[i].pathological) EXPECT_EQ(back.records[i].trace.voltages, recs[i].trace.voltages);
  }
  ds::LoadOptions skip;
  skip.skip_pathological = true;
  const auto kept = ds::load_dataset(dir / "w", skip);
  ASSERT_EQ(kept.records.size(), 2u);
  EXPECT_EQ(kept.records[0].index, 0u);
  EXPECT_EQ(kept.records[1].index, 2u);
}

TEST(Storage, TruncatedTraceFileIsCorrupt) {
  TempDir dir("trunc");
  ds::generate_dataset(ds::sample_prior(4, 6), sim_config(), dir / "d", info(3));
  const auto traces = dir / "d" / ds::kTracesFile;
  fs::resize_file(traces, fs::file_size(traces) - 4);
  EXPECT_THROW(ds::load_dataset(dir / "d"), ds::CorruptDatasetError);
  EXPECT_THROW(ds::verify_dataset(dir / "d"), ds::CorruptDatasetError);
  // A features-only load never touches the trace file.
  ds::LoadOptions light;
  light.traces = false;
  EXPECT_NO_THROW(ds::load_dataset(dir / "d", light));
}

TEST(Storage, FlippedByteIsCorrupt) {
  TempDir dir("flip");
  ds::generate_dataset(ds::sample_prior(4, 6), sim_config(), dir / "d", info(3));
  std::fstream f(dir / "d" / ds::kCodesFile, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(0);
  f.put('9');
  f.close();
  EXPECT_THROW(ds::load_dataset(dir / "d"), ds::CorruptDatasetError);
}

TEST(Storage, MissingManifestIsIncomplete) {
  TempDir dir("nomanifest");
  ds::generate_dataset(ds::sample_prior(3, 6), sim_config(), dir / "d", info(3));
  fs::remove(dir / "d" / ds::kManifestFile);
  EXPECT_THROW(ds::load_dataset(dir / "d"), ds::IncompleteDatasetError);
  EXPECT_THROW(ds::read_manifest(dir / "missing"), ds::IncompleteDatasetError);
}

TEST(Storage, SimulationConfigJsonRoundTrip) {
  const auto text = ds::simulation_config_to_json(sim_config());
  EXPECT_EQ(ds::simulation_config_to_json(ds::simulation_config_from_json(text)), text);
}

TEST(Generate, UniformPriorRarelyInRange) {
  TempDir dir("inrange");
  const auto cfg = adexsbi::config::default_config();
  ds::generate_dataset(ds::sample_prior(400, 8), cfg.simulation, dir / "d", info(8));
  ds::LoadOptions light;
  light.traces = false;
  const double f = adexsbi::pipeline::in_range_fraction(ds::load_dataset(dir / "d", light), cfg);
  EXPECT_LT(f, 0.25);
}
