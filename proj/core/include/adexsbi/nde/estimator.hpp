#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "adexsbi/common/normalizer.hpp"
#include "adexsbi/dataset/storage.hpp"
#include "adexsbi/nde/flow.hpp"
#include "adexsbi/nde/summary_net.hpp"
#include "adexsbi/nde/trainer.hpp"

namespace adexsbi::nde {

enum class ConditioningMode { kHandcrafted, kSummary };

std::string to_string(ConditioningMode mode);
ConditioningMode parse_mode(const std::string& text);

/// What the estimator conditions on; handcrafted mode reads only `features`,
/// summary mode only `trace`.
struct Observation {
  features::FeatureVector features;
  features::RegularTrace trace;

  static Observation from_record(const dataset::DatasetRecord& record);
};

/// Flow plus whatever turns an observation into its condition vector.
class PosteriorEstimator {
 public:
  ConditioningMode mode = ConditioningMode::kHandcrafted;
  FlowModel flow;
  /// Feature standardisation (handcrafted mode).
  Normalizer feature_record;
  /// Summary network (summary mode).
  std::optional<SummaryNet> summary;

  /// Condition row [1, cond_dim] for one observation.
  nn::Tensor condition(const Observation& obs) const;

  void save(const std::filesystem::path& dir) const;
  static PosteriorEstimator load(const std::filesystem::path& dir);
  /// Hash of the saved checkpoint files, used as a model identifier.
  static std::string content_hash(const std::filesystem::path& dir);
};

struct NdeTrainOptions {
  ConditioningMode mode = ConditioningMode::kHandcrafted;
  /// 0 selects the mode default (10 handcrafted, 8 summary).
  std::size_t blocks = 0;
  std::size_t hidden = 128;
  std::size_t hidden_layers = 2;
  double clamp = kDefaultScaleClamp;
  FlowTrainOptions train;
};

struct NdeResult {
  PosteriorEstimator estimator;
  TrainingReport report;
};

/// Trains on the non-pathological records. Handcrafted mode uses features
/// only; summary mode requires the dataset loaded with traces.
NdeResult train_nde(const dataset::Dataset& data, const NdeTrainOptions& options);

}  // namespace adexsbi::nde
