#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "adexsbi/common/normalizer.hpp"
#include "adexsbi/common/rng.hpp"
#include "adexsbi/dataset/prior.hpp"
#include "adexsbi/dataset/record.hpp"
#include "adexsbi/dataset/storage.hpp"
#include "adexsbi/nn/graph.hpp"

namespace adexsbi::classifier {

/// Inclusive in-stimulus spike-count range counted as a positive.
struct LabelRange {
  std::size_t min = 1;
  std::size_t max = 70;
};

bool label_spike_count(std::size_t count, LabelRange range = {});
bool label_record(const dataset::DatasetRecord& record, const sim::Stimulus& stimulus, LabelRange range = {});

struct ClassifierSpec {
  std::size_t hidden = 100;
  std::size_t blocks = 4;
  double dropout = 0.5;
};

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  ClassifierSpec spec;
};

/// Residual MLP: z-scored codes -> Linear(7, H) -> blocks of
/// [Linear -> ReLU -> Dropout -> Linear] + skip -> ReLU -> Linear(H, 1).
class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(const ClassifierSpec& spec, std::uint64_t seed);

  /// Eval-mode forward; dropout is off and the result is deterministic.
  std::vector<double> logits(std::span<const hw::CodeVector> codes) const;
  std::vector<double> predict_probs(std::span<const hw::CodeVector> codes) const;
  double predict_prob(const hw::CodeVector& code) const;
  dataset::CodeScorer scorer() const;

  /// Training-mode logits [n,1] recorded on `g`, parameters bound for backprop.
  nn::Var forward_train(nn::Graph& g, const nn::Tensor& normalized_inputs, Rng& dropout_rng);

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

  void save(const std::filesystem::path& dir) const;
  static ClassifierModel load(const std::filesystem::path& dir);

  ClassifierSpec spec;
  Normalizer input_norm;
  LabelRange label_range;
  /// Acceptance threshold, negative until chosen.
  double threshold = -1.0;

  nn::Parameter in_w, in_b, out_w, out_b;
  std::vector<nn::Parameter> block_w1, block_b1, block_w2, block_b2;

 private:
  nn::Tensor normalize(std::span<const hw::CodeVector> codes) const;
};

struct TrainingCurve {
  std::vector<double> epoch_loss;
};

/// Minimises positive-reweighted binary cross-entropy with Adam. Throws
/// std::invalid_argument when the labels contain only one class.
ClassifierModel train_classifier(std::span<const hw::CodeVector> codes, const std::vector<bool>& labels,
                                 const TrainOptions& options, TrainingCurve* curve = nullptr);

/// Labels every non-pathological record with label_record and trains on them.
ClassifierModel train_classifier(const dataset::Dataset& data, const sim::Stimulus& stimulus,
                                 const TrainOptions& options, LabelRange range = {},
                                 TrainingCurve* curve = nullptr);

class ThresholdError : public std::runtime_error {
 public:
  ThresholdError(const std::string& what, double min_fnr) : std::runtime_error(what), min_fnr_(min_fnr) {}
  double achievable_min_fnr() const { return min_fnr_; }

 private:
  double min_fnr_;
};

struct ThresholdChoice {
  double threshold = 0.0;
  /// Fraction of held-out positives scored below the threshold.
  double false_negative_rate = 0.0;
  std::size_t positives = 0;
};

/// Largest threshold whose false-negative rate on the held-out positives is
/// at most `max_fnr`. A vacuous bound (max_fnr >= 1) returns 1 - eps.
ThresholdChoice choose_threshold(std::span<const double> positive_scores, double max_fnr = 0.05);
ThresholdChoice choose_threshold(const ClassifierModel& model, std::span<const hw::CodeVector> held_out,
                                 const std::vector<bool>& labels, double max_fnr = 0.05);

}  // namespace adexsbi::classifier
