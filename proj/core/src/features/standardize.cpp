#include "adexsbi/features/standardize.hpp"

#include <stdexcept>

namespace adexsbi::features {

nn::Tensor feature_matrix(std::span<const FeatureVector> batch) {
  nn::Tensor m(nn::Shape{batch.size(), kNumFeatures});
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t j = 0; j < kNumFeatures; ++j) m.at(i, j) = batch[i].values[j];
  return m;
}

nn::Tensor standardize_features(std::span<const FeatureVector> batch, const Normalizer& record) {
  if (record.dim() != kNumFeatures) throw std::invalid_argument("standardize_features: record has wrong width");
  nn::Tensor out(nn::Shape{batch.size(), kConditionDim});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < kNumFeatures; ++j) row[j] = (batch[i].values[j] - record.mean[j]) / record.scale[j];
    for (std::size_t k = 0; k < kSpikeDependent.size(); ++k) {
      row[kNumFeatures + k] = batch[i].is_valid(kSpikeDependent[k]) ? 1.0 : 0.0;
    }
  }
  return out;
}

StandardizedBatch standardize_features(std::span<const FeatureVector> batch) {
  if (batch.empty()) throw std::invalid_argument("standardize_features: empty batch");
  StandardizedBatch out;
  out.record = Normalizer::fit(feature_matrix(batch));
  out.rows = standardize_features(batch, out.record);
  return out;
}

std::vector<FeatureVector> destandardize_features(const nn::Tensor& rows, const Normalizer& record) {
  std::vector<FeatureVector> out(rows.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto row = rows.row(i);
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      out[i].values[j] = row[j] * record.scale[j] + record.mean[j];
      out[i].valid[j] = true;
    }
    for (std::size_t k = 0; k < kSpikeDependent.size(); ++k) {
      out[i].valid[static_cast<std::size_t>(kSpikeDependent[k])] = row[kNumFeatures + k] > 0.5;
    }
  }
  return out;
}

}  // namespace adexsbi::features
