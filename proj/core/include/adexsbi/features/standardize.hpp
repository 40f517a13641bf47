#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adexsbi/common/normalizer.hpp"
#include "adexsbi/features/features.hpp"
#include "adexsbi/nn/tensor.hpp"

namespace adexsbi::features {

/// Width of a standardised feature row: twelve z-scores followed by one 0/1
/// validity indicator per spike-dependent feature.
inline constexpr std::size_t kConditionDim = kNumFeatures + kSpikeDependent.size();

struct StandardizedBatch {
  nn::Tensor rows;  // [n, kConditionDim]
  Normalizer record;
};

/// Fits z-score statistics on `batch` and applies them.
StandardizedBatch standardize_features(std::span<const FeatureVector> batch);

/// Applies a previously fitted record.
nn::Tensor standardize_features(std::span<const FeatureVector> batch, const Normalizer& record);

/// Recovers feature values (validity flags included) from standardised rows.
std::vector<FeatureVector> destandardize_features(const nn::Tensor& rows, const Normalizer& record);

nn::Tensor feature_matrix(std::span<const FeatureVector> batch);

}  // namespace adexsbi::features
