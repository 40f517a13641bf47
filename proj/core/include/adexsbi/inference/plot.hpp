#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "adexsbi/features/features.hpp"
#include "adexsbi/inference/posterior.hpp"

namespace adexsbi::inference {

/// 1-D and 2-D histogram bins of posterior draws over the code box, written
/// as corner_1d.csv and corner_2d.csv.
void write_corner_histograms(const std::filesystem::path& dir, const PosteriorSampleSet& samples,
                             std::size_t bins = 32);

struct TraceSeries {
  std::string label;
  std::string color;
  const features::RegularTrace* trace = nullptr;
};

/// Overlaid voltage traces as a standalone SVG polyline plot.
void write_trace_svg(const std::filesystem::path& path, const std::vector<TraceSeries>& series,
                     const std::string& title);

/// Grid of 1-D marginal histograms as SVG.
void write_marginals_svg(const std::filesystem::path& path, const PosteriorSampleSet& samples, std::size_t bins = 32);

}  // namespace adexsbi::inference
