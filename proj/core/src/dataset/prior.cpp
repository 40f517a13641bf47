#include "adexsbi/dataset/prior.hpp"

#include <spdlog/spdlog.h>

#include "adexsbi/common/rng.hpp"

namespace adexsbi::dataset {
namespace {

class PriorStream {
 public:
  PriorStream(std::uint64_t seed, PriorBox box) : rng_(derive_seed(seed, streams::kPrior, 0)), box_(box) {
    if (box.lo < hw::kCodeMin || box.hi > hw::kCodeMax || box.lo > box.hi) {
      throw std::invalid_argument("prior: box outside [0, 1022]");
    }
  }
  hw::CodeVector next() {
    std::array<int, hw::kNumFree> c{};
    for (int& v : c) v = uniform_int(rng_, box_.lo, box_.hi);
    return hw::CodeVector(c);
  }

 private:
  Rng rng_;
  PriorBox box_;
};

}  // namespace

std::vector<hw::CodeVector> sample_prior(std::size_t n, std::uint64_t seed, PriorBox box) {
  PriorStream stream(seed, box);
  std::vector<hw::CodeVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(stream.next());
  return out;
}

ConstrainedSample constrained_sample(const CodeScorer& scorer, double threshold, std::size_t n, std::uint64_t seed,
                                     const ConstrainedOptions& options) {
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("constrained_sample: threshold must lie in [0, 1)");
  }
  PriorStream stream(seed, options.box);
  ConstrainedSample out;
  out.codes.reserve(n);
  std::vector<hw::CodeVector> batch;
  bool probed = false;
  while (out.codes.size() < n) {
    batch.clear();
    for (std::size_t i = 0; i < options.batch; ++i) batch.push_back(stream.next());
    const std::vector<double> scores = threshold > 0.0 ? scorer(batch) : std::vector<double>(batch.size(), 1.0);
    for (std::size_t i = 0; i < batch.size() && out.codes.size() < n; ++i) {
      ++out.draws;
      if (scores[i] >= threshold) out.codes.push_back(batch[i]);
    }
    out.acceptance_rate = static_cast<double>(out.codes.size()) / static_cast<double>(out.draws);
    if (!probed && out.draws >= options.probe_draws) {
      probed = true;
      if (out.acceptance_rate < options.min_acceptance) {
        throw ConstrainedSamplingError("constrained_sample: acceptance rate " + std::to_string(out.acceptance_rate) +
                                       " after " + std::to_string(out.draws) +
                                       " draws is below the minimum; threshold too strict");
      }
    }
  }
  spdlog::info("constrained_sample: accepted {} of {} draws ({:.2f}%)", out.codes.size(), out.draws,
               100.0 * out.acceptance_rate);
  return out;
}

}  // namespace adexsbi::dataset
