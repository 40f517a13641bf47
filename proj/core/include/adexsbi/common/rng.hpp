#pragma once

#include <cstdint>
#include <random>

namespace adexsbi {

// The engine is fully specified by the standard; the distributions below are
// not taken from <random> because their algorithms differ between standard
// library implementations.
using Rng = std::mt19937_64;

/// Mixes (master, stream, index) into an independent 64-bit seed. Distinct
/// indices under the same (master, stream) always produce distinct seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

double uniform01(Rng& rng);
double standard_normal(Rng& rng);
/// Uniform integer in the closed range [lo, hi].
int uniform_int(Rng& rng, int lo, int hi);

// Stream identifiers for derive_seed. Keeping them in one place avoids two
// stages drawing from the same stream by accident.
namespace streams {
inline constexpr std::uint64_t kPrior = 0x01;
inline constexpr std::uint64_t kRecord = 0x02;
inline constexpr std::uint64_t kDropout = 0x03;
inline constexpr std::uint64_t kShuffle = 0x04;
inline constexpr std::uint64_t kInit = 0x05;
inline constexpr std::uint64_t kPosterior = 0x06;
inline constexpr std::uint64_t kPredictive = 0x07;
inline constexpr std::uint64_t kSelection = 0x08;
inline constexpr std::uint64_t kSbc = 0x09;
inline constexpr std::uint64_t kMasks = 0x0a;
}  // namespace streams

}  // namespace adexsbi
