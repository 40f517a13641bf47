#include "adexsbi/common/rng.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace adexsbi {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 is a bijection, so for fixed (master, stream) the map
  // index -> seed is injective.
  const std::uint64_t key = splitmix64(splitmix64(master) ^ (stream * 0xd1342543de82ef95ULL));
  return splitmix64(key + index * 0x9e3779b97f4a7c15ULL);
}

double uniform01(Rng& rng) {
  boost::random::uniform_01<double> dist;
  return dist(rng);
}

double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  boost::random::uniform_int_distribution<int> dist(lo, hi);
  return dist(rng);
}

}  // namespace adexsbi
