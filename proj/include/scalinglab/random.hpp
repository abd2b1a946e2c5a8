#pragma once

#include <cstdint>
#include <random>

#include "scalinglab/types.hpp"

namespace scalinglab {

// All sampling is a pure function of (arguments, seed).  One master seed is
// split into independent sub-streams, one per random object in a run, so
// that results do not depend on the order in which objects are drawn.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
  TrainLatents = 1,
  TestLatents = 2,
  Teacher = 3,
  FeatureWeights = 4,
  TrainNoise = 5,
  InputProjection = 6,
};

inline std::uint64_t substream_seed(std::uint64_t master, Stream stream) {
  const auto s = static_cast<std::uint64_t>(stream);
  return splitmix64(splitmix64(master) ^ splitmix64(s * 0x9e3779b97f4a7c15ull));
}

using RandomEngine = std::mt19937_64;

inline RandomEngine make_engine(std::uint64_t master, Stream stream) {
  return RandomEngine(substream_seed(master, stream));
}

// Dense matrix of i.i.d. N(0, stddev^2) entries, filled in storage order.
inline Matrix gaussian_matrix(RandomEngine& engine, Index rows, Index cols,
                              double stddev = 1.0) {
  require_domain(rows >= 0 && cols >= 0, "gaussian_matrix: negative dimension");
  Matrix m(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = stddev * normal(engine);
  return m;
}

}  // namespace scalinglab
