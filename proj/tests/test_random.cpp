#include <catch2/catch_amalgamated.hpp>

#include "scalinglab/random.hpp"

using namespace scalinglab;

TEST_CASE("substreams of one master seed are distinct and stable") {
  const std::uint64_t a = substream_seed(42, Stream::TrainLatents);
  const std::uint64_t b = substream_seed(42, Stream::TestLatents);
  const std::uint64_t c = substream_seed(43, Stream::TrainLatents);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(a == substream_seed(42, Stream::TrainLatents));
}

TEST_CASE("gaussian_matrix is deterministic per engine seed") {
  RandomEngine e1(7), e2(7), e3(8);
  const Matrix m1 = gaussian_matrix(e1, 4, 3);
  const Matrix m2 = gaussian_matrix(e2, 4, 3);
  const Matrix m3 = gaussian_matrix(e3, 4, 3);
  CHECK(m1 == m2);
  CHECK(m1 != m3);
}

TEST_CASE("gaussian_matrix zero stddev gives a zero matrix") {
  RandomEngine e(1);
  CHECK(gaussian_matrix(e, 5, 5, 0.0).isZero(0.0));
}
