#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scalinglab/feature_maps.hpp"
#include "scalinglab/spectral_analysis.hpp"

using namespace scalinglab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("sample_feature_weights determinism and zero variance") {
  const FeatureWeights u1 = sample_feature_weights(6, 4, 1.0, 11);
  const FeatureWeights u2 = sample_feature_weights(6, 4, 1.0, 11);
  CHECK(u1.u == u2.u);
  CHECK(sample_feature_weights(6, 4, 0.0, 11).u.isZero(0.0));
}

TEST_CASE("linear_features basics") {
  FeatureWeights id = identity_feature_weights(3);
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(linear_features(id, x).phi == x);

  CHECK(linear_features(id, Matrix::Zero(3, 5)).phi.isZero(0.0));

  FeatureWeights sum{Matrix(1, 2), 1.0, 2};
  sum.u << 1, 1;
  Matrix v(2, 1);
  v << 1, 2;
  CHECK_THAT(linear_features(sum, v).phi(0, 0), WithinAbs(3.0, 1e-15));

  CHECK_THROWS_AS(linear_features(sum, Matrix::Zero(3, 1)), ShapeError);
}

TEST_CASE("relu_features clips negative preactivations") {
  FeatureWeights u{Matrix(2, 1), 1.0, 1};
  u.u << 1, -1;
  Matrix x(1, 1);
  x << 2;
  const Matrix phi = relu_features(u, x).phi;
  CHECK_THAT(phi(0, 0), WithinAbs(2.0, 1e-15));
  CHECK_THAT(phi(1, 0), WithinAbs(0.0, 1e-15));

  CHECK(relu_features(u, Matrix::Zero(1, 3)).phi.isZero(0.0));

  RandomEngine eng(5);
  FeatureWeights r{gaussian_matrix(eng, 8, 4), 2.0, 4};
  const Matrix random_phi = relu_features(r, gaussian_matrix(eng, 4, 10)).phi;
  CHECK(random_phi.minCoeff() >= 0.0);
}

TEST_CASE("relu_kernel closed form at special angles") {
  const double v = 0.8;  // per-component weight variance

  SECTION("aligned columns give v |x|^2 / 2") {
    Matrix x(2, 2);
    x << 1, 2, 0, 0;
    const Matrix k = relu_kernel(x, v);
    CHECK_THAT(k(0, 0), WithinRel(v * 1.0 / 2.0, 1e-12));
    CHECK_THAT(k(1, 1), WithinRel(v * 4.0 / 2.0, 1e-12));
    CHECK_THAT(k(0, 1), WithinRel(v * 2.0 / 2.0, 1e-12));
  }

  SECTION("orthogonal columns give v |x1||x2| / 2pi") {
    Matrix x(2, 2);
    x << 3, 0, 0, 2;
    const Matrix k = relu_kernel(x, v);
    CHECK_THAT(k(0, 1), WithinRel(v * 6.0 / (2.0 * M_PI), 1e-12));
  }

  SECTION("antipodal columns vanish") {
    Matrix x(2, 2);
    x << 1, -1, 0, 0;
    const Matrix k = relu_kernel(x, v);
    CHECK_THAT(k(0, 1), WithinAbs(0.0, 1e-12));
  }

  SECTION("zero-norm column is rejected") {
    Matrix x(2, 2);
    x << 1, 0, 0, 0;
    CHECK_THROWS_AS(relu_kernel(x, v), DomainError);
  }
}

TEST_CASE("relu_kernel is symmetric PSD") {
  RandomEngine eng(17);
  const Matrix x = gaussian_matrix(eng, 6, 15);
  const Matrix k = relu_kernel(x, 2.0 / 6.0);
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const auto eigs = eigen_spectrum(k);
  const double top = eigs.front();
  CHECK(eigs.back() >= -1e-8 * top);
}

TEST_CASE("linear_features preserves rank") {
  RandomEngine eng(23);
  // x with rank 2: outer product structure
  const Matrix a = gaussian_matrix(eng, 5, 2);
  const Matrix b = gaussian_matrix(eng, 2, 9);
  const Matrix x = a * b;
  FeatureWeights u{gaussian_matrix(eng, 12, 5), 1.0, 5};
  const Matrix phi = linear_features(u, x).phi;
  Eigen::ColPivHouseholderQR<Matrix> qr(phi);
  qr.setThreshold(1e-10);
  CHECK(qr.rank() <= 2);
}
