// Monte-Carlo checks of the sampling statistics and kernel limits.  Seeds are
// fixed, so these are deterministic despite the statistical tolerances.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scalinglab/feature_maps.hpp"
#include "scalinglab/spectral_analysis.hpp"
#include "scalinglab/synthetic_data.hpp"

using namespace scalinglab;

TEST_CASE("sample_latents per-component variance tracks the spectrum") {
  const Spectrum s = build_spectrum(50, 1.0, 1.0);
  const Matrix x = sample_latents(s, 100000, 2024);
  for (int i = 1; i <= 10; ++i) {
    const double var = x.row(i - 1).squaredNorm() / static_cast<double>(x.cols());
    CHECK(std::abs(var - s.value(i)) / s.value(i) < 0.05);
  }
}

TEST_CASE("empirical covariance of latents converges to diag(spectrum)") {
  const Spectrum s = build_spectrum(50, 1.0, 1.0);
  Matrix lambda = Matrix::Zero(50, 50);
  for (int i = 1; i <= 50; ++i) lambda(i - 1, i - 1) = s.value(i);
  const double norm = lambda.norm();

  const double dist_small =
      (empirical_covariance(sample_latents(s, 100, 7)) - lambda).norm() / norm;
  const double dist_large =
      (empirical_covariance(sample_latents(s, 10000, 7)) - lambda).norm() / norm;
  CHECK(dist_large < dist_small);
  CHECK(dist_large < 0.2);
}

TEST_CASE("sample_teacher second moment") {
  const int m = 10000;
  const TeacherWeights w = sample_teacher(m, 1, 1.7, 55);
  const double mean_sq = w.w.squaredNorm() / static_cast<double>(m);
  CHECK(std::abs(mean_sq - 1.7 / m) / (1.7 / m) < 0.03);
}

TEST_CASE("sample_noise variance") {
  const Matrix eps = sample_noise(1, 100000, NoiseModel{0.25}, 99);
  const double var = eps.squaredNorm() / static_cast<double>(eps.cols());
  CHECK(std::abs(var - 0.25) / 0.25 < 0.03);
}

TEST_CASE("sample_feature_weights second moment") {
  const FeatureWeights u = sample_feature_weights(200, 200, 1.0, 1234);
  const double mean_sq = u.u.squaredNorm() / (200.0 * 200.0);
  CHECK(std::abs(mean_sq - 1.0 / 200.0) * 200.0 < 0.05);
}

TEST_CASE("finite-feature covariance converges to the relu kernel") {
  RandomEngine eng(32);
  const int d = 10, t = 20, n = 100000;
  // offset columns keep pairwise angles away from the antipodal region,
  // where the kernel vanishes and per-entry relative MC error diverges
  Matrix x = gaussian_matrix(eng, d, t);
  x.array() += 2.0;
  const FeatureWeights u = sample_feature_weights(n, d, 2.0, 808);
  const Matrix phi = relu_features(u, x).phi;
  Matrix mc = Matrix::Zero(t, t);
  mc.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose(), 1.0 / n);
  mc.triangularView<Eigen::StrictlyUpper>() = mc.transpose();

  const Matrix kernel = relu_kernel(x, u.sigma_u_sq / u.fan_in);
  double worst = 0.0;
  for (Index a = 0; a < t; ++a)
    for (Index b = 0; b < t; ++b)
      worst = std::max(worst, std::abs(mc(a, b) - kernel(a, b)) / kernel(a, b));
  CHECK(worst < 0.02);
}

TEST_CASE("fitted exponent recovers the generating alpha") {
  const int m = 200;
  for (double alpha : {0.7, 1.0}) {
    const Spectrum s = build_spectrum(m, alpha, 1.0);
    const Matrix x = sample_latents(s, 4 * m, 4242);
    const auto eigs = covariance_spectrum(x);
    const SpectrumFit fit = fit_power_law(eigs, 10, m / 2);
    CHECK(std::abs(fit.alpha_hat - alpha) / alpha < 0.10);
  }
}

TEST_CASE("nn distance scales as T^(-1/2) on the unit square") {
  auto square = [](int t, std::uint64_t seed) {
    RandomEngine eng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix x(2, t);
    for (int c = 0; c < t; ++c) {
      x(0, c) = unif(eng);
      x(1, c) = unif(eng);
    }
    return x;
  };
  const DimensionEstimate est =
      estimate_intrinsic_dimension(square, {100, 1000, 10000}, 3, 5);
  CHECK(std::abs(est.slope + 0.5) < 0.05);
  CHECK(std::abs(est.d_int - 2.0) / 2.0 < 0.15);
}

TEST_CASE("intrinsic dimension of the unit interval") {
  auto interval = [](int t, std::uint64_t seed) {
    RandomEngine eng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix x(1, t);
    for (int c = 0; c < t; ++c) x(0, c) = unif(eng);
    return x;
  };
  const DimensionEstimate est =
      estimate_intrinsic_dimension(interval, {200, 600, 2000, 6000}, 3, 9);
  CHECK(std::abs(est.d_int - 1.0) < 0.15);
}

TEST_CASE("power-law latents: d_int halves when alpha doubles") {
  auto sampler_for = [](double alpha) {
    return [alpha](int t, std::uint64_t seed) {
      return sample_latents(build_spectrum(1000, alpha, 1.0), t, seed);
    };
  };
  const std::vector<int> sizes = {200, 500, 1200, 3000};
  const DimensionEstimate d1 =
      estimate_intrinsic_dimension(sampler_for(1.0), sizes, 3, 11);
  const DimensionEstimate d2 =
      estimate_intrinsic_dimension(sampler_for(2.0), sizes, 3, 11);
  const double ratio = d1.d_int / d2.d_int;
  CHECK(std::abs(ratio - 2.0) / 2.0 < 0.2);
}
