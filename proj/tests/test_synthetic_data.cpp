#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scalinglab/synthetic_data.hpp"

using namespace scalinglab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("build_spectrum evaluates the power law at each index") {
  const Spectrum s = build_spectrum(2, 1.0, 1.0);
  CHECK_THAT(s.value(1), WithinAbs(1.0, 1e-15));
  CHECK_THAT(s.value(2), WithinAbs(0.25, 1e-15));

  const Spectrum single = build_spectrum(1, 3.0, 5.0);
  CHECK_THAT(single.value(1), WithinAbs(5.0, 1e-15));
}

TEST_CASE("build_spectrum trace matches the direct summation oracle") {
  const int m = 1000;
  const Spectrum s = build_spectrum(m, 1.0, 1.0);
  double oracle = 0.0;
  for (int i = m; i >= 1; --i) oracle += 1.0 / (static_cast<double>(i) * i);
  CHECK_THAT(s.trace(), WithinRel(oracle, 1e-12));
  const double basel = M_PI * M_PI / 6.0;
  CHECK(std::abs(s.trace() - basel) / basel < 0.002);
}

TEST_CASE("build_spectrum rejects non-positive arguments") {
  CHECK_THROWS_AS(build_spectrum(0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(build_spectrum(10, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(build_spectrum(10, 1.0, 0.0), DomainError);
}

TEST_CASE("power-law spectra satisfy value(I)/value(2I) = 2^(1+alpha)") {
  for (double alpha : {0.5, 1.0, 2.3}) {
    const Spectrum s = build_spectrum(256, alpha, 3.0);
    const double expected = std::pow(2.0, 1.0 + alpha);
    for (int i = 1; 2 * i <= s.size(); i *= 2)
      CHECK_THAT(s.value(i) / s.value(2 * i), WithinRel(expected, 1e-12));
  }
}

TEST_CASE("explicit spectra validate ordering and sign") {
  CHECK_THROWS_AS(Spectrum::from_values({1.0, 2.0}), DomainError);
  CHECK_THROWS_AS(Spectrum::from_values({1.0, -0.5}), DomainError);
  const Spectrum s = Spectrum::from_values({3.0, 1.0, 0.0});
  CHECK(s.positive_count() == 2);
  CHECK_THAT(s.trace(), WithinAbs(4.0, 1e-15));
}

TEST_CASE("alpha_from_beta") {
  CHECK_THAT(alpha_from_beta(1.5), WithinAbs(1.0, 1e-15));
  CHECK_THAT(alpha_from_beta(4.0 / 3.0), WithinRel(2.0, 1e-12));
  CHECK(alpha_from_beta(1.999) < 0.01);
  CHECK(alpha_from_beta(1.999) > 0.0);
  CHECK_THROWS_AS(alpha_from_beta(1.0), DomainError);
  CHECK_THROWS_AS(alpha_from_beta(2.0), DomainError);
  CHECK_THROWS_AS(alpha_from_beta(2.5), DomainError);
}

TEST_CASE("sample_latents is deterministic and respects degenerate spectra") {
  const Spectrum s = build_spectrum(8, 1.0, 1.0);
  const Matrix a = sample_latents(s, 16, 99);
  const Matrix b = sample_latents(s, 16, 99);
  CHECK(a == b);
  CHECK(a != sample_latents(s, 16, 100));

  const Spectrum zeros = Spectrum::from_values(std::vector<double>(4, 0.0));
  CHECK(sample_latents(zeros, 10, 1).isZero(0.0));
}

TEST_CASE("sample_teacher determinism and zero variance") {
  const TeacherWeights w1 = sample_teacher(20, 2, 1.0, 5);
  const TeacherWeights w2 = sample_teacher(20, 2, 1.0, 5);
  CHECK(w1.w == w2.w);
  CHECK(sample_teacher(20, 2, 0.0, 5).w.isZero(0.0));
}

TEST_CASE("make_labels matches hand-computed products") {
  TeacherWeights selector{Matrix::Zero(1, 3), 1.0};
  selector.w(0, 0) = 1.0;
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  CHECK(make_labels(selector, x) == x.row(0));

  CHECK(make_labels(selector, Matrix::Zero(3, 4)).isZero(0.0));

  TeacherWeights w{Matrix(1, 2), 1.0};
  w.w << 1, 2;
  Matrix v(2, 1);
  v << 3, 4;
  CHECK_THAT(make_labels(w, v)(0, 0), WithinAbs(11.0, 1e-15));

  CHECK_THROWS_AS(make_labels(w, Matrix::Zero(3, 1)), ShapeError);
}

TEST_CASE("make_labels is linear to machine precision") {
  RandomEngine eng(3);
  TeacherWeights w{gaussian_matrix(eng, 2, 6), 1.0};
  const Matrix x1 = gaussian_matrix(eng, 6, 5);
  const Matrix x2 = gaussian_matrix(eng, 6, 5);
  const double a = 1.7, b = -0.3;
  const Matrix lhs = make_labels(w, a * x1 + b * x2);
  const Matrix rhs = a * make_labels(w, x1) + b * make_labels(w, x2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sample_noise zero variance and determinism") {
  CHECK(sample_noise(2, 5, NoiseModel{0.0}, 1).isZero(0.0));
  CHECK(sample_noise(1, 9, NoiseModel{0.5}, 7) == sample_noise(1, 9, NoiseModel{0.5}, 7));
}
