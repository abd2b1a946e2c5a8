#pragma once

#include <cmath>
#include <cstdint>

#include "scalinglab/random.hpp"
#include "scalinglab/spectrum.hpp"
#include "scalinglab/types.hpp"

namespace scalinglab {

// Generative model: latent samples x ~ N(0, Lambda) with Lambda diagonal in
// the latent eigenbasis, labels y = w x from a Gaussian teacher, optional
// i.i.d. Gaussian label noise.

inline Spectrum build_spectrum(int latent_dim, double alpha, double lambda_max) {
  return Spectrum::power_law(latent_dim, alpha, lambda_max);
}

/// Converts the density-tail exponent beta in (1, 2) to the index exponent
/// alpha = (2 - beta) / (beta - 1).
inline double alpha_from_beta(double beta) {
  require_domain(beta > 1.0 && beta < 2.0, "alpha_from_beta: beta must lie in (1, 2)");
  return (2.0 - beta) / (beta - 1.0);
}

/// M x T matrix whose columns are i.i.d. draws from N(0, diag(spectrum)).
inline Matrix sample_latents(const Spectrum& spectrum, int samples,
                             std::uint64_t seed) {
  require_domain(samples >= 1, "sample_latents: T must be >= 1");
  RandomEngine engine(seed);
  Matrix x = gaussian_matrix(engine, spectrum.size(), samples);
  Vector scale(spectrum.size());
  for (int i = 1; i <= spectrum.size(); ++i) scale(i - 1) = std::sqrt(spectrum.value(i));
  x.array().colwise() *= scale.array();
  return x;
}

struct TeacherWeights {
  Matrix w;  // C x M
  double sigma_w_sq = 1.0;
};

/// Teacher entries i.i.d. N(0, sigma_w_sq / M).
inline TeacherWeights sample_teacher(int latent_dim, int out_dim, double sigma_w_sq,
                                     std::uint64_t seed) {
  require_domain(latent_dim >= 1, "sample_teacher: M must be >= 1");
  require_domain(out_dim >= 1, "sample_teacher: C must be >= 1");
  require_domain(sigma_w_sq >= 0.0, "sample_teacher: sigma_w_sq must be >= 0");
  RandomEngine engine(seed);
  const double stddev = std::sqrt(sigma_w_sq / static_cast<double>(latent_dim));
  return TeacherWeights{gaussian_matrix(engine, out_dim, latent_dim, stddev), sigma_w_sq};
}

inline Matrix make_labels(const TeacherWeights& teacher, const Matrix& x) {
  require_shape(teacher.w.cols() == x.rows(),
                "make_labels: teacher columns must match latent rows");
  return teacher.w * x;
}

struct NoiseModel {
  double sigma_eps_sq = 0.0;  // entry variance, no 1/dim normalization
};

inline Matrix sample_noise(int out_dim, int samples, const NoiseModel& noise,
                           std::uint64_t seed) {
  require_domain(out_dim >= 1 && samples >= 1, "sample_noise: C, T must be >= 1");
  require_domain(noise.sigma_eps_sq >= 0.0, "sample_noise: sigma_eps_sq must be >= 0");
  if (noise.sigma_eps_sq == 0.0) return Matrix::Zero(out_dim, samples);
  RandomEngine engine(seed);
  return gaussian_matrix(engine, out_dim, samples, std::sqrt(noise.sigma_eps_sq));
}

}  // namespace scalinglab
