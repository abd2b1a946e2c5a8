#pragma once

#include <cmath>
#include <cstdint>

#include "scalinglab/random.hpp"
#include "scalinglab/types.hpp"

namespace scalinglab {

struct FeatureWeights {
  Matrix u;  // N x fan_in
  double sigma_u_sq = 1.0;
  int fan_in = 0;
};

/// Random feature weights, entries i.i.d. N(0, sigma_u_sq / fan_in).
inline FeatureWeights sample_feature_weights(int feature_count, int fan_in,
                                             double sigma_u_sq, std::uint64_t seed) {
  require_domain(feature_count >= 1, "sample_feature_weights: N must be >= 1");
  require_domain(fan_in >= 1, "sample_feature_weights: fan_in must be >= 1");
  require_domain(sigma_u_sq >= 0.0, "sample_feature_weights: sigma_u_sq must be >= 0");
  RandomEngine engine(seed);
  const double stddev = std::sqrt(sigma_u_sq / static_cast<double>(fan_in));
  return FeatureWeights{gaussian_matrix(engine, feature_count, fan_in, stddev),
                        sigma_u_sq, fan_in};
}

inline FeatureWeights identity_feature_weights(int dim) {
  require_domain(dim >= 1, "identity_feature_weights: dim must be >= 1");
  return FeatureWeights{Matrix::Identity(dim, dim), 0.0, dim};
}

enum class FeatureProvenance { Linear, Relu };

struct FeatureMatrix {
  Matrix phi;  // N x T
  FeatureProvenance provenance = FeatureProvenance::Linear;
  int feature_count = 0;
  int sample_count = 0;
  int input_dim = 0;
};

inline FeatureMatrix linear_features(const FeatureWeights& weights, const Matrix& x) {
  require_shape(weights.u.cols() == x.rows(),
                "linear_features: fan_in must match input rows");
  FeatureMatrix f;
  f.phi = weights.u * x;
  f.provenance = FeatureProvenance::Linear;
  f.feature_count = static_cast<int>(weights.u.rows());
  f.sample_count = static_cast<int>(x.cols());
  f.input_dim = static_cast<int>(x.rows());
  return f;
}

/// One-hidden-layer map phi = max(0, u x), no bias term.
inline FeatureMatrix relu_features(const FeatureWeights& weights, const Matrix& x) {
  require_shape(weights.u.cols() == x.rows(),
                "relu_features: fan_in must match input rows");
  FeatureMatrix f;
  f.phi = (weights.u * x).cwiseMax(0.0);
  f.provenance = FeatureProvenance::Relu;
  f.feature_count = static_cast<int>(weights.u.rows());
  f.sample_count = static_cast<int>(x.cols());
  f.input_dim = static_cast<int>(x.rows());
  return f;
}

/// Infinite-feature kernel of the ReLU map on columns of x:
///   K[a,b] = (v / 2pi) * |x_a| |x_b| * (c * acos(-c) + sqrt(1 - c^2)),
/// where c is the cosine of the angle between the columns and v is the
/// per-component weight variance.  c is clamped into [-1, 1] before acos to
/// absorb round-off; the expression is exact on the closed interval.
inline Matrix relu_kernel(const Matrix& x, double weight_variance) {
  require_domain(weight_variance > 0.0, "relu_kernel: weight variance must be > 0");
  const Index t = x.cols();
  require_domain(t >= 1, "relu_kernel: need at least one column");
  Vector norms = x.colwise().norm();
  for (Index a = 0; a < t; ++a)
    require_domain(norms(a) > 0.0, "relu_kernel: zero-norm column, angle undefined");

  const Matrix gram = x.transpose() * x;
  const double scale = weight_variance / (2.0 * M_PI);
  Matrix kernel(t, t);
  for (Index a = 0; a < t; ++a) {
    for (Index b = 0; b <= a; ++b) {
      double c = gram(a, b) / (norms(a) * norms(b));
      c = std::clamp(c, -1.0, 1.0);
      const double value =
          scale * norms(a) * norms(b) * (c * std::acos(-c) + std::sqrt(1.0 - c * c));
      kernel(a, b) = value;
      kernel(b, a) = value;
    }
  }
  return kernel;
}

}  // namespace scalinglab
