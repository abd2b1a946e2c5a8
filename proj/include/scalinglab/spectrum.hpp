#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "scalinglab/types.hpp"

namespace scalinglab {

/// Eigenvalues of a latent covariance, sorted descending.  Either the
/// parametric power law lambda_I = lambda_max * I^-(1+alpha), I = 1..M,
/// or an explicit list.  Power-law spectra are evaluated lazily so that
/// very large M stays cheap.
class Spectrum {
 public:
  enum class Kind { PowerLaw, Explicit };

  static Spectrum power_law(int size, double alpha, double lambda_max) {
    require_domain(size >= 1, "Spectrum: M must be >= 1");
    require_domain(alpha > 0.0, "Spectrum: alpha must be > 0");
    require_domain(lambda_max > 0.0, "Spectrum: lambda_max must be > 0");
    Spectrum s;
    s.kind_ = Kind::PowerLaw;
    s.size_ = size;
    s.alpha_ = alpha;
    s.lambda_max_ = lambda_max;
    return s;
  }

  static Spectrum isotropic(int size, double variance) {
    require_domain(size >= 1, "Spectrum: M must be >= 1");
    require_domain(variance >= 0.0, "Spectrum: variance must be >= 0");
    return from_values(std::vector<double>(static_cast<std::size_t>(size), variance));
  }

  static Spectrum from_values(std::vector<double> values) {
    require_domain(!values.empty(), "Spectrum: empty eigenvalue list");
    for (std::size_t i = 0; i < values.size(); ++i) {
      require_domain(std::isfinite(values[i]) && values[i] >= 0.0,
                     "Spectrum: eigenvalues must be finite and >= 0");
      if (i > 0)
        require_domain(values[i] <= values[i - 1],
                       "Spectrum: explicit eigenvalues must be sorted descending");
    }
    Spectrum s;
    s.kind_ = Kind::Explicit;
    s.size_ = static_cast<int>(values.size());
    s.values_ = std::move(values);
    if (!s.values_.empty()) s.lambda_max_ = s.values_.front();
    return s;
  }

  Kind kind() const { return kind_; }
  int size() const { return size_; }
  double alpha() const { return alpha_; }
  double lambda_max() const { return lambda_max_; }

  /// lambda_I for 1-based index I.
  double value(int index) const {
    require_domain(index >= 1 && index <= size_, "Spectrum: index out of range");
    if (kind_ == Kind::PowerLaw)
      return lambda_max_ * std::pow(static_cast<double>(index), -(1.0 + alpha_));
    return values_[static_cast<std::size_t>(index - 1)];
  }

  double trace() const {
    double sum = 0.0;
    if (kind_ == Kind::PowerLaw) {
      // Sum small-to-large for accuracy.
      for (int i = size_; i >= 1; --i)
        sum += lambda_max_ * std::pow(static_cast<double>(i), -(1.0 + alpha_));
    } else {
      for (auto it = values_.rbegin(); it != values_.rend(); ++it) sum += *it;
    }
    return sum;
  }

  /// Number of strictly positive eigenvalues.
  int positive_count() const {
    if (kind_ == Kind::PowerLaw) return size_;
    auto it = std::find_if(values_.begin(), values_.end(),
                           [](double v) { return v <= 0.0; });
    return static_cast<int>(it - values_.begin());
  }

  Vector as_vector() const {
    Vector v(size_);
    for (int i = 1; i <= size_; ++i) v(i - 1) = value(i);
    return v;
  }

 private:
  Spectrum() = default;
  Kind kind_ = Kind::PowerLaw;
  int size_ = 0;
  double alpha_ = 0.0;
  double lambda_max_ = 0.0;
  std::vector<double> values_;
};

}  // namespace scalinglab
