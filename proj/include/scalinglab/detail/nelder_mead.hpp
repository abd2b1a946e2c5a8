#pragma once

#include <algorithm>
#include <functional>
#include <vector>

namespace scalinglab::detail {

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
};

// Downhill simplex minimizer; good enough for the low-dimensional
// log-residual objectives used by the phenomenological fitter.
inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
    const std::vector<double>& step, int max_iter = 2000, double tol = 1e-13) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step[i];
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

  auto order = [&]() {
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> v2;
    for (auto i : idx) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };

  int it = 0;
  for (; it < max_iter; ++it) {
    order();
    if (values[n] - values[0] <= tol * (1.0 + std::abs(values[0]))) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;

    auto blend = [&](double coeff) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j)
        p[j] = centroid[j] + coeff * (simplex[n][j] - centroid[j]);
      return p;
    };

    std::vector<double> reflected = blend(-1.0);
    const double fr = f(reflected);
    if (fr < values[0]) {
      std::vector<double> expanded = blend(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[n] = expanded;
        values[n] = fe;
      } else {
        simplex[n] = reflected;
        values[n] = fr;
      }
      continue;
    }
    if (fr < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = fr;
      continue;
    }
    std::vector<double> contracted = blend(0.5);
    const double fc = f(contracted);
    if (fc < values[n]) {
      simplex[n] = contracted;
      values[n] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {  // shrink toward the best vertex
      for (std::size_t j = 0; j < n; ++j)
        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
      values[i] = f(simplex[i]);
    }
  }
  order();
  return NelderMeadResult{simplex[0], values[0], it};
}

}  // namespace scalinglab::detail
