#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "scalinglab/spectrum.hpp"
#include "scalinglab/types.hpp"

namespace scalinglab {

enum class DeltaRegime { Under, Over, Coincident, SuperLatent };
enum class DeltaOrder { Full, MinusOne, Zero };

struct DeltaSolution {
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  DeltaRegime regime = DeltaRegime::Under;
  DeltaOrder order = DeltaOrder::Full;
};

namespace detail {

inline std::vector<double> positive_eigenvalues(const Spectrum& spectrum) {
  std::vector<double> lam;
  lam.reserve(static_cast<std::size_t>(spectrum.size()));
  for (int i = 1; i <= spectrum.size(); ++i) {
    const double v = spectrum.value(i);
    if (v > 0.0) lam.push_back(v);
  }
  return lam;
}

inline DeltaRegime regime_for(int scale, int latent) {
  if (scale < latent) return DeltaRegime::Under;
  if (scale == latent) return DeltaRegime::Coincident;
  return DeltaRegime::SuperLatent;
}

// Bisection on a continuous function with f(lo) and f(hi) of opposite sign.
// Both residual functions used below are strictly monotone, so the root is
// unique and bisection cannot fail.
template <typename F>
inline double bisect(const F& f, double lo, double hi, double rel_tol, int max_iter,
                     int* iterations) {
  double flo = f(lo);
  int it = 0;
  double mid = 0.5 * (lo + hi);
  while (it < max_iter) {
    mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;  // bracket at machine resolution
    const double fm = f(mid);
    if ((fm <= 0.0) == (flo <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    ++it;
    const double tol = std::max(rel_tol, 4.0 * std::numeric_limits<double>::epsilon());
    if (hi - lo <= tol * std::abs(mid)) break;
  }
  if (iterations) *iterations = it;
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Solves Delta = sum_i lambda_i / (gamma + D lambda_i / (1 + Delta)) for the
/// finite-ridge trace of covariance times averaged resolvent.
inline DeltaSolution solve_delta_full(const Spectrum& spectrum, int scale, double gamma,
                                      double rel_tol = 1e-12, int max_iter = 200) {
  require_domain(scale >= 1, "solve_delta_full: D must be >= 1");
  require_domain(gamma > 0.0, "solve_delta_full: gamma must be > 0");
  const std::vector<double> lam = detail::positive_eigenvalues(spectrum);
  DeltaSolution sol;
  sol.order = DeltaOrder::Full;
  sol.regime = detail::regime_for(scale, static_cast<int>(lam.size()));
  if (lam.empty()) return sol;

  const double d = static_cast<double>(scale);
  auto rhs = [&](double delta) {
    double sum = 0.0;
    for (double v : lam) sum += v / (gamma + d * v / (1.0 + delta));
    return sum;
  };
  auto f = [&](double delta) { return delta - rhs(delta); };

  double trace = 0.0;
  for (auto it = lam.rbegin(); it != lam.rend(); ++it) trace += *it;
  const double hi = trace / gamma;
  if (f(hi) < 0.0) throw SolverError("solve_delta_full: bracket failure");
  sol.value = detail::bisect(f, 0.0, hi, rel_tol, max_iter, &sol.iterations);
  sol.residual = f(sol.value);
  if (std::abs(sol.residual) > 1e-10 * (1.0 + sol.value))
    throw SolverError("solve_delta_full: no convergence, residual " +
                      std::to_string(sol.residual));
  return sol;
}

/// Unique positive root of 1 = sum_I 1/(D + Delta/lambda_I); zero when D
/// reaches the number of nonzero eigenvalues.
inline DeltaSolution delta_minus_one_numeric(const Spectrum& spectrum, int scale,
                                             double rel_tol = 1e-12, int max_iter = 200) {
  require_domain(scale >= 1, "delta_minus_one_numeric: D must be >= 1");
  const std::vector<double> lam = detail::positive_eigenvalues(spectrum);
  const int m_pos = static_cast<int>(lam.size());
  DeltaSolution sol;
  sol.order = DeltaOrder::MinusOne;
  sol.regime = detail::regime_for(scale, m_pos);
  if (scale >= m_pos) return sol;  // resolvent has no 1/gamma pole

  const double d = static_cast<double>(scale);
  auto g = [&](double delta) {
    double sum = 0.0;
    for (double v : lam) sum += 1.0 / (d + delta / v);
    return sum - 1.0;
  };
  const double hi = static_cast<double>(m_pos) * lam.front();
  if (!(g(0.0) > 0.0) || !(g(hi) < 0.0))
    throw SolverError("delta_minus_one_numeric: bracket failure");
  sol.value = detail::bisect(g, 0.0, hi, rel_tol, max_iter, &sol.iterations);
  sol.residual = g(sol.value);
  if (std::abs(sol.residual) > 1e-10)
    throw SolverError("delta_minus_one_numeric: no convergence, residual " +
                      std::to_string(sol.residual));
  return sol;
}

/// k(alpha) = [ (pi/(1+alpha)) / sin(pi/(1+alpha)) ]^(1+alpha).
inline double k_constant(double alpha) {
  require_domain(alpha > 0.0, "k_constant: alpha must be > 0");
  const double x = M_PI / (1.0 + alpha);
  return std::pow(x / std::sin(x), 1.0 + alpha);
}

/// Interpolating closed form for the 1/gamma coefficient on a power-law
/// spectrum; exactly zero once D reaches the latent size.
inline double delta_minus_one_closed(int scale, int latent, double alpha,
                                     double lambda_max) {
  require_domain(scale >= 1 && latent >= 1, "delta_minus_one_closed: D, M must be >= 1");
  require_domain(alpha > 0.0 && lambda_max > 0.0,
                 "delta_minus_one_closed: alpha, lambda_max must be > 0");
  if (scale >= latent) return 0.0;
  const double d = static_cast<double>(scale), m = static_cast<double>(latent);
  const double k = k_constant(alpha);
  const double scaling = k * (std::pow(m / d, alpha) - 1.0);
  const double coincident = (2.0 + alpha * (1.0 - k)) * (1.0 - d / m);
  return lambda_max / std::pow(m, alpha) * (scaling + coincident);
}

/// Constant-order coefficient of the ridgeless expansion on a power-law
/// spectrum.  Leading order of the coincident expansion only; the crossover
/// region carries a small known error.
inline double delta_zero(int scale, int latent, double alpha) {
  require_domain(scale >= 1 && latent >= 1, "delta_zero: D, M must be >= 1");
  require_domain(alpha > 0.0, "delta_zero: alpha must be > 0");
  if (scale == latent) throw PoleError("delta_zero: pole at D = M");
  const double d = static_cast<double>(scale), m = static_cast<double>(latent);
  if (scale < latent) return alpha + 1.0 / (m / d - 1.0);
  return 1.0 / (d / m - 1.0);
}

/// Constant-order coefficient for the projected (truncated) spectrum: the
/// four-case table in (T, N, M).
inline double delta_zero_projected(int t, int n, int latent, double alpha) {
  require_domain(t >= 1 && n >= 1 && latent >= 1,
                 "delta_zero_projected: scales must be >= 1");
  require_domain(alpha > 0.0, "delta_zero_projected: alpha must be > 0");
  const double td = static_cast<double>(t), nd = static_cast<double>(n),
               md = static_cast<double>(latent);
  if (n < latent) {
    if (t == n) throw PoleError("delta_zero_projected: pole at T = N");
    if (t < n) return alpha + 1.0 / (nd / td - 1.0);
    return 1.0 / (td / nd - 1.0);
  }
  if (n == latent) throw PoleError("delta_zero_projected: pole at N = M");
  if (t == latent) throw PoleError("delta_zero_projected: pole at T = M");
  if (t < latent) return alpha + 1.0 / (md / td - 1.0);
  return 1.0 / (td / md - 1.0);
}

/// Noise contribution to the averaged test loss: (sigma_eps^2 / 2) * Delta_0.
inline double noise_loss(int t, int n, int latent, double alpha, double sigma_eps_sq) {
  require_domain(sigma_eps_sq >= 0.0, "noise_loss: sigma_eps_sq must be >= 0");
  if (sigma_eps_sq == 0.0) return 0.0;
  return 0.5 * sigma_eps_sq * delta_zero_projected(t, n, latent, alpha);
}

struct TheoryLoss {
  double total = 0.0;
  double label_term = 0.0;
  double noise_term = 0.0;
  bool pole = false;  // N = T divergence of the ridgeless formula
};

/// Noiseless averaged test loss of the random-feature model,
///   (sigma_w^2 / 2M) * Delta_-1(min(N,T), M) / (1 - min/max),
/// symmetric under N <-> T.  The N = T pole is reported explicitly rather
/// than as a large float.
inline TheoryLoss label_loss(int t, int n, const Spectrum& spectrum, double sigma_w_sq) {
  require_domain(t >= 1 && n >= 1, "label_loss: N, T must be >= 1");
  require_domain(sigma_w_sq >= 0.0, "label_loss: sigma_w_sq must be >= 0");
  TheoryLoss loss;
  if (t == n) {
    loss.pole = true;
    loss.total = loss.label_term = std::numeric_limits<double>::infinity();
    return loss;
  }
  const int lo = std::min(n, t), hi = std::max(n, t);
  const double delta = delta_minus_one_numeric(spectrum, lo).value;
  const double m = static_cast<double>(spectrum.size());
  loss.label_term = 0.5 * sigma_w_sq / m * delta /
                    (1.0 - static_cast<double>(lo) / static_cast<double>(hi));
  loss.total = loss.label_term;
  return loss;
}

/// Infinite-feature limit of the noiseless loss: nonzero only below the
/// latent size, where it follows the closed-form Delta_-1.
inline double breakdown_loss(int t, int latent, double alpha, double lambda_max,
                             double sigma_w_sq) {
  require_domain(t >= 1 && latent >= 1, "breakdown_loss: T, M must be >= 1");
  if (t >= latent) return 0.0;
  return 0.5 * sigma_w_sq / static_cast<double>(latent) *
         delta_minus_one_closed(t, latent, alpha, lambda_max);
}

/// Exact ridgeless test loss of a plain linear model on isotropic data.
inline double mp_linear_loss(int n, int t, double sigma_x_sq, double sigma_w_sq,
                             double sigma_eps_sq) {
  require_domain(n >= 1 && t >= 1, "mp_linear_loss: N, T must be >= 1");
  if (n == t) throw PoleError("mp_linear_loss: pole at N = T");
  const double nd = static_cast<double>(n), td = static_cast<double>(t);
  if (t < n)
    return 0.5 * (sigma_w_sq * sigma_x_sq * (1.0 - td / nd) +
                  sigma_eps_sq / (nd / td - 1.0));
  return 0.5 * sigma_eps_sq / (td / nd - 1.0);
}

/// Ridgeless test loss of a plain linear model on power-law data:
/// (1/2)[(sigma_w^2/N) Delta_-1(T, N) + sigma_eps^2 Delta_0(T, N)].
inline double pl_linear_loss(int n, int t, double alpha, double lambda_max,
                             double sigma_w_sq, double sigma_eps_sq) {
  require_domain(n >= 1 && t >= 1, "pl_linear_loss: N, T must be >= 1");
  if (n == t) throw PoleError("pl_linear_loss: pole at N = T");
  const double label =
      sigma_w_sq / static_cast<double>(n) * delta_minus_one_closed(t, n, alpha, lambda_max);
  const double noise = sigma_eps_sq > 0.0 ? sigma_eps_sq * delta_zero(t, n, alpha) : 0.0;
  return 0.5 * (label + noise);
}

}  // namespace scalinglab
