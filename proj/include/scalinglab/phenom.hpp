#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "scalinglab/detail/nelder_mead.hpp"
#include "scalinglab/ridge_regression.hpp"
#include "scalinglab/rmt_theory.hpp"
#include "scalinglab/types.hpp"

namespace scalinglab {

// Closed-form surrogate models for the test loss as a function of the
// feature count N, training set size T, and latent size M, plus a
// least-squares fitter that recovers their parameters from measured runs.

enum class PhenomModel { Original, Simplified, Improved, Breakdown, NoiseBreakdown };

struct PhenomenologicalFit {
  PhenomModel model = PhenomModel::Simplified;
  double L0 = 1.0;
  double alpha_N = 1.0;
  double alpha_T = 1.0;      // simplified/improved enforce alpha_N == alpha_T
  double N_c = 1.0;
  double T_c = 1.0;
  double latent_size = 0.0;  // fitted latent scale (improved/breakdown/noise_breakdown)
  double bump_c = 1.0;       // noise_breakdown crossover constant
  double residual = 0.0;     // RMS log-residual of the fit
};

inline const char* phenom_model_name(PhenomModel m) {
  switch (m) {
    case PhenomModel::Original: return "original";
    case PhenomModel::Simplified: return "simplified";
    case PhenomModel::Improved: return "improved";
    case PhenomModel::Breakdown: return "breakdown";
    case PhenomModel::NoiseBreakdown: return "noise_breakdown";
  }
  return "?";
}

inline PhenomModel phenom_model_from_name(const std::string& name) {
  if (name == "original") return PhenomModel::Original;
  if (name == "simplified") return PhenomModel::Simplified;
  if (name == "improved") return PhenomModel::Improved;
  if (name == "breakdown") return PhenomModel::Breakdown;
  if (name == "noise_breakdown") return PhenomModel::NoiseBreakdown;
  throw DomainError("unknown phenomenological model '" + name + "'");
}

/// Evaluates the chosen surrogate at (N, T) with latent scale M.
inline double phenom_loss(const PhenomenologicalFit& fit, double n, double t, double m) {
  require_domain(n > 0.0 && t > 0.0, "phenom_loss: N, T must be > 0");
  switch (fit.model) {
    case PhenomModel::Original: {
      require_domain(fit.alpha_T != 0.0, "phenom_loss: alpha_T must be nonzero");
      const double inner =
          std::pow(fit.N_c / n, fit.alpha_N / fit.alpha_T) + fit.T_c / t;
      return std::pow(inner, fit.alpha_T);
    }
    case PhenomModel::Simplified: {
      const double alpha = fit.alpha_T;
      return fit.L0 * std::pow(1.0 / n + 1.0 / t, alpha);
    }
    case PhenomModel::Improved: {
      require_domain(m > 0.0, "phenom_loss: improved model needs M > 0");
      const double alpha = fit.alpha_T;
      return fit.L0 *
             (std::pow(1.0 / n + 1.0 / t, alpha) - std::pow(1.0 / m, alpha));
    }
    case PhenomModel::Breakdown: {
      require_domain(m > 0.0, "phenom_loss: breakdown model needs M > 0");
      const double alpha = fit.alpha_T;
      const double k = k_constant(alpha);
      const double m_term = std::pow(m, -alpha);
      if (n <= m && t <= m)
        return fit.L0 * (std::pow(1.0 / n + 1.0 / t, alpha) - m_term);
      if (n > m && t > m) return 0.0;
      const double small = std::min(n, t);  // the scale still below M
      return fit.L0 * (std::pow(small, -alpha) - m_term) +
             fit.L0 / k * m_term * (2.0 + alpha * (1.0 - k)) * (1.0 - small / m);
    }
    case PhenomModel::NoiseBreakdown: {
      require_domain(m > 0.0 && fit.bump_c > 0.0,
                     "phenom_loss: noise_breakdown needs M > 0 and bump_c > 0");
      const double alpha = fit.alpha_T;
      const double envelope = 1.0 / (m / (t + alpha * m) + t / m);
      const double bump = 1.0 / (1.0 + std::exp(-(m / t + t / m) / fit.bump_c));
      return fit.L0 * envelope * bump;
    }
  }
  throw DomainError("phenom_loss: unknown model");
}

namespace detail {

struct PhenomPoint {
  double n, t, log_loss;
};

inline std::vector<PhenomPoint> phenom_points(const std::vector<LossRecord>& records) {
  std::vector<PhenomPoint> pts;
  for (const auto& r : records) {
    if (!(r.test_loss > 0.0) || !std::isfinite(r.test_loss)) continue;
    if (r.n_features <= 0 || r.n_train <= 0) continue;
    pts.push_back({static_cast<double>(r.n_features), static_cast<double>(r.n_train),
                   std::log(r.test_loss)});
  }
  return pts;
}

// Amplitude solved in closed form given the shape values f_i > 0:
// log L0 = mean(log loss_i - log f_i).  Returns SSE of log residuals.
template <typename Shape>
inline double profiled_sse(const std::vector<PhenomPoint>& pts, const Shape& shape,
                           double* log_l0_out) {
  double mean = 0.0;
  std::vector<double> diffs(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double f = shape(pts[i]);
    if (!(f > 0.0) || !std::isfinite(f)) return 1e100;
    diffs[i] = pts[i].log_loss - std::log(f);
    mean += diffs[i];
  }
  mean /= static_cast<double>(pts.size());
  double sse = 0.0;
  for (double d : diffs) sse += (d - mean) * (d - mean);
  if (log_l0_out) *log_l0_out = mean;
  return sse;
}

}  // namespace detail

/// Least squares on log-loss.  Requires at least twice as many usable records
/// as free parameters and at least a decade of spread in T or N.
inline PhenomenologicalFit fit_phenomenological(const std::vector<LossRecord>& records,
                                                PhenomModel model) {
  auto pts = detail::phenom_points(records);
  int free_params = 0;
  switch (model) {
    case PhenomModel::Simplified: free_params = 2; break;
    case PhenomModel::Improved: free_params = 3; break;
    case PhenomModel::Original: free_params = 4; break;
    case PhenomModel::Breakdown: free_params = 3; break;
    case PhenomModel::NoiseBreakdown: free_params = 4; break;
  }
  if (static_cast<int>(pts.size()) < 2 * free_params)
    throw FitError("fit_phenomenological: need at least " +
                   std::to_string(2 * free_params) + " usable records, got " +
                   std::to_string(pts.size()));
  double min_n = 1e300, max_n = 0, min_t = 1e300, max_t = 0;
  for (const auto& p : pts) {
    min_n = std::min(min_n, p.n);
    max_n = std::max(max_n, p.n);
    min_t = std::min(min_t, p.t);
    max_t = std::max(max_t, p.t);
  }
  if (max_n / min_n < 10.0 && max_t / min_t < 10.0)
    throw FitError("fit_phenomenological: records must span at least a decade in T or N");

  PhenomenologicalFit fit;
  fit.model = model;

  // Simplified model is linear in (log L0, alpha); it also seeds the others.
  auto fit_simplified = [&]() {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(pts.size());
    for (const auto& p : pts) {
      const double x = std::log(1.0 / p.n + 1.0 / p.t);
      sx += x;
      sy += p.log_loss;
      sxx += x * x;
      sxy += x * p.log_loss;
    }
    const double denom = n * sxx - sx * sx;
    if (!(denom > 0.0)) throw FitError("fit_phenomenological: degenerate design");
    const double alpha = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - alpha * sx) / n;
    double sse = 0.0;
    for (const auto& p : pts) {
      const double x = std::log(1.0 / p.n + 1.0 / p.t);
      const double r = p.log_loss - (intercept + alpha * x);
      sse += r * r;
    }
    PhenomenologicalFit s;
    s.model = PhenomModel::Simplified;
    s.alpha_N = s.alpha_T = alpha;
    s.L0 = std::exp(intercept);
    s.N_c = s.T_c = std::pow(s.L0, 1.0 / std::max(alpha, 1e-9));
    s.residual = std::sqrt(sse / n);
    return s;
  };

  const PhenomenologicalFit seed = fit_simplified();
  if (model == PhenomModel::Simplified) return seed;

  const double scale_max = std::max(max_n, max_t);
  auto finish = [&](PhenomenologicalFit f, double sse) {
    f.residual = std::sqrt(sse / static_cast<double>(pts.size()));
    return f;
  };

  if (model == PhenomModel::Improved || model == PhenomModel::Breakdown) {
    // Parameters (alpha, log M); L0 profiled out in closed form.
    auto shape_at = [&](double alpha, double m) {
      PhenomenologicalFit probe;
      probe.model = model;
      probe.alpha_N = probe.alpha_T = alpha;
      probe.L0 = 1.0;
      return [probe, m](const detail::PhenomPoint& p) {
        return phenom_loss(probe, p.n, p.t, m);
      };
    };
    auto objective = [&](const std::vector<double>& x) {
      const double alpha = x[0], m = std::exp(x[1]);
      if (!(alpha > 0.01) || alpha > 20.0) return 1e100;
      if (m <= scale_max) return 1e100;
      return detail::profiled_sse(pts, shape_at(alpha, m), nullptr);
    };
    double best = 1e300;
    std::vector<double> best_x;
    for (double factor : {2.0, 4.0, 10.0}) {
      auto r = detail::nelder_mead(objective,
                                   {std::max(seed.alpha_T, 0.05), std::log(factor * scale_max)},
                                   {0.25, std::log(2.0)}, 3000);
      if (r.value < best) {
        best = r.value;
        best_x = r.x;
      }
    }
    if (best_x.empty() || best >= 1e100)
      throw FitError("fit_phenomenological: improved/breakdown fit failed to converge");
    fit.alpha_N = fit.alpha_T = best_x[0];
    fit.latent_size = std::exp(best_x[1]);
    double log_l0 = 0.0;
    const double sse =
        detail::profiled_sse(pts, shape_at(fit.alpha_N, fit.latent_size), &log_l0);
    fit.L0 = std::exp(log_l0);
    fit.N_c = fit.T_c = std::pow(fit.L0, 1.0 / std::max(fit.alpha_T, 1e-9));
    return finish(fit, sse);
  }

  if (model == PhenomModel::Original) {
    auto objective = [&](const std::vector<double>& x) {
      PhenomenologicalFit probe;
      probe.model = PhenomModel::Original;
      probe.alpha_N = x[0];
      probe.alpha_T = x[1];
      probe.N_c = std::exp(x[2]);
      probe.T_c = std::exp(x[3]);
      if (!(probe.alpha_N > 0.01) || !(probe.alpha_T > 0.01)) return 1e100;
      double sse = 0.0;
      for (const auto& p : pts) {
        const double v = phenom_loss(probe, p.n, p.t, 0.0);
        if (!(v > 0.0) || !std::isfinite(v)) return 1e100;
        const double r = p.log_loss - std::log(v);
        sse += r * r;
      }
      return sse;
    };
    const double c0 = std::log(std::max(seed.N_c, 1e-9));
    auto r = detail::nelder_mead(
        objective, {seed.alpha_T, seed.alpha_T, c0, c0},
        {0.2, 0.2, std::log(3.0), std::log(3.0)}, 4000);
    if (r.value >= 1e100)
      throw FitError("fit_phenomenological: original-model fit failed to converge");
    fit.alpha_N = r.x[0];
    fit.alpha_T = r.x[1];
    fit.N_c = std::exp(r.x[2]);
    fit.T_c = std::exp(r.x[3]);
    fit.L0 = std::pow(fit.T_c, fit.alpha_T);
    return finish(fit, r.value);
  }

  // NoiseBreakdown: parameters (alpha, log M, log c); amplitude profiled out.
  auto shape_at = [&](double alpha, double m, double c) {
    PhenomenologicalFit probe;
    probe.model = PhenomModel::NoiseBreakdown;
    probe.alpha_N = probe.alpha_T = alpha;
    probe.L0 = 1.0;
    probe.bump_c = c;
    return [probe, m](const detail::PhenomPoint& p) {
      return phenom_loss(probe, p.n, p.t, m);
    };
  };
  auto objective = [&](const std::vector<double>& x) {
    const double alpha = x[0], m = std::exp(x[1]), c = std::exp(x[2]);
    if (!(alpha > 0.01) || alpha > 20.0) return 1e100;
    return detail::profiled_sse(pts, shape_at(alpha, m, c), nullptr);
  };
  auto r = detail::nelder_mead(objective,
                               {std::max(seed.alpha_T, 0.05), std::log(scale_max), 0.0},
                               {0.3, std::log(2.0), std::log(2.0)}, 4000);
  if (r.value >= 1e100)
    throw FitError("fit_phenomenological: noise_breakdown fit failed to converge");
  fit.alpha_N = fit.alpha_T = r.x[0];
  fit.latent_size = std::exp(r.x[1]);
  fit.bump_c = std::exp(r.x[2]);
  double log_l0 = 0.0;
  const double sse = detail::profiled_sse(
      pts, shape_at(fit.alpha_T, fit.latent_size, fit.bump_c), &log_l0);
  fit.L0 = std::exp(log_l0);
  return finish(fit, sse);
}

}  // namespace scalinglab
