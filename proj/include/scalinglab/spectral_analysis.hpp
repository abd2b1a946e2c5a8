#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "scalinglab/csv.hpp"
#include "scalinglab/random.hpp"
#include "scalinglab/types.hpp"

namespace scalinglab {

/// (1/T) x x^T for a d x T data matrix.
inline Matrix empirical_covariance(const Matrix& data) {
  require_domain(data.rows() >= 1 && data.cols() >= 1,
                 "empirical_covariance: empty data");
  const double inv_t = 1.0 / static_cast<double>(data.cols());
  Matrix cov = Matrix::Zero(data.rows(), data.rows());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(data, inv_t);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return cov;
}

/// All eigenvalues of a symmetric matrix, descending.  Tiny negatives from
/// round-off are clamped to zero.
inline std::vector<double> eigen_spectrum(const Matrix& cov) {
  require_domain(cov.rows() == cov.cols(), "eigen_spectrum: matrix must be square");
  const double scale = cov.norm();
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  require_domain(asym <= 1e-10 * std::max(scale, 1e-300),
                 "eigen_spectrum: input is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw SolverError("eigen_spectrum: eigensolver failed");
  Vector evs = solver.eigenvalues();
  std::vector<double> out(static_cast<std::size_t>(evs.size()));
  const double max_abs = evs.cwiseAbs().maxCoeff();
  const double clamp_tol = 1e-12 * std::max(max_abs, 1e-300);
  for (Index i = 0; i < evs.size(); ++i) {
    double v = evs(evs.size() - 1 - i);  // descending
    if (v < 0.0 && v > -clamp_tol) v = 0.0;
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

/// Spectrum of the empirical covariance of a d x T dataset.  When T < d the
/// nonzero eigenvalues are taken from the T x T Gram matrix (1/T) x^T x,
/// which shares them with the covariance, and the remaining d - T values are
/// zero; this avoids the d^3 eigendecomposition.
inline std::vector<double> covariance_spectrum(const Matrix& data) {
  require_domain(data.rows() >= 1 && data.cols() >= 1,
                 "covariance_spectrum: empty data");
  const Index d = data.rows(), t = data.cols();
  if (t >= d) return eigen_spectrum(empirical_covariance(data));
  const double inv_t = 1.0 / static_cast<double>(t);
  Matrix gram = Matrix::Zero(t, t);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(data.transpose(), inv_t);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  std::vector<double> evs = eigen_spectrum(gram);
  evs.resize(static_cast<std::size_t>(d), 0.0);
  return evs;
}

struct SpectrumFit {
  double alpha_hat = 0.0;   // lambda_I ~ lambda_hat * I^-(1+alpha_hat)
  double lambda_hat = 0.0;  // fitted amplitude at I = 1
  int fit_begin = 0;        // 1-based, inclusive
  int fit_end = 0;
  double residual = 0.0;    // RMS log-residual
};

/// Least-squares line on (log I, log lambda_I) over the 1-based inclusive
/// index range; alpha_hat = -slope - 1.
inline SpectrumFit fit_power_law(const std::vector<double>& eigs, int begin, int end) {
  require_domain(begin >= 1 && end <= static_cast<int>(eigs.size()) && begin <= end,
                 "fit_power_law: invalid fit range");
  const int n = end - begin + 1;
  require_domain(n >= 5, "fit_power_law: fit range must contain at least 5 indices");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = begin; i <= end; ++i) {
    const double lambda = eigs[static_cast<std::size_t>(i - 1)];
    require_domain(lambda > 0.0,
                   "fit_power_law: non-positive eigenvalue at index " + std::to_string(i));
    const double lx = std::log(static_cast<double>(i));
    const double ly = std::log(lambda);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  require_domain(denom > 0.0, "fit_power_law: degenerate index range");
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  double ss = 0;
  for (int i = begin; i <= end; ++i) {
    const double lx = std::log(static_cast<double>(i));
    const double r = std::log(eigs[static_cast<std::size_t>(i - 1)]) - (intercept + slope * lx);
    ss += r * r;
  }
  SpectrumFit fit;
  fit.alpha_hat = -slope - 1.0;
  fit.lambda_hat = std::exp(intercept);
  fit.fit_begin = begin;
  fit.fit_end = end;
  fit.residual = std::sqrt(ss / n);
  return fit;
}

/// Largest index whose eigenvalue stays within deviation_factor of the
/// fitted power law.
inline int power_law_extent(const std::vector<double>& eigs, const SpectrumFit& fit,
                            double deviation_factor) {
  require_domain(deviation_factor > 1.0, "power_law_extent: factor must be > 1");
  int extent = 0;
  for (int i = 1; i <= static_cast<int>(eigs.size()); ++i) {
    const double predicted =
        fit.lambda_hat * std::pow(static_cast<double>(i), -(1.0 + fit.alpha_hat));
    if (eigs[static_cast<std::size_t>(i - 1)] >= predicted / deviation_factor) extent = i;
  }
  return extent;
}

/// Two-pass default fit: a provisional fit over [10, n/2] locates the extent
/// (deviation factor 10), then the final fit uses [10, extent/2].
inline std::pair<SpectrumFit, int> default_spectrum_fit(const std::vector<double>& eigs) {
  int n_pos = 0;
  for (double v : eigs) {
    if (v <= 0.0) break;
    ++n_pos;
  }
  require_domain(n_pos >= 20, "default_spectrum_fit: need at least 20 positive eigenvalues");
  SpectrumFit provisional = fit_power_law(eigs, 10, std::max(14, n_pos / 2));
  int extent = power_law_extent(eigs, provisional, 10.0);
  SpectrumFit fit = fit_power_law(eigs, 10, std::max(14, extent / 2));
  extent = power_law_extent(eigs, fit, 10.0);
  return {fit, extent};
}

struct NnDistance {
  double mean = 0.0;
  bool has_duplicates = false;
};

/// Mean Euclidean distance from each column to its nearest other column,
/// computed exactly in O(T^2 d) with blocking to bound memory.
inline NnDistance nn_mean_distance(const Matrix& samples) {
  const Index t = samples.cols();
  require_domain(t >= 2, "nn_mean_distance: need at least two samples");
  Vector sq_norms = samples.colwise().squaredNorm();
  const Index block = 1024;
  double total = 0.0;
  bool duplicates = false;
  for (Index b0 = 0; b0 < t; b0 += block) {
    const Index bn = std::min(block, t - b0);
    Matrix cross = samples.middleCols(b0, bn).transpose() * samples;  // bn x T
    for (Index i = 0; i < bn; ++i) {
      double best = std::numeric_limits<double>::infinity();
      const Index gi = b0 + i;
      for (Index j = 0; j < t; ++j) {
        if (j == gi) continue;
        const double d2 = sq_norms(gi) + sq_norms(j) - 2.0 * cross(i, j);
        if (d2 < best) best = d2;
      }
      if (best <= 0.0) {
        duplicates = true;
        best = 0.0;
      }
      total += std::sqrt(best);
    }
  }
  return NnDistance{total / static_cast<double>(t), duplicates};
}

struct DimensionEstimate {
  double d_int = 0.0;
  double slope = 0.0;  // of log mean-NN-distance vs log T
  std::vector<int> sample_sizes;
  std::vector<double> mean_distances;  // replicate-averaged, one per size
  double r_squared = 0.0;
};

/// Fits log nn-distance against log T over the given sample sizes and returns
/// d_int = -1/slope.  The sampler maps (sample count, seed) to a d x T matrix;
/// replicate draws are averaged per size.
inline DimensionEstimate estimate_intrinsic_dimension(
    const std::function<Matrix(int, std::uint64_t)>& sampler,
    const std::vector<int>& sample_sizes, int replicates = 3, std::uint64_t seed = 1) {
  std::vector<int> sizes = sample_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  require_domain(static_cast<int>(sizes.size()) >= 3,
                 "estimate_intrinsic_dimension: need >= 3 distinct sample sizes");
  require_domain(replicates >= 1, "estimate_intrinsic_dimension: replicates must be >= 1");

  std::vector<double> log_t, log_d, means;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    double mean = 0.0;
    for (int r = 0; r < replicates; ++r) {
      const std::uint64_t draw_seed =
          splitmix64(seed ^ splitmix64((s << 20) + static_cast<std::uint64_t>(r) + 1));
      mean += nn_mean_distance(sampler(sizes[s], draw_seed)).mean;
    }
    mean /= replicates;
    require_domain(mean > 0.0, "estimate_intrinsic_dimension: degenerate dataset");
    means.push_back(mean);
    log_t.push_back(std::log(static_cast<double>(sizes[s])));
    log_d.push_back(std::log(mean));
  }

  const int n = static_cast<int>(log_t.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sx += log_t[i];
    sy += log_d[i];
    sxx += log_t[i] * log_t[i];
    sxy += log_t[i] * log_d[i];
    syy += log_d[i] * log_d[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!(slope < 0.0))
    throw FitError("estimate_intrinsic_dimension: non-negative slope, no power-law decay");
  DimensionEstimate est;
  est.slope = slope;
  est.d_int = -1.0 / slope;
  est.sample_sizes = sizes;
  est.mean_distances = means;
  const double ss_tot = syy - sy * sy / n;
  const double ss_res = ss_tot - slope * (sxy - sx * sy / n);
  est.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return est;
}

/// Dense numeric CSV ingestion: rows are features, columns are samples.
/// Unlike the harness tables there is no header row.
inline Matrix load_matrix(const std::string& path, bool verbose = false) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_matrix: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int row_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row_no;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      values[c] = parse_cell(cells[c], row_no, static_cast<int>(c) + 1);
    if (!rows.empty() && values.size() != rows.front().size())
      throw ParseError("load_matrix: ragged row " + std::to_string(row_no) + " in '" +
                       path + "'");
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("load_matrix: '" + path + "' has no numeric rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  if (verbose)
    std::clog << "load_matrix: " << m.rows() << " x " << m.cols() << " from " << path
              << "\n";
  return m;
}

}  // namespace scalinglab
