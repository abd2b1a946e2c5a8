#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scalinglab/types.hpp"

namespace scalinglab {

enum class SolveMethod { Primal, Dual };

struct RegressionSolution {
  Matrix theta;  // C x N
  double gamma = 0.0;  // ridge actually used
  double gamma_requested = 0.0;
  bool gamma_floored = false;
  SolveMethod method = SolveMethod::Primal;
  double condition_hint = 0.0;  // reciprocal condition estimate of the inverted matrix
};

struct LossRecord {
  double test_loss = 0.0;
  double train_loss = 0.0;
  double label_term = 0.0;
  double noise_term = 0.0;
  double gamma = 0.0;
  double gamma_requested = 0.0;
  bool gamma_floored = false;
  SolveMethod method = SolveMethod::Primal;
  std::uint64_t config_digest = 0;
  std::uint64_t seed = 0;
  int n_features = 0;
  int n_train = 0;
  int n_latent = 0;
  bool near_pole = false;  // |N - T| / max(N, T) < 0.05
};

namespace detail {

struct SymFactor {
  Eigen::LLT<Matrix> llt;
  Eigen::LDLT<Matrix> ldlt;
  bool use_ldlt = false;
  double gamma = 0.0;
  bool floored = false;
  double condition_hint = 0.0;

  Matrix solve(const Matrix& rhs) const {
    if (use_ldlt) return ldlt.solve(rhs);
    return llt.solve(rhs);
  }
};

inline double llt_rcond(const Eigen::LLT<Matrix>& llt) {
  Vector d = llt.matrixLLT().diagonal();
  const double lo = d.minCoeff(), hi = d.maxCoeff();
  if (hi <= 0.0) return 0.0;
  return (lo / hi) * (lo / hi);
}

inline Index ldlt_rank(const Eigen::LDLT<Matrix>& ldlt) {
  Vector d = ldlt.vectorD();
  const double tol = 1e-12 * d.cwiseAbs().maxCoeff();
  Index rank = 0;
  for (Index i = 0; i < d.size(); ++i)
    if (std::abs(d(i)) > tol) ++rank;
  return rank;
}

// Factors gamma*I + gram.  A ridgeless request (gamma == 0) is honored only
// when the gram is numerically full rank; otherwise gamma is floored to
// 1e-12 * tr(gram)/dim and the substitution is reported to the caller.
inline SymFactor factor_ridge_system(const Matrix& gram, double gamma_requested) {
  require_domain(gamma_requested >= 0.0, "ridge: gamma must be >= 0");
  const Index dim = gram.rows();
  SymFactor f;
  f.gamma = gamma_requested;

  auto try_llt = [&](double g) {
    Matrix a = gram;
    a.diagonal().array() += g;
    f.llt.compute(a);
    return f.llt.info() == Eigen::Success;
  };

  if (gamma_requested == 0.0) {
    if (try_llt(0.0)) {
      f.condition_hint = llt_rcond(f.llt);
      if (f.condition_hint > 1e-12) return f;
    }
    const double trace = gram.trace();
    if (!(trace > 0.0)) {
      Eigen::LDLT<Matrix> probe(gram);
      throw SingularSystemError(
          "ridge: singular system at gamma = 0 (rank " +
              std::to_string(ldlt_rank(probe)) + " of " + std::to_string(dim) + ")",
          ldlt_rank(probe));
    }
    f.gamma = 1e-12 * trace / static_cast<double>(dim);
    f.floored = true;
  }

  if (try_llt(f.gamma)) {
    f.condition_hint = llt_rcond(f.llt);
    return f;
  }
  Matrix a = gram;
  a.diagonal().array() += f.gamma;
  f.ldlt.compute(a);
  f.use_ldlt = true;
  Vector d = f.ldlt.vectorD();
  const Index rank = ldlt_rank(f.ldlt);
  if (f.ldlt.info() != Eigen::Success || rank < dim)
    throw SingularSystemError("ridge: singular system (rank " + std::to_string(rank) +
                                  " of " + std::to_string(dim) + ")",
                              rank);
  const double hi = d.cwiseAbs().maxCoeff();
  f.condition_hint = hi > 0.0 ? d.cwiseAbs().minCoeff() / hi : 0.0;
  return f;
}

}  // namespace detail

/// theta = targets phi^T (gamma I_N + phi phi^T)^-1, the minimizer of the
/// ridge training loss.  Preferred when N < T.
inline RegressionSolution solve_primal(const Matrix& phi, const Matrix& targets,
                                       double gamma) {
  require_shape(phi.cols() == targets.cols(),
                "solve_primal: phi and targets must share sample count");
  const Index n = phi.rows();
  Matrix gram = Matrix::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  auto factor = detail::factor_ridge_system(gram, gamma);
  RegressionSolution sol;
  sol.theta = factor.solve(phi * targets.transpose()).transpose();
  sol.gamma = factor.gamma;
  sol.gamma_requested = gamma;
  sol.gamma_floored = factor.floored;
  sol.method = SolveMethod::Primal;
  sol.condition_hint = factor.condition_hint;
  return sol;
}

/// theta = targets (gamma I_T + phi^T phi)^-1 phi^T; equals the primal
/// solution where both are defined.  Preferred when N > T.
inline RegressionSolution solve_dual(const Matrix& phi, const Matrix& targets,
                                     double gamma) {
  require_shape(phi.cols() == targets.cols(),
                "solve_dual: phi and targets must share sample count");
  const Index t = phi.cols();
  Matrix gram = Matrix::Zero(t, t);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  auto factor = detail::factor_ridge_system(gram, gamma);
  RegressionSolution sol;
  sol.theta = (phi * factor.solve(targets.transpose())).transpose();
  sol.gamma = factor.gamma;
  sol.gamma_requested = gamma;
  sol.gamma_floored = factor.floored;
  sol.method = SolveMethod::Dual;
  sol.condition_hint = factor.condition_hint;
  return sol;
}

/// Primal for underparameterized systems (N < T), dual otherwise.
inline RegressionSolution solve_auto(const Matrix& phi, const Matrix& targets,
                                     double gamma) {
  return phi.rows() < phi.cols() ? solve_primal(phi, targets, gamma)
                                 : solve_dual(phi, targets, gamma);
}

inline Matrix predict(const RegressionSolution& solution, const Matrix& phi_test) {
  require_shape(solution.theta.cols() == phi_test.rows(),
                "predict: theta columns must match test feature rows");
  return solution.theta * phi_test;
}

/// Per-sample loss: (1/2T) sum of squared residuals.
inline double test_loss(const Matrix& z_hat, const Matrix& y_hat) {
  require_shape(z_hat.rows() == y_hat.rows() && z_hat.cols() == y_hat.cols(),
                "test_loss: prediction and target shapes differ");
  require_domain(z_hat.cols() >= 1, "test_loss: need at least one sample");
  return 0.5 * (z_hat - y_hat).squaredNorm() / static_cast<double>(z_hat.cols());
}

/// Unnormalized training objective: 1/2 |theta phi - targets|^2 + gamma/2 |theta|^2.
inline double train_loss(const Matrix& theta, const Matrix& phi, const Matrix& targets,
                         double gamma) {
  require_shape(theta.cols() == phi.rows(), "train_loss: theta/phi shape mismatch");
  require_shape(phi.cols() == targets.cols() && theta.rows() == targets.rows(),
                "train_loss: targets shape mismatch");
  return 0.5 * (theta * phi - targets).squaredNorm() + 0.5 * gamma * theta.squaredNorm();
}

inline std::vector<double> default_gamma_grid(double scale, int points = 25) {
  require_domain(scale > 0.0 && points >= 2, "default_gamma_grid: bad arguments");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double lo = std::log(1e-12 * scale), hi = std::log(1e2 * scale);
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] =
        std::exp(lo + (hi - lo) * static_cast<double>(i) / (points - 1));
  return grid;
}

struct RidgeSearchResult {
  double gamma_star = 0.0;
  LossRecord record;
};

/// Evaluates the pipeline closure on every grid point and returns the gamma
/// with the smallest measured test loss (ties broken toward smaller gamma).
/// Note: like the experiments this reproduces, the search optimizes the test
/// loss directly; there is no held-out validation split.
inline RidgeSearchResult optimal_ridge(const std::function<LossRecord(double)>& evaluate,
                                       const std::vector<double>& grid) {
  require_domain(!grid.empty(), "optimal_ridge: empty grid");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  require_domain(sorted.front() >= 0.0, "optimal_ridge: gamma must be >= 0");
  bool found = false;
  RidgeSearchResult best;
  std::string last_error;
  for (double g : sorted) {
    try {
      LossRecord rec = evaluate(g);
      if (!found || rec.test_loss < best.record.test_loss) {
        best.gamma_star = g;
        best.record = rec;
        found = true;
      }
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  if (!found)
    throw SolverError("optimal_ridge: every grid evaluation failed (last: " +
                      last_error + ")");
  return best;
}

}  // namespace scalinglab
