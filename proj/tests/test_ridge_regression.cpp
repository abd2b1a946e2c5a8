#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scalinglab/random.hpp"
#include "scalinglab/ridge_regression.hpp"

using namespace scalinglab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("solve_primal scalar normal equations") {
  Matrix phi(1, 2);
  phi << 1, 1;
  Matrix targets(1, 2);
  targets << 3, 1;
  CHECK_THAT(solve_primal(phi, targets, 0.0).theta(0, 0), WithinRel(2.0, 1e-12));
  CHECK_THAT(solve_primal(phi, targets, 2.0).theta(0, 0), WithinRel(1.0, 1e-12));
}

TEST_CASE("ridge dominance shrinks theta monotonically") {
  RandomEngine eng(2);
  const Matrix phi = gaussian_matrix(eng, 4, 9);
  const Matrix targets = gaussian_matrix(eng, 1, 9);
  double last = solve_primal(phi, targets, 1.0).theta.norm();
  for (double g : {1e2, 1e5, 1e8, 1e12}) {
    const double norm = solve_primal(phi, targets, g).theta.norm();
    CHECK(norm < last);
    last = norm;
  }
  CHECK(last < 1e-9);
}

TEST_CASE("solve_dual closed-form 2x2 oracle") {
  // Q = inv([[3,1],[1,3]]) from gamma = 2, phi = [1,1]; theta = targets Q phi^T = 1
  Matrix phi(1, 2);
  phi << 1, 1;
  Matrix targets(1, 2);
  targets << 3, 1;
  Matrix q(2, 2);
  q << 3, 1, 1, 3;
  const Matrix theta_oracle = targets * q.inverse() * phi.transpose();
  const RegressionSolution sol = solve_dual(phi, targets, 2.0);
  CHECK_THAT(sol.theta(0, 0), WithinRel(theta_oracle(0, 0), 1e-12));
  CHECK_THAT(sol.theta(0, 0), WithinRel(1.0, 1e-12));
}

TEST_CASE("identity features at gamma 0 reproduce the targets") {
  const Matrix phi = Matrix::Identity(5, 5);
  RandomEngine eng(3);
  const Matrix targets = gaussian_matrix(eng, 2, 5);
  const RegressionSolution sol = solve_dual(phi, targets, 0.0);
  CHECK((sol.theta - targets).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("dual equals primal on random instances") {
  RandomEngine eng(4);
  const Matrix phi = gaussian_matrix(eng, 5, 8);
  const Matrix targets = gaussian_matrix(eng, 2, 8);
  const Matrix a = solve_primal(phi, targets, 0.31).theta;
  const Matrix b = solve_dual(phi, targets, 0.31).theta;
  CHECK((a - b).norm() / a.norm() < 1e-10);
}

TEST_CASE("primal/dual agreement property over many instances") {
  RandomEngine eng(44);
  std::uniform_int_distribution<int> dim(1, 24);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(eng), t = dim(eng);
    const Matrix phi = gaussian_matrix(eng, n, t);
    const Matrix targets = gaussian_matrix(eng, 1, t);
    const double scale = phi.squaredNorm() / n;
    const double gamma = 1e-6 * scale * (1 + trial % 7);
    const Matrix a = solve_primal(phi, targets, gamma).theta;
    const Matrix b = solve_dual(phi, targets, gamma).theta;
    const double denom = std::max(a.norm(), 1e-300);
    worst = std::max(worst, (a - b).norm() / denom);
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("gamma 0 on a singular system floors the ridge") {
  // rank-1 features with N = 2 < T: phi phi^T singular
  Matrix phi(2, 3);
  phi << 1, 2, 3, 2, 4, 6;
  Matrix targets(1, 3);
  targets << 1, 2, 3;
  const RegressionSolution sol = solve_primal(phi, targets, 0.0);
  CHECK(sol.gamma_floored);
  CHECK(sol.gamma > 0.0);
  CHECK(sol.theta.allFinite());
}

TEST_CASE("all-zero features raise a singularity error naming rank") {
  const Matrix phi = Matrix::Zero(3, 4);
  const Matrix targets = Matrix::Zero(1, 4);
  try {
    solve_primal(phi, targets, 0.0);
    FAIL("expected SingularSystemError");
  } catch (const SingularSystemError& e) {
    CHECK(e.rank == 0);
  }
}

TEST_CASE("predict basics and interpolation") {
  RegressionSolution zero;
  zero.theta = Matrix::Zero(1, 3);
  CHECK(predict(zero, Matrix::Ones(3, 4)).isZero(0.0));

  RegressionSolution scalar;
  scalar.theta = Matrix(1, 1);
  scalar.theta << 2;
  Matrix phi_test(1, 2);
  phi_test << 1, 3;
  const Matrix out = predict(scalar, phi_test);
  CHECK_THAT(out(0, 0), WithinAbs(2.0, 1e-15));
  CHECK_THAT(out(0, 1), WithinAbs(6.0, 1e-15));

  CHECK_THROWS_AS(predict(scalar, Matrix::Zero(2, 2)), ShapeError);

  // full-rank N >= T interpolates the training targets exactly at gamma = 0
  RandomEngine eng(6);
  const Matrix phi = gaussian_matrix(eng, 4, 3);
  const Matrix targets = gaussian_matrix(eng, 1, 3);
  const RegressionSolution sol = solve_dual(phi, targets, 0.0);
  const Matrix reproduced = predict(sol, phi);
  CHECK((reproduced - targets).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("test_loss normalization") {
  const Matrix y = Matrix::Zero(1, 4);
  CHECK(test_loss(y, y) == 0.0);
  CHECK_THAT(test_loss(Matrix::Ones(1, 4), y), WithinAbs(0.5, 1e-15));

  RandomEngine eng(7);
  const Matrix a = gaussian_matrix(eng, 2, 6);
  const double base = test_loss(a, Matrix::Zero(2, 6));
  CHECK_THAT(test_loss(3.0 * a, Matrix::Zero(2, 6)), WithinRel(9.0 * base, 1e-12));

  CHECK_THROWS_AS(test_loss(a, Matrix::Zero(2, 5)), ShapeError);
}

TEST_CASE("train_loss is minimized by the solver output") {
  RandomEngine eng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix phi = gaussian_matrix(eng, 3, 5);
    const Matrix targets = gaussian_matrix(eng, 1, 5);
    const double gamma = 0.4;
    const Matrix theta = solve_primal(phi, targets, gamma).theta;
    const double optimum = train_loss(theta, phi, targets, gamma);
    for (int p = 0; p < 5; ++p) {
      const Matrix perturbed = theta + 0.01 * gaussian_matrix(eng, 1, 3);
      CHECK(train_loss(perturbed, phi, targets, gamma) >= optimum - 1e-12);
    }
  }

  CHECK(train_loss(Matrix::Zero(1, 2), Matrix::Zero(2, 3), Matrix::Zero(1, 3), 1.0) == 0.0);

  // gamma = 0 interpolating solution has zero training loss
  RandomEngine eng2(9);
  const Matrix phi = gaussian_matrix(eng2, 4, 3);
  const Matrix targets = gaussian_matrix(eng2, 1, 3);
  const Matrix theta = solve_dual(phi, targets, 0.0).theta;
  CHECK(train_loss(theta, phi, targets, 0.0) < 1e-16);
}

TEST_CASE("measured loss is invariant under feature-space rotation") {
  RandomEngine eng(10);
  const Matrix phi = gaussian_matrix(eng, 6, 12);
  const Matrix phi_test = gaussian_matrix(eng, 6, 8);
  const Matrix targets = gaussian_matrix(eng, 1, 12);
  const Matrix y_test = gaussian_matrix(eng, 1, 8);
  const double gamma = 0.05;

  const double base =
      test_loss(predict(solve_primal(phi, targets, gamma), phi_test), y_test);

  Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(eng, 6, 6));
  const Matrix q = qr.householderQ();
  const double rotated =
      test_loss(predict(solve_primal(q * phi, targets, gamma), q * phi_test), y_test);
  CHECK_THAT(rotated, WithinRel(base, 1e-10));
}

TEST_CASE("optimal_ridge grid search") {
  auto quadratic = [](double g) {
    LossRecord rec;
    rec.test_loss = (std::log10(g) - 1.0) * (std::log10(g) - 1.0);  // minimum at 10
    rec.gamma = g;
    return rec;
  };
  SECTION("single-element grid returns that element") {
    const auto r = optimal_ridge(quadratic, {0.3});
    CHECK(r.gamma_star == 0.3);
  }
  SECTION("grid minimum is found") {
    const auto r = optimal_ridge(quadratic, {0.1, 1.0, 10.0, 100.0});
    CHECK(r.gamma_star == 10.0);
  }
  SECTION("ties break toward smaller gamma") {
    auto flat = [](double g) {
      LossRecord rec;
      rec.test_loss = 1.0;
      rec.gamma = g;
      return rec;
    };
    CHECK(optimal_ridge(flat, {2.0, 0.5, 8.0}).gamma_star == 0.5);
  }
  SECTION("aggregate error when everything fails") {
    auto broken = [](double) -> LossRecord { throw SolverError("boom"); };
    CHECK_THROWS_AS(optimal_ridge(broken, {1.0, 2.0}), SolverError);
  }
}
