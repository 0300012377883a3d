#include <doctest.h>

#include <cmath>

#include "bcpm/kalman.hpp"
#include "bcpm/lgss.hpp"
#include "bcpm/stats.hpp"

using namespace bcpm;

namespace {

// Brute-force oracle: build the joint covariance of y_{1:T} explicitly and
// evaluate the multivariate normal log-density.
double joint_gaussian_loglik(const Dataset& data, double theta, int d) {
  const int T = data.T();
  const Matrix A = build_lgss_A(theta, d);
  const Matrix I = Matrix::Identity(d, d);

  // State covariances P_t and cross-covariances Cov(X_t, X_s) = P_t (A^{s-t})'.
  std::vector<Matrix> P(static_cast<std::size_t>(T));
  P[0] = I;
  for (int t = 1; t < T; ++t) P[static_cast<std::size_t>(t)] = A * P[t - 1] * A.transpose() + I;

  Matrix cov(T * d, T * d);
  for (int t = 0; t < T; ++t) {
    Matrix lag = P[static_cast<std::size_t>(t)];
    for (int s = t; s < T; ++s) {
      Matrix block = lag;  // Cov(X_t, X_s)
      if (s == t) block += I;  // observation noise on the diagonal
      cov.block(t * d, s * d, d, d) = block;
      cov.block(s * d, t * d, d, d) = block.transpose();
      lag = lag * A.transpose();
    }
  }
  Vector y(T * d);
  for (int t = 0; t < T; ++t) y.segment(t * d, d) = data.observations.row(t).transpose();

  Eigen::LLT<Matrix> llt(cov);
  REQUIRE(llt.info() == Eigen::Success);
  const Vector alpha = llt.solve(y);
  double log_det = 0.0;
  const Matrix L = llt.matrixL();
  for (int i = 0; i < T * d; ++i) log_det += 2.0 * std::log(L(i, i));
  return -0.5 * (T * d * kLog2Pi + log_det + y.dot(alpha));
}

}  // namespace

TEST_CASE("kalman log-likelihood closed forms at theta = 0") {
  Dataset one;
  one.observations = Matrix::Zero(1, 1);
  CHECK(kalman_loglik(one, 0.0, 1) ==
        doctest::Approx(-0.5 * std::log(4.0 * M_PI)).epsilon(1e-12));

  // theta = 0 decouples time: sum of log N(y_t; 0, 2).
  LgssModel model(1);
  const Dataset data = model.simulate(Vector::Zero(1), 7, 3);
  double direct = 0.0;
  for (int t = 0; t < data.T(); ++t)
    direct += normal_logpdf(data.observations(t, 0), 0.0, 2.0);
  CHECK(kalman_loglik(data, 0.0, 1) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("kalman agrees with the joint-Gaussian oracle") {
  LgssModel m2(2);
  Vector theta = Vector::Constant(1, 0.4);
  const Dataset d2 = m2.simulate(theta, 10, 21);
  CHECK(kalman_loglik(d2, 0.4, 2) ==
        doctest::Approx(joint_gaussian_loglik(d2, 0.4, 2)).epsilon(1e-10));

  LgssModel m3(3);
  const Dataset d3 = m3.simulate(Vector::Constant(1, 0.25), 8, 5);
  for (double th : {-0.3, 0.0, 0.25, 0.45})
    CHECK(kalman_loglik(d3, th, 3) ==
          doctest::Approx(joint_gaussian_loglik(d3, th, 3)).epsilon(1e-10));
}

TEST_CASE("kalman log-likelihood is smooth in theta") {
  LgssModel model(2);
  const Dataset data = model.simulate(Vector::Constant(1, 0.4), 30, 9);
  const double h = 1e-5;
  const double f0 = kalman_loglik(data, 0.4 - h, 2);
  const double f1 = kalman_loglik(data, 0.4 + h, 2);
  const double deriv = (f1 - f0) / (2 * h);
  CHECK(std::isfinite(deriv));
  // Centered difference with half the step agrees to leading order.
  const double deriv2 =
      (kalman_loglik(data, 0.4 + h / 2, 2) - kalman_loglik(data, 0.4 - h / 2, 2)) / h;
  CHECK(deriv == doctest::Approx(deriv2).epsilon(1e-4));
}

TEST_CASE("surrogate adapter wraps kalman_loglik") {
  LgssModel model(1);
  const Dataset data = model.simulate(Vector::Constant(1, 0.4), 12, 2);
  const SurrogateOracle oracle = make_kalman_oracle(data, 1);
  const Vector theta = Vector::Constant(1, 0.3);
  CHECK(oracle(theta) == oracle(theta));
  CHECK(oracle(theta) == kalman_loglik(data, 0.3, 1));
}
