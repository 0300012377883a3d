#include "bcpm/kalman.hpp"

#include <cmath>

#include "bcpm/lgss.hpp"
#include "bcpm/stats.hpp"

namespace bcpm {

double kalman_loglik(const Dataset& data, double theta, int d) {
  require(data.obs_dim() == d, "kalman_loglik: observation dimension mismatch");
  const int T = data.T();
  const Matrix A = build_lgss_A(theta, d);
  const Matrix I = Matrix::Identity(d, d);

  Vector m = Vector::Zero(d);  // filtered mean
  Matrix P = I;                // filtered covariance (X_1 prior before update)
  double loglik = 0.0;

  for (int t = 0; t < T; ++t) {
    Vector m_pred;
    Matrix P_pred;
    if (t == 0) {
      m_pred = Vector::Zero(d);
      P_pred = I;
    } else {
      m_pred = A * m;
      P_pred = A * P * A.transpose() + I;
    }
    const Vector y = data.observations.row(t).transpose();
    const Matrix S = P_pred + I;  // H = I, R = I
    Eigen::LLT<Matrix> llt(S);
    require(llt.info() == Eigen::Success,
            "kalman_loglik: innovation covariance not positive definite");
    const Vector innov = y - m_pred;
    const Vector alpha = llt.solve(innov);
    double log_det = 0.0;
    const Matrix L = llt.matrixL();
    for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(L(i, i));
    loglik += -0.5 * (d * kLog2Pi + log_det + innov.dot(alpha));

    const Matrix K = llt.solve(P_pred).transpose();  // P S^{-1}
    m = m_pred + K * innov;
    // Joseph form keeps P symmetric positive semidefinite.
    const Matrix J = I - K;
    P = J * P_pred * J.transpose() + K * K.transpose();
    P = 0.5 * (P + P.transpose());
  }
  return loglik;
}

SurrogateOracle make_kalman_oracle(const Dataset& data, int d) {
  return [data, d](const Vector& theta) {
    return kalman_loglik(data, theta[0], d);
  };
}

}  // namespace bcpm
