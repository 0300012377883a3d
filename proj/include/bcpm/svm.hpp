#pragma once

#include "bcpm/model.hpp"

namespace bcpm {

// GARCH-diffusion parameters shared across the d volatility processes.
struct SvmParams {
  double alpha = 0.0;
  double mu = 0.0;
  double tau2 = 0.0;
  double psi = 0.0;
  int M = 1;  // Euler subdivisions per observation interval

  double delta() const { return 1.0 / M; }
};

// One Euler step of the log-volatility SDE
//   dh = { alpha (mu - e^h) e^{-h} - tau^2/2 } dt + tau dW.
double svm_euler_step(double h, double eps, const SvmParams& p);

// M Euler steps per coordinate, independent across the d coordinates.
// eps_block is laid out as M contiguous sub-step blocks of d coordinates.
Vector svm_transition_map(const Vector& h_prev, const Vector& eps_block,
                          const SvmParams& p);

// log N(y; A h, diag(e^{h_1},...,e^{h_d})) with A[i,j] = psi^{|i-j|+1}.
double svm_obs_logdensity(const Vector& y, const Vector& h, double psi);

// Multivariate stochastic volatility in the mean:
//   y_t = A h_t + e_t,  e_t ~ N(0, diag(exp h_t)),
// with each log-volatility following the Euler-discretized GARCH diffusion
// and h_0 ~ N(0, I).  In disturbance form the t = 1 map consumes d extra
// coordinates that generate h_0, so disturbance_dim(1) = d(M+1) while
// disturbance_dim(t) = dM for t >= 2.
class SvmModel final : public DisturbanceModel {
 public:
  SvmModel(int d, int M);

  std::string id() const override { return "svm"; }
  int state_dim() const override { return d_; }
  int obs_dim() const override { return d_; }
  int disturbance_dim(int t) const override {
    return t == 1 ? d_ * (M_ + 1) : d_ * M_;
  }

  Vector initial_state() const override { return Vector::Zero(d_); }

  void transition(int t, const Matrix& z_prev, const Eigen::Ref<const Matrix>& eps,
                  const Vector& theta, Matrix& z_out) const override;

  void obs_logdensity(const Vector& y, const Matrix& z, const Vector& theta,
                      Vector& log_dens, FilterTelemetry* telemetry) const override;

  std::vector<ParamSpec> params() const override;
  double prior_logdensity(const Vector& theta) const override;
  Vector sample_prior(Rng& rng) const override;
  Dataset simulate(const Vector& theta, int T, std::uint64_t seed) const override;

  SvmParams unpack(const Vector& theta) const;
  int euler_points() const { return M_; }

 private:
  int d_;
  int M_;
};

}  // namespace bcpm
