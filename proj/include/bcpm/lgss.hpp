#pragma once

#include "bcpm/model.hpp"

namespace bcpm {

// A[i,j] = theta^{|i-j|+1}; the symmetric band-power transition matrix of the
// linear Gaussian benchmark model.
Matrix build_lgss_A(double theta, int d);

// z' = A_theta z + eps with eps ~ N(0, I_d) supplied by the caller.
Vector lgss_transition(const Vector& z_prev, const Vector& eps, double theta);

// log N(y; z, I_d)
double lgss_obs_logdensity(const Vector& y, const Vector& z);

// Largest |eigenvalue| of A_theta (A is symmetric).
double lgss_spectral_radius(double theta, int d);

// Linear Gaussian state-space model in disturbance form:
//   X_1 = eps_1,  X_t = A_theta X_{t-1} + eps_t,  Y_t = X_t + W_t,
// all noises standard normal.  theta is scalar with a flat prior on (-1,1)
// restricted to the region where A_theta is stable.
class LgssModel final : public DisturbanceModel {
 public:
  explicit LgssModel(int d);

  std::string id() const override { return "lgss"; }
  int state_dim() const override { return d_; }
  int obs_dim() const override { return d_; }
  int disturbance_dim(int) const override { return d_; }

  Vector initial_state() const override { return Vector::Zero(d_); }

  void transition(int t, const Matrix& z_prev, const Eigen::Ref<const Matrix>& eps,
                  const Vector& theta, Matrix& z_out) const override;

  void obs_logdensity(const Vector& y, const Matrix& z, const Vector& theta,
                      Vector& log_dens, FilterTelemetry* telemetry) const override;

  std::vector<ParamSpec> params() const override;
  double prior_logdensity(const Vector& theta) const override;
  Vector sample_prior(Rng& rng) const override;
  Dataset simulate(const Vector& theta, int T, std::uint64_t seed) const override;

 private:
  int d_;
};

}  // namespace bcpm
