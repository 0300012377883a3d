#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bcpm/common.hpp"
#include "bcpm/rng.hpp"

namespace bcpm {

// Parameter coordinate transforms used by the samplers: chains move in an
// unconstrained space, the models evaluate in the constrained space.
enum class Transform { Identity, LogPositive, ScaledLogit };

struct ParamSpec {
  std::string name;
  Transform transform = Transform::Identity;
  double lower = 0.0;  // ScaledLogit bounds
  double upper = 0.0;
};

double to_unconstrained(double value, const ParamSpec& spec);
double to_constrained(double value, const ParamSpec& spec);
// log |d constrained / d unconstrained| evaluated at the unconstrained value
double transform_log_jacobian(double unconstrained, const ParamSpec& spec);

Vector to_unconstrained(const Vector& theta, const std::vector<ParamSpec>& specs);
Vector to_constrained(const Vector& u, const std::vector<ParamSpec>& specs);
double transform_log_jacobian(const Vector& u, const std::vector<ParamSpec>& specs);

struct Dataset {
  Matrix observations;  // T x obs_dim
  std::string model_id;
  Vector generating_theta;  // empty when not simulated
  std::uint64_t seed = 0;

  int T() const { return static_cast<int>(observations.rows()); }
  int obs_dim() const { return static_cast<int>(observations.cols()); }
};

// A state-space model written in disturbance form: the latent noises
// eps_{1:T} are iid standard normal and the state evolves through the
// deterministic map F.  The t = 1 map may consume extra disturbance
// coordinates when the initial state itself is random; disturbance_dim(t)
// reports the number of coordinates the map at time t actually uses.
class DisturbanceModel {
 public:
  virtual ~DisturbanceModel() = default;

  virtual std::string id() const = 0;
  virtual int state_dim() const = 0;
  virtual int obs_dim() const = 0;
  virtual int disturbance_dim(int t) const = 0;  // t in 1..T
  int max_disturbance_dim() const {
    return std::max(disturbance_dim(1), disturbance_dim(2));
  }

  // Deterministic start point consumed by the t = 1 map.
  virtual Vector initial_state() const = 0;

  // Batched transition: z_prev, eps and z_out hold one particle per column.
  // Only the leading disturbance_dim(t) rows of eps are consumed; eps binds
  // to plain matrices and to maps into CRN storage alike.
  virtual void transition(int t, const Matrix& z_prev,
                          const Eigen::Ref<const Matrix>& eps,
                          const Vector& theta, Matrix& z_out) const = 0;

  // Batched observation log-density; one particle per column of z.
  virtual void obs_logdensity(const Vector& y, const Matrix& z,
                              const Vector& theta, Vector& log_dens,
                              FilterTelemetry* telemetry) const = 0;

  virtual std::vector<ParamSpec> params() const = 0;
  int param_dim() const { return static_cast<int>(params().size()); }

  // Log prior density in constrained coordinates; -inf outside the support.
  virtual double prior_logdensity(const Vector& theta) const = 0;

  virtual Vector sample_prior(Rng& rng) const = 0;

  virtual Dataset simulate(const Vector& theta, int T, std::uint64_t seed) const = 0;

  // Prior plus the transform Jacobian, evaluated at unconstrained coordinates.
  double prior_logdensity_unconstrained(const Vector& u) const {
    const auto specs = params();
    const Vector theta = bcpm::to_constrained(u, specs);
    const double lp = prior_logdensity(theta);
    if (!std::isfinite(lp)) return kNegInf;
    return lp + transform_log_jacobian(u, specs);
  }
};

}  // namespace bcpm
