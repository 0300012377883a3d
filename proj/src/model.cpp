#include "bcpm/model.hpp"

#include <cmath>

namespace bcpm {

double to_unconstrained(double value, const ParamSpec& spec) {
  switch (spec.transform) {
    case Transform::Identity:
      return value;
    case Transform::LogPositive:
      return std::log(value);
    case Transform::ScaledLogit: {
      const double p = (value - spec.lower) / (spec.upper - spec.lower);
      return std::log(p / (1.0 - p));
    }
  }
  return value;
}

double to_constrained(double value, const ParamSpec& spec) {
  switch (spec.transform) {
    case Transform::Identity:
      return value;
    case Transform::LogPositive:
      return std::exp(value);
    case Transform::ScaledLogit: {
      const double s = 1.0 / (1.0 + std::exp(-value));
      return spec.lower + (spec.upper - spec.lower) * s;
    }
  }
  return value;
}

double transform_log_jacobian(double unconstrained, const ParamSpec& spec) {
  switch (spec.transform) {
    case Transform::Identity:
      return 0.0;
    case Transform::LogPositive:
      return unconstrained;  // d exp(u) / du = exp(u)
    case Transform::ScaledLogit: {
      // d/du [lo + (hi-lo) sigmoid(u)] = (hi-lo) s (1-s)
      const double s = 1.0 / (1.0 + std::exp(-unconstrained));
      return std::log(spec.upper - spec.lower) + std::log(s) + std::log1p(-s);
    }
  }
  return 0.0;
}

Vector to_unconstrained(const Vector& theta, const std::vector<ParamSpec>& specs) {
  require(theta.size() == static_cast<Eigen::Index>(specs.size()),
          "to_unconstrained: dimension mismatch");
  Vector u(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    u[i] = to_unconstrained(theta[i], specs[static_cast<std::size_t>(i)]);
  return u;
}

Vector to_constrained(const Vector& u, const std::vector<ParamSpec>& specs) {
  require(u.size() == static_cast<Eigen::Index>(specs.size()),
          "to_constrained: dimension mismatch");
  Vector theta(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    theta[i] = to_constrained(u[i], specs[static_cast<std::size_t>(i)]);
  return theta;
}

double transform_log_jacobian(const Vector& u, const std::vector<ParamSpec>& specs) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    acc += transform_log_jacobian(u[i], specs[static_cast<std::size_t>(i)]);
  return acc;
}

}  // namespace bcpm
