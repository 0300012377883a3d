#pragma once

#include <functional>

#include "bcpm/model.hpp"

namespace bcpm {

// Exact log-likelihood of the linear Gaussian model
//   X_1 ~ N(0, I),  X_t = A_theta X_{t-1} + V_t,  Y_t = X_t + W_t,
// with V, W standard normal, by the Kalman recursion (Joseph-form update).
double kalman_loglik(const Dataset& data, double theta, int d);

// Deterministic map theta -> log p^c(y | theta); the delayed-acceptance
// first-stage surrogate and the exact-MH likelihood.
using SurrogateOracle = std::function<double(const Vector& theta)>;

// Wraps kalman_loglik as a SurrogateOracle for a fixed dataset.
SurrogateOracle make_kalman_oracle(const Dataset& data, int d);

}  // namespace bcpm
