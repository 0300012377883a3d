#pragma once

#include <cstdint>
#include <vector>

#include "bcpm/common.hpp"
#include "bcpm/rng.hpp"

namespace bcpm {

// Shape of the random-number block that drives one particle filter.
struct CrnShape {
  int T = 0;
  int N = 0;
  int n_e = 0;  // disturbance normals per particle per time step

  std::size_t eps_count() const {
    return static_cast<std::size_t>(T) * N * n_e;
  }
  std::size_t resample_count() const {
    return static_cast<std::size_t>(T > 0 ? T - 1 : 0) * N;
  }
  std::size_t mixture_count() const { return static_cast<std::size_t>(T) * N; }
  std::size_t total() const {
    return eps_count() + resample_count() + mixture_count();
  }
  bool operator==(const CrnShape&) const = default;
};

// One filter's common random numbers, stored as a single flat array of
// standard normals with three segments:
//   eps:      T x (n_e x N) disturbance normals
//   resample: (T-1) x N normals, mapped through Phi to resampling uniforms
//   mixture:  T x N normals, mapped through Phi to mixture-component uniforms
// Keeping everything Gaussian lets the block update u' = rho u + sqrt(1-rho^2) eta
// act homogeneously on the whole array.
class FilterCrn {
 public:
  FilterCrn() = default;
  explicit FilterCrn(const CrnShape& shape)
      : shape_(shape), data_(shape.total(), 0.0) {}

  const CrnShape& shape() const { return shape_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  // n_e x N matrix of disturbance normals for time t (1-based).
  Eigen::Map<const Matrix> eps(int t) const {
    return {data_.data() + static_cast<std::size_t>(t - 1) * shape_.n_e * shape_.N,
            shape_.n_e, shape_.N};
  }
  // N resampling normals consumed before propagating to time t (t in 2..T).
  Eigen::Map<const Vector> resample(int t) const {
    return {data_.data() + shape_.eps_count() +
                static_cast<std::size_t>(t - 2) * shape_.N,
            shape_.N};
  }
  // N mixture-component normals for time t (1-based).
  Eigen::Map<const Vector> mixture(int t) const {
    return {data_.data() + shape_.eps_count() + shape_.resample_count() +
                static_cast<std::size_t>(t - 1) * shape_.N,
            shape_.N};
  }

  void fill_standard_normal(Rng& rng) {
    bcpm::fill_standard_normal(rng, data_.data(), data_.size());
  }

 private:
  CrnShape shape_;
  std::vector<double> data_;
};

struct CrnBlockSet {
  std::vector<FilterCrn> blocks;
  double rho_u = 0.9;

  int S() const { return static_cast<int>(blocks.size()); }
};

CrnBlockSet crn_init(int S, const CrnShape& shape, std::uint64_t seed,
                     double rho_u);

// Uniform block index in 0..S-1.
int select_block(int S, Rng& rng);

// u' = rho u + sqrt(1 - rho^2) eta, elementwise.
FilterCrn crn_block_update(const FilterCrn& u, double rho, const FilterCrn& eta);

// |log q(u'|u) + log p(u) - log q(u|u') - log p(u')| under the Gaussian AR(1)
// kernel; test oracle for the reversibility condition.
double reversibility_check(const FilterCrn& u, const FilterCrn& u_prime,
                           double rho);

// Log of the tau-trimmed mean of the likelihoods exp(logliks), computed in
// log space.  floor(tau S) values are dropped from each tail; tau = 0.5
// returns the median (log-space mean of the two central values for even S).
double trimmed_mean_loglik(std::vector<double> logliks, double trim);

// The S per-filter log-likelihood estimates plus their combination.
struct LikelihoodPanel {
  std::vector<double> per_filter;
  double trim = 0.0;
  double combined = kNegInf;
  FilterTelemetry telemetry;  // aggregated over the S filters
};

}  // namespace bcpm
