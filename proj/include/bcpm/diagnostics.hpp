#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcpm/filter.hpp"
#include "bcpm/sampler.hpp"

namespace bcpm {

struct IactEstimate {
  double value = 1.0;
  bool degenerate = false;  // constant series; value reported as the length
};

// Integrated autocorrelation time 1 + 2 sum_j rho(j), truncated by Geyer's
// initial monotone positive sequence rule and floored at zero.
IactEstimate estimate_iact(std::span<const double> series);
inline double iact(std::span<const double> series) {
  return estimate_iact(series).value;
}

struct IfReport {
  std::vector<std::string> params;
  std::vector<double> iact_values;
  double if_max = 0.0;
  double if_mean = 0.0;
  double ct_seconds = 0.0;  // mean wall-clock per post-warmup iteration
  double tnif_max = 0.0;    // IF_MAX * CT
  double tnif_mean = 0.0;   // IF_MEAN * CT
  std::optional<double> rtnif_max;   // relative to a benchmark sampler
  std::optional<double> rtnif_mean;
  bool any_degenerate = false;
};

IfReport if_report(const ChainRecord& chain,
                   const ChainRecord* benchmark = nullptr);

struct VarianceCell {
  int N = 0;
  int S = 0;
  double trim = 0.0;
  double variance = 0.0;  // sample variance of the combined log estimate
};

struct VarianceTable {
  std::vector<VarianceCell> cells;
  int replications = 0;
  std::uint64_t seed = 0;

  const VarianceCell* find(int N, int S, double trim) const;
};

// Sample variance of the combined log-likelihood estimate over R independent
// CRN draws for every (N, S, trim) grid cell, on one frozen dataset.  Filters
// run in bootstrap mode at the supplied theta.
VarianceTable loglik_variance_experiment(
    const DisturbanceModel& model, const Dataset& data, const Vector& theta,
    const std::vector<int>& particle_counts, const std::vector<int>& filter_counts,
    const std::vector<double>& trims, int replications, std::uint64_t seed,
    int workers = 1, SortPayload payload = SortPayload::State);

// Correlation of paired combined log estimates at (theta, u) and
// (theta_prime, u') where u' refreshes one randomly chosen block.  Each pair
// draws fresh u.
double correlation_experiment(const DisturbanceModel& model, const Dataset& data,
                              const Vector& theta, const Vector& theta_prime,
                              int S, int N, double trim, double rho_u,
                              int pairs, std::uint64_t seed, int workers = 1,
                              SortPayload payload = SortPayload::State);

struct PosteriorSummary {
  std::vector<std::string> params;
  std::vector<double> mean;
  std::vector<double> q025;
  std::vector<double> q975;
  std::vector<double> se_mean;  // across-chain; empty for a single chain
  int chain_count = 0;
};

PosteriorSummary posterior_summary(const std::vector<const ChainRecord*>& chains);

}  // namespace bcpm
