#pragma once

#include <optional>
#include <vector>

#include "bcpm/crn.hpp"
#include "bcpm/model.hpp"
#include "bcpm/sort.hpp"

namespace bcpm {

// Proposal schedule for the auxiliary disturbance particle filter: a fitted
// Gaussian N(mu_t, Sigma_t) per time step, mixed defensively with the prior.
// An empty schedule (no fitted components) is the bootstrap filter, pi = 1.
struct AdpfSchedule {
  double pi = 1.0;
  std::vector<Vector> mean;       // one per time step, dim = disturbance_dim(t)
  std::vector<Matrix> chol;       // lower Cholesky factor of Sigma_t
  std::vector<double> log_det;    // log det Sigma_t

  bool bootstrap() const { return mean.empty(); }
  int T() const { return static_cast<int>(mean.size()); }

  static AdpfSchedule bootstrap_mode() { return {}; }
};

enum class SortPayload { State, Disturbance };

struct FilterOptions {
  SortPayload sort_payload = SortPayload::State;
  bool store_history = false;  // keep trajectories for ancestral tracing
};

// Output of one particle filter pass.  History members are filled only when
// FilterOptions::store_history is set.
struct ParticleSystem {
  int T = 0;
  int N = 0;
  double loglik = kNegInf;
  std::vector<double> per_time_log_mean_weight;  // log((1/N) sum_i w_t^i)

  std::vector<Matrix> disturbances;        // per t: disturbance_dim(t) x N
  std::vector<Matrix> states;              // per t: d x N
  std::vector<std::vector<int>> ancestors; // per t in 1..T-1, original indexing
  std::vector<Vector> norm_weights;        // per t: N

  FilterTelemetry telemetry;
};

// Samples one disturbance from the defensive mixture
//   m(eps) = pi N(eps; 0, I) + (1 - pi) N(eps; mu, Sigma)
// using the supplied normals: u_mix picks the component through Phi, u_eps
// fills it in.  Returns the draw and log m(eps).
std::pair<Vector, double> defensive_mixture_sample(const Vector& u_eps,
                                                   double u_mix,
                                                   const Vector& mu,
                                                   const Matrix& Sigma,
                                                   double pi);

// The correlated disturbance particle filter.  Deterministic in all inputs:
// disturbances come from the schedule's mixture driven by crn, resampling
// uses Phi of the crn resampling normals on Euclidean-sorted particles.
// Requires theta inside the prior support and crn shaped (T, N, max dim).
// Throws filter_degenerate_error if every weight underflows at some t.
ParticleSystem run_filter(const DisturbanceModel& model, const Vector& theta,
                          const FilterCrn& crn, const AdpfSchedule& schedule,
                          const Dataset& data, const FilterOptions& opts = {});

// Follows ancestor indices back from terminal particle j (0-based) and
// returns the disturbance trajectory, one column per time step.
std::vector<Vector> ancestral_trace(const ParticleSystem& ps, int terminal_index);

// Fits the ADPF proposal (Algorithm-5 style): draws one terminal index per
// filter by its final weights, traces the lineages, and sets mu_t / Sigma_t
// to the sample mean / covariance across the S trajectories, regularized so
// the Cholesky factorization succeeds.  Systems must carry history.
AdpfSchedule build_adpf_schedule(const std::vector<const ParticleSystem*>& systems,
                                 Rng& rng, double pi,
                                 FilterTelemetry* telemetry = nullptr);

struct PanelOptions {
  double trim = 0.0;
  FilterOptions filter;
  int workers = 1;
};

// Runs the S filters of one likelihood evaluation (in parallel when asked),
// combining the per-filter estimates with the trimmed mean.  A degenerate
// filter contributes -inf to the panel.  When systems_out is non-null the
// per-filter outputs are stored there in filter order.
LikelihoodPanel evaluate_panel(const DisturbanceModel& model, const Vector& theta,
                               const CrnBlockSet& crn, const AdpfSchedule& schedule,
                               const Dataset& data, const PanelOptions& opts,
                               std::vector<ParticleSystem>* systems_out = nullptr);

// Same, over borrowed blocks; lets the sampler substitute the one updated
// block without copying the rest of the set.
LikelihoodPanel evaluate_panel(const DisturbanceModel& model, const Vector& theta,
                               const std::vector<const FilterCrn*>& blocks,
                               const AdpfSchedule& schedule, const Dataset& data,
                               const PanelOptions& opts,
                               std::vector<ParticleSystem>* systems_out = nullptr);

}  // namespace bcpm
