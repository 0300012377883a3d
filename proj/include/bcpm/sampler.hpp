#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bcpm/crn.hpp"
#include "bcpm/filter.hpp"
#include "bcpm/kalman.hpp"
#include "bcpm/model.hpp"

namespace bcpm {

enum class SamplerKind { Mpm, MpmAdpf, DaMpm, Cpm, ExactMh };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

struct SamplerConfig {
  SamplerKind kind = SamplerKind::Mpm;
  int S = 10;
  int N = 100;
  double rho_u = 0.9;
  double trim = 0.0;
  long iterations = 25000;
  long warmup = 5000;
  double target_accept = 0.20;  // DA mode only (Garthwaite tuning)
  double adpf_pi = 0.05;
  SortPayload sort_payload = SortPayload::State;
  std::uint64_t seed = 1;
  std::optional<Vector> theta0;  // constrained coordinates
  bool freeze_schedule_after_warmup = false;
  bool freeze_adaptation_after_warmup = false;
  int workers = 1;

  void validate() const;
};

// Running mean / covariance of the unconstrained draws, feeding the
// adaptive random walk proposal.
struct AdaptState {
  long count = 0;
  Vector mean;
  Matrix m2;  // sum of outer products of residuals

  void add(const Vector& u);
  Matrix covariance() const;  // divisor count - 1
  bool ready() const { return count >= 100; }
};

// Adaptive random walk: with probability 0.95 a Gaussian step with
// covariance (scale^2/dim) Cov(u-history), otherwise (0.1^2/dim) I.  The
// empirical covariance component switches on after 100 accumulated draws.
// The kernel is symmetric, so its log q-ratio is zero.
Vector adaptive_rw_propose(const Vector& u, const AdaptState& adapt,
                           double scale, Rng& rng);

inline constexpr double kDefaultProposalScale = 2.38;

// Robbins-Monro update of the proposal scale on the log scale:
//   log c += (1{accepted} - target) (1 - target)/target / max(iteration, 1).
double garthwaite_scale(double scale, bool accepted, long iteration,
                        double target);

// Log MH acceptance probability for a symmetric proposal,
// min(0, [ll' + lp' + lq_rev] - [ll + lp + lq_fwd]).
inline double mh_log_acceptance(double ll_new, double lp_new, double ll_old,
                                double lp_old, double log_q_ratio = 0.0) {
  return std::min(0.0, (ll_new + lp_new) - (ll_old + lp_old) + log_q_ratio);
}

struct ChainState {
  Vector u;                  // unconstrained parameters
  double log_prior = kNegInf;  // prior + transform Jacobian at u
  double loglik = kNegInf;     // combined estimate at (u, crn, eval schedule)
  double surrogate = kNegInf;  // DA mode: deterministic approximation at u
  CrnBlockSet crn;
  AdpfSchedule eval_schedule;      // schedule-of-record behind `loglik`
  AdpfSchedule proposal_schedule;  // schedule for the next evaluation
  AdaptState adapt;
  double scale = kDefaultProposalScale;
};

struct StepOutcome {
  bool accepted = false;
  bool stage1_accepted = true;  // always true outside DA mode
  bool ran_filters = false;
};

struct StepContext {
  const DisturbanceModel& model;
  const Dataset& data;
  const SamplerConfig& config;
  const SurrogateOracle* surrogate = nullptr;
  Rng* rng = nullptr;           // proposals, block choice, accept decisions
  Rng* schedule_rng = nullptr;  // ADPF ancestral-tracing draws
  long iteration = 0;           // 1-based
};

StepOutcome mpm_step(ChainState& state, const StepContext& ctx);
StepOutcome mpm_adpf_step(ChainState& state, const StepContext& ctx);
StepOutcome da_mpm_step(ChainState& state, const StepContext& ctx);
StepOutcome cpm_step(ChainState& state, const StepContext& ctx);
StepOutcome exact_mh_step(ChainState& state, const StepContext& ctx);

struct ChainRecord {
  std::vector<std::string> param_names;
  Matrix draws;  // (iterations + 1) x dim, constrained space, row 0 initial
  std::vector<double> logliks;
  std::vector<char> accepted;
  std::vector<char> stage1_accepted;
  std::vector<std::int64_t> elapsed_ns;
  long warmup = 0;
  long filter_panel_evaluations = 0;  // S-filter likelihood evaluations

  long iterations() const { return static_cast<long>(draws.rows()) - 1; }
  // Post-warmup draws of one parameter column.
  std::vector<double> post_warmup(int param) const;
  double mean_seconds_per_iteration() const;
};

// Runs the configured kernel for config.iterations steps.  Fully
// deterministic given (config, model, data): all randomness derives from
// config.seed through the documented stream-splitting convention.
ChainRecord run_chain(const SamplerConfig& config, const DisturbanceModel& model,
                      const Dataset& data,
                      const SurrogateOracle* surrogate = nullptr);

}  // namespace bcpm
