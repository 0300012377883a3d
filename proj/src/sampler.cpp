#include "bcpm/sampler.hpp"

#include <chrono>
#include <cmath>

#include "bcpm/stats.hpp"

namespace bcpm {

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Mpm: return "mpm";
    case SamplerKind::MpmAdpf: return "mpm_adpf";
    case SamplerKind::DaMpm: return "da_mpm";
    case SamplerKind::Cpm: return "cpm";
    case SamplerKind::ExactMh: return "exact_mh";
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "mpm") return SamplerKind::Mpm;
  if (name == "mpm_adpf") return SamplerKind::MpmAdpf;
  if (name == "da_mpm") return SamplerKind::DaMpm;
  if (name == "cpm") return SamplerKind::Cpm;
  if (name == "exact_mh") return SamplerKind::ExactMh;
  throw std::invalid_argument("unknown sampler kind: " + name);
}

void SamplerConfig::validate() const {
  require(iterations >= 0, "config: iterations must be non-negative");
  require(warmup >= 0 && (iterations == 0 || warmup < iterations),
          "config: warmup must be smaller than the iteration count");
  require(S >= 1 && N >= 1, "config: S and N must be positive");
  require(rho_u >= 0.0 && rho_u <= 1.0, "config: rho_u outside [0,1]");
  require(trim >= 0.0 && trim <= 0.5, "config: trim outside [0, 0.5]");
  require(target_accept > 0.0 && target_accept < 1.0,
          "config: target acceptance outside (0,1)");
  require(adpf_pi > 0.0 && adpf_pi <= 1.0, "config: adpf pi outside (0,1]");
  require(workers >= 1, "config: worker count must be positive");
  if (kind == SamplerKind::Cpm)
    require(S == 1, "config: cpm runs a single filter (S = 1)");
}

void AdaptState::add(const Vector& u) {
  if (count == 0) {
    mean = Vector::Zero(u.size());
    m2 = Matrix::Zero(u.size(), u.size());
  }
  ++count;
  const Vector delta = u - mean;
  mean += delta / static_cast<double>(count);
  m2.noalias() += delta * (u - mean).transpose();
}

Matrix AdaptState::covariance() const {
  require(count >= 2, "AdaptState: need at least two draws for a covariance");
  return m2 / static_cast<double>(count - 1);
}

Vector adaptive_rw_propose(const Vector& u, const AdaptState& adapt,
                           double scale, Rng& rng) {
  const int dim = static_cast<int>(u.size());
  // Fixed draw order (one uniform, then dim normals) keeps the stream
  // aligned across both mixture branches.
  const double component = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const Vector z = standard_normal_vector(rng, dim);
  const double sqrt_dim = std::sqrt(static_cast<double>(dim));
  if (component < 0.95 && adapt.ready()) {
    Matrix cov = adapt.covariance();
    cov.diagonal().array() += 1e-12;
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success)
      return u + (scale / sqrt_dim) * (Matrix(llt.matrixL()) * z);
  }
  return u + (0.1 / sqrt_dim) * z;
}

double garthwaite_scale(double scale, bool accepted, long iteration,
                        double target) {
  require(target > 0.0 && target < 1.0, "garthwaite_scale: target outside (0,1)");
  const double step = (1.0 - target) / target;
  const double indicator = accepted ? 1.0 : 0.0;
  const double denom = static_cast<double>(std::max<long>(iteration, 1));
  return scale * std::exp(step * (indicator - target) / denom);
}

namespace {

double log_uniform(Rng& rng) {
  return std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

bool schedule_frozen(const StepContext& ctx) {
  return ctx.config.freeze_schedule_after_warmup &&
         ctx.iteration > ctx.config.warmup;
}

// Shared body of the mpm / cpm / mpm_adpf kernels.  rebuild_schedule turns on
// trajectory storage and the per-iteration ADPF proposal reconstruction.
StepOutcome mpm_like_step(ChainState& state, const StepContext& ctx,
                          bool rebuild_schedule) {
  if (!std::isfinite(state.loglik))
    throw std::logic_error("mpm_step: current state has non-finite likelihood");
  Rng& rng = *ctx.rng;
  const auto specs = ctx.model.params();
  StepOutcome out;

  const Vector u_prop = adaptive_rw_propose(state.u, state.adapt, state.scale, rng);
  const double lp_prop = ctx.model.prior_logdensity_unconstrained(u_prop);
  if (!std::isfinite(lp_prop)) return out;  // zero-prior proposal: certain rejection

  const int s = select_block(state.crn.S(), rng);
  FilterCrn eta(state.crn.blocks[static_cast<std::size_t>(s)].shape());
  eta.fill_standard_normal(rng);
  FilterCrn proposed_block = crn_block_update(
      state.crn.blocks[static_cast<std::size_t>(s)], state.crn.rho_u, eta);

  std::vector<const FilterCrn*> blocks;
  blocks.reserve(state.crn.blocks.size());
  for (const FilterCrn& b : state.crn.blocks) blocks.push_back(&b);
  blocks[static_cast<std::size_t>(s)] = &proposed_block;

  PanelOptions popts;
  popts.trim = ctx.config.trim;
  popts.filter = {ctx.config.sort_payload, rebuild_schedule};
  popts.workers = ctx.config.workers;
  std::vector<ParticleSystem> systems;
  const Vector theta_prop = to_constrained(u_prop, specs);
  const LikelihoodPanel panel =
      evaluate_panel(ctx.model, theta_prop, blocks, state.proposal_schedule,
                     ctx.data, popts, rebuild_schedule ? &systems : nullptr);
  out.ran_filters = true;

  // Symmetric theta proposal: the q-ratio is zero.
  const double log_alpha = mh_log_acceptance(panel.combined, lp_prop,
                                             state.loglik, state.log_prior);
  out.accepted = log_uniform(rng) < log_alpha;
  if (out.accepted) {
    state.u = u_prop;
    state.log_prior = lp_prop;
    state.loglik = panel.combined;
    state.crn.blocks[static_cast<std::size_t>(s)] = std::move(proposed_block);
    if (rebuild_schedule) state.eval_schedule = state.proposal_schedule;
  }

  if (rebuild_schedule && !schedule_frozen(ctx)) {
    std::vector<const ParticleSystem*> usable;
    for (const ParticleSystem& ps : systems)
      if (std::isfinite(ps.loglik)) usable.push_back(&ps);
    // Keep the previous proposal when too few filters survived to fit one.
    if (usable.size() >= 2)
      state.proposal_schedule = build_adpf_schedule(
          usable, *ctx.schedule_rng, ctx.config.adpf_pi, nullptr);
  }
  return out;
}

}  // namespace

StepOutcome mpm_step(ChainState& state, const StepContext& ctx) {
  return mpm_like_step(state, ctx, false);
}

StepOutcome cpm_step(ChainState& state, const StepContext& ctx) {
  return mpm_like_step(state, ctx, false);
}

StepOutcome mpm_adpf_step(ChainState& state, const StepContext& ctx) {
  return mpm_like_step(state, ctx, true);
}

StepOutcome exact_mh_step(ChainState& state, const StepContext& ctx) {
  Rng& rng = *ctx.rng;
  StepOutcome out;
  const Vector u_prop = adaptive_rw_propose(state.u, state.adapt, state.scale, rng);
  const double lp_prop = ctx.model.prior_logdensity_unconstrained(u_prop);
  if (!std::isfinite(lp_prop)) return out;
  const Vector theta_prop = to_constrained(u_prop, ctx.model.params());
  const double ll_prop = (*ctx.surrogate)(theta_prop);
  const double log_alpha =
      mh_log_acceptance(ll_prop, lp_prop, state.loglik, state.log_prior);
  out.accepted = log_uniform(rng) < log_alpha;
  if (out.accepted) {
    state.u = u_prop;
    state.log_prior = lp_prop;
    state.loglik = ll_prop;
  }
  return out;
}

StepOutcome da_mpm_step(ChainState& state, const StepContext& ctx) {
  if (!std::isfinite(state.loglik))
    throw std::logic_error("da_mpm_step: current state has non-finite likelihood");
  Rng& rng = *ctx.rng;
  StepOutcome out;
  out.stage1_accepted = false;

  const Vector u_prop = adaptive_rw_propose(state.u, state.adapt, state.scale, rng);
  const double lp_prop = ctx.model.prior_logdensity_unconstrained(u_prop);
  if (!std::isfinite(lp_prop)) {
    state.scale = garthwaite_scale(state.scale, false, ctx.iteration,
                                   ctx.config.target_accept);
    return out;
  }
  const Vector theta_prop = to_constrained(u_prop, ctx.model.params());
  const double surr_prop = (*ctx.surrogate)(theta_prop);

  // Stage 1: screen with the cheap deterministic approximation.
  const double log_alpha1 =
      mh_log_acceptance(surr_prop, lp_prop, state.surrogate, state.log_prior);
  if (log_uniform(rng) < log_alpha1) {
    out.stage1_accepted = true;
    const int s = select_block(state.crn.S(), rng);
    FilterCrn eta(state.crn.blocks[static_cast<std::size_t>(s)].shape());
    eta.fill_standard_normal(rng);
    FilterCrn proposed_block = crn_block_update(
        state.crn.blocks[static_cast<std::size_t>(s)], state.crn.rho_u, eta);

    std::vector<const FilterCrn*> blocks;
    blocks.reserve(state.crn.blocks.size());
    for (const FilterCrn& b : state.crn.blocks) blocks.push_back(&b);
    blocks[static_cast<std::size_t>(s)] = &proposed_block;

    PanelOptions popts;
    popts.trim = ctx.config.trim;
    popts.filter = {ctx.config.sort_payload, false};
    popts.workers = ctx.config.workers;
    const LikelihoodPanel panel =
        evaluate_panel(ctx.model, theta_prop, blocks, state.proposal_schedule,
                       ctx.data, popts, nullptr);
    out.ran_filters = true;

    // Stage 2: the surrogate cancels out of the composed kernel, restoring
    // detailed balance with respect to the true extended target.
    const double log_alpha2 = mh_log_acceptance(panel.combined, state.surrogate,
                                                state.loglik, surr_prop);
    out.accepted = log_uniform(rng) < log_alpha2;
    if (out.accepted) {
      state.u = u_prop;
      state.log_prior = lp_prop;
      state.loglik = panel.combined;
      state.surrogate = surr_prop;
      state.crn.blocks[static_cast<std::size_t>(s)] = std::move(proposed_block);
    }
  }
  state.scale = garthwaite_scale(state.scale, out.accepted, ctx.iteration,
                                 ctx.config.target_accept);
  return out;
}

std::vector<double> ChainRecord::post_warmup(int param) const {
  std::vector<double> out;
  const long total = static_cast<long>(draws.rows());
  out.reserve(static_cast<std::size_t>(std::max<long>(0, total - warmup - 1)));
  for (long i = warmup + 1; i < total; ++i)
    out.push_back(draws(i, param));
  return out;
}

double ChainRecord::mean_seconds_per_iteration() const {
  if (elapsed_ns.empty()) return 0.0;
  long double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = static_cast<std::size_t>(warmup); i < elapsed_ns.size(); ++i) {
    acc += static_cast<long double>(elapsed_ns[i]);
    ++n;
  }
  if (n == 0) return 0.0;
  return static_cast<double>(acc / n) * 1e-9;
}

ChainRecord run_chain(const SamplerConfig& config, const DisturbanceModel& model,
                      const Dataset& data, const SurrogateOracle* surrogate) {
  config.validate();
  const bool uses_filters = config.kind != SamplerKind::ExactMh;
  const bool adpf = config.kind == SamplerKind::MpmAdpf;
  const bool needs_surrogate = config.kind == SamplerKind::ExactMh ||
                               config.kind == SamplerKind::DaMpm;
  require(!needs_surrogate || surrogate != nullptr,
          "run_chain: this sampler kind needs a surrogate oracle");

  const auto specs = model.params();
  const int dim = static_cast<int>(specs.size());

  Rng chain_rng = make_rng(config.seed, {0x11u});
  Rng schedule_rng = make_rng(config.seed, {0x22u});
  Rng init_rng = make_rng(config.seed, {0x33u});

  ChainRecord record;
  record.warmup = config.warmup;
  record.param_names.reserve(specs.size());
  for (const auto& s : specs) record.param_names.push_back(s.name);
  record.draws.resize(config.iterations + 1, dim);
  record.logliks.reserve(static_cast<std::size_t>(config.iterations) + 1);

  ChainState state;
  if (uses_filters) {
    const CrnShape shape{data.T(), config.N, model.max_disturbance_dim()};
    state.crn = crn_init(config.S, shape, derive_seed(config.seed, {0x44u}),
                         config.rho_u);
  }

  const int max_attempts = config.theta0 ? 1 : 100;
  bool initialized = false;
  for (int attempt = 0; attempt < max_attempts && !initialized; ++attempt) {
    const Vector theta0 =
        config.theta0 ? *config.theta0 : model.sample_prior(init_rng);
    const Vector u0 = to_unconstrained(theta0, specs);
    const double lp0 = model.prior_logdensity_unconstrained(u0);
    if (!std::isfinite(lp0)) continue;
    state.u = u0;
    state.log_prior = lp0;
    state.proposal_schedule = AdpfSchedule::bootstrap_mode();
    if (uses_filters) {
      PanelOptions popts;
      popts.trim = config.trim;
      popts.filter = {config.sort_payload, adpf};
      popts.workers = config.workers;
      std::vector<ParticleSystem> systems;
      const LikelihoodPanel panel =
          evaluate_panel(model, theta0, state.crn, state.proposal_schedule,
                         data, popts, adpf ? &systems : nullptr);
      ++record.filter_panel_evaluations;
      if (!std::isfinite(panel.combined)) continue;
      state.loglik = panel.combined;
      state.eval_schedule = state.proposal_schedule;
      if (adpf) {
        std::vector<const ParticleSystem*> usable;
        for (const ParticleSystem& ps : systems)
          if (std::isfinite(ps.loglik)) usable.push_back(&ps);
        if (usable.size() >= 2)
          state.proposal_schedule = build_adpf_schedule(
              usable, schedule_rng, config.adpf_pi, nullptr);
      }
    } else {
      const double ll0 = (*surrogate)(theta0);
      if (!std::isfinite(ll0)) continue;
      state.loglik = ll0;
    }
    if (config.kind == SamplerKind::DaMpm) state.surrogate = (*surrogate)(theta0);
    initialized = true;
  }
  if (!initialized)
    throw initialization_failure(
        "run_chain: no finite initial likelihood after 100 attempts");

  state.adapt.add(state.u);
  record.draws.row(0) = to_constrained(state.u, specs).transpose();
  record.logliks.push_back(state.loglik);
  record.accepted.push_back(1);
  record.stage1_accepted.push_back(1);
  record.elapsed_ns.push_back(0);

  for (long p = 1; p <= config.iterations; ++p) {
    const auto t0 = std::chrono::steady_clock::now();
    StepContext ctx{model, data, config, surrogate, &chain_rng, &schedule_rng, p};
    StepOutcome outcome;
    switch (config.kind) {
      case SamplerKind::Mpm: outcome = mpm_step(state, ctx); break;
      case SamplerKind::MpmAdpf: outcome = mpm_adpf_step(state, ctx); break;
      case SamplerKind::DaMpm: outcome = da_mpm_step(state, ctx); break;
      case SamplerKind::Cpm: outcome = cpm_step(state, ctx); break;
      case SamplerKind::ExactMh: outcome = exact_mh_step(state, ctx); break;
    }
    const auto t1 = std::chrono::steady_clock::now();
    if (outcome.ran_filters) ++record.filter_panel_evaluations;
    if (!(config.freeze_adaptation_after_warmup && p > config.warmup))
      state.adapt.add(state.u);

    record.draws.row(p) = to_constrained(state.u, specs).transpose();
    record.logliks.push_back(state.loglik);
    record.accepted.push_back(outcome.accepted ? 1 : 0);
    record.stage1_accepted.push_back(outcome.stage1_accepted ? 1 : 0);
    record.elapsed_ns.push_back(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  }
  return record;
}

}  // namespace bcpm
