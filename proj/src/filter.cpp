#include "bcpm/filter.hpp"

#include <cmath>

#include "bcpm/parallel.hpp"
#include "bcpm/stats.hpp"

namespace bcpm {

namespace {

double mixture_logpdf(const Vector& eps, const Vector& mu, const Matrix& chol,
                      double log_det, double pi) {
  const double n = static_cast<double>(eps.size());
  const double log_a = -0.5 * (n * kLog2Pi + eps.squaredNorm());
  if (pi >= 1.0) return log_a;
  const Vector y = chol.triangularView<Eigen::Lower>().solve(eps - mu);
  const double log_b = -0.5 * (n * kLog2Pi + log_det + y.squaredNorm());
  if (pi <= 0.0) return log_b;
  const double hi = std::max(log_a, log_b);
  return hi + std::log(pi * std::exp(log_a - hi) +
                       (1.0 - pi) * std::exp(log_b - hi));
}

// Clamp Phi output away from {0,1}; resampling needs open-interval uniforms.
double phi_open(double z) {
  const double u = normal_cdf(z);
  return std::clamp(u, 1e-300, 1.0 - 1e-16);
}

}  // namespace

std::pair<Vector, double> defensive_mixture_sample(const Vector& u_eps,
                                                   double u_mix,
                                                   const Vector& mu,
                                                   const Matrix& Sigma,
                                                   double pi) {
  require(pi >= 0.0 && pi <= 1.0, "defensive_mixture_sample: pi outside [0,1]");
  require(mu.size() == u_eps.size() && Sigma.rows() == u_eps.size() &&
              Sigma.cols() == u_eps.size(),
          "defensive_mixture_sample: dimension mismatch");
  Eigen::LLT<Matrix> llt(Sigma);
  require(llt.info() == Eigen::Success,
          "defensive_mixture_sample: Sigma is not positive definite");
  const Matrix L = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));

  Vector eps;
  if (normal_cdf(u_mix) < pi)
    eps = u_eps;  // prior component
  else
    eps = mu + L * u_eps;
  return {eps, mixture_logpdf(eps, mu, L, log_det, pi)};
}

ParticleSystem run_filter(const DisturbanceModel& model, const Vector& theta,
                          const FilterCrn& crn, const AdpfSchedule& schedule,
                          const Dataset& data, const FilterOptions& opts) {
  const int T = data.T();
  const int N = crn.shape().N;
  const int d = model.state_dim();
  const int dim_max = model.max_disturbance_dim();
  require(T >= 1 && N >= 1, "run_filter: empty data or particle set");
  require(crn.shape().T == T && crn.shape().n_e == dim_max,
          "run_filter: crn shape does not match (T, N, n_e)");
  if (!schedule.bootstrap())
    require(schedule.T() == T, "run_filter: schedule length does not match T");

  ParticleSystem ps;
  ps.T = T;
  ps.N = N;
  ps.loglik = 0.0;
  ps.per_time_log_mean_weight.reserve(static_cast<std::size_t>(T));
  if (opts.store_history) {
    ps.disturbances.resize(static_cast<std::size_t>(T));
    ps.states.resize(static_cast<std::size_t>(T));
    ps.ancestors.resize(static_cast<std::size_t>(T - 1));
    ps.norm_weights.resize(static_cast<std::size_t>(T));
  }

  Matrix prev_states(d, N), cur_states(d, N), resampled(d, N);
  Matrix eps_t(dim_max, N), prev_eps;
  Vector log_w(N), log_obs(N), weights(N);
  Vector norm_w(N), cum(N), dist2;
  std::vector<int> zeta, anc(static_cast<std::size_t>(N));
  const bool sort_disturbance = opts.sort_payload == SortPayload::Disturbance;
  if (sort_disturbance) prev_eps.resize(dim_max, N);

  prev_states.colwise() = model.initial_state();

  for (int t = 1; t <= T; ++t) {
    const int dim_t = model.disturbance_dim(t);
    const Matrix* source = &prev_states;
    bool used_mixture = false;
    if (t >= 2) {
      // Sort last step's particles, invert the sorted-weight CDF at the CRN
      // uniforms, and map the ancestors back to original indices.  This is
      // correlated_multinomial_resample + unsort_ancestors, fused to avoid
      // per-step copies of the sorted payload.
      const int prev_dim = model.disturbance_dim(t - 1);
      if (sort_disturbance)
        euclidean_sort_order(prev_eps.topRows(prev_dim), zeta, dist2);
      else
        euclidean_sort_order(prev_states, zeta, dist2);
      double acc = 0.0;
      for (int j = 0; j < N; ++j) {
        acc += norm_w[zeta[static_cast<std::size_t>(j)]];
        cum[j] = acc;
      }
      cum[N - 1] = 1.0;
      const auto z_res = crn.resample(t);
      for (int i = 0; i < N; ++i) {
        const double u = phi_open(z_res[i]);
        const double* pos = std::lower_bound(cum.data(), cum.data() + N, u);
        anc[static_cast<std::size_t>(i)] =
            zeta[static_cast<std::size_t>(pos - cum.data())];
        resampled.col(i) = prev_states.col(anc[static_cast<std::size_t>(i)]);
      }
      source = &resampled;
      if (opts.store_history) ps.ancestors[static_cast<std::size_t>(t - 2)] = anc;
    }

    // Propose disturbances and collect the importance correction
    // log p(eps) - log m(eps); zero in bootstrap mode where m = p.
    const auto u_eps = crn.eps(t);
    if (schedule.bootstrap()) {
      log_w.setZero();
    } else {
      used_mixture = true;
      const Vector& mu = schedule.mean[static_cast<std::size_t>(t - 1)];
      const Matrix& L = schedule.chol[static_cast<std::size_t>(t - 1)];
      const double log_det = schedule.log_det[static_cast<std::size_t>(t - 1)];
      require(mu.size() == dim_t, "run_filter: schedule dimension mismatch");
      const auto u_mix = crn.mixture(t);
      const double n_dim = static_cast<double>(dim_t);
      for (int i = 0; i < N; ++i) {
        const auto u_i = u_eps.col(i).head(dim_t);
        double log_a, log_b;
        if (normal_cdf(u_mix[i]) < schedule.pi) {
          eps_t.col(i).head(dim_t) = u_i;
          log_a = -0.5 * (n_dim * kLog2Pi + u_i.squaredNorm());
          const Vector y = L.triangularView<Eigen::Lower>().solve(
              eps_t.col(i).head(dim_t) - mu);
          log_b = -0.5 * (n_dim * kLog2Pi + log_det + y.squaredNorm());
        } else {
          eps_t.col(i).head(dim_t).noalias() = L.triangularView<Eigen::Lower>() * u_i;
          eps_t.col(i).head(dim_t) += mu;
          log_a = -0.5 * (n_dim * kLog2Pi +
                          eps_t.col(i).head(dim_t).squaredNorm());
          log_b = -0.5 * (n_dim * kLog2Pi + log_det + u_i.squaredNorm());
        }
        const double hi = std::max(log_a, log_b);
        const double log_m =
            hi + std::log(schedule.pi * std::exp(log_a - hi) +
                          (1.0 - schedule.pi) * std::exp(log_b - hi));
        log_w[i] = log_a - log_m;  // log p(eps) - log m(eps)
      }
    }

    if (used_mixture)
      model.transition(t, *source, eps_t, theta, cur_states);
    else
      model.transition(t, *source, u_eps, theta, cur_states);
    model.obs_logdensity(data.observations.row(t - 1).transpose(), cur_states,
                         theta, log_obs, &ps.telemetry);
    log_w += log_obs;

    const double max_lw = log_w.maxCoeff();
    if (!(max_lw > kNegInf)) {
      ++ps.telemetry.degeneracies;
      throw filter_degenerate_error(
          t, "run_filter: all particle weights underflowed at t=" + std::to_string(t));
    }
    weights = (log_w.array() - max_lw).exp();
    const double wsum = weights.sum();
    const double log_mean_w = max_lw + std::log(wsum) - std::log(double(N));
    ps.per_time_log_mean_weight.push_back(log_mean_w);
    ps.loglik += log_mean_w;
    norm_w = weights / wsum;

    if (opts.store_history) {
      auto& slot = ps.disturbances[static_cast<std::size_t>(t - 1)];
      if (used_mixture)
        slot = eps_t.topRows(dim_t);
      else
        slot = u_eps.topRows(dim_t);
      ps.states[static_cast<std::size_t>(t - 1)] = cur_states;
      ps.norm_weights[static_cast<std::size_t>(t - 1)] = norm_w;
    }
    if (sort_disturbance) {
      if (used_mixture)
        prev_eps.topRows(dim_t) = eps_t.topRows(dim_t);
      else
        prev_eps.topRows(dim_t) = u_eps.topRows(dim_t);
    }
    std::swap(prev_states, cur_states);
  }
  return ps;
}

std::vector<Vector> ancestral_trace(const ParticleSystem& ps, int terminal_index) {
  require(!ps.disturbances.empty(), "ancestral_trace: system carries no history");
  require(terminal_index >= 0 && terminal_index < ps.N,
          "ancestral_trace: terminal index out of range");
  const int T = ps.T;
  std::vector<int> b(static_cast<std::size_t>(T));
  b[static_cast<std::size_t>(T - 1)] = terminal_index;
  for (int t = T - 2; t >= 0; --t)
    b[static_cast<std::size_t>(t)] =
        ps.ancestors[static_cast<std::size_t>(t)]
                    [static_cast<std::size_t>(b[static_cast<std::size_t>(t + 1)])];
  std::vector<Vector> traj(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    traj[static_cast<std::size_t>(t)] =
        ps.disturbances[static_cast<std::size_t>(t)].col(b[static_cast<std::size_t>(t)]);
  return traj;
}

AdpfSchedule build_adpf_schedule(const std::vector<const ParticleSystem*>& systems,
                                 Rng& rng, double pi, FilterTelemetry* telemetry) {
  const int S = static_cast<int>(systems.size());
  require(S >= 2, "build_adpf_schedule: need at least two filters");
  require(pi > 0.0 && pi <= 1.0, "build_adpf_schedule: pi outside (0,1]");
  const int T = systems[0]->T;

  // One smoothing trajectory per filter via ancestral tracing.
  std::vector<std::vector<Vector>> trajs;
  trajs.reserve(static_cast<std::size_t>(S));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const ParticleSystem* ps : systems) {
    require(ps->T == T, "build_adpf_schedule: mismatched filter lengths");
    const Vector& wT = ps->norm_weights.back();
    const double u = unif(rng);
    int j = 0;
    double acc = 0.0;
    for (; j < ps->N - 1; ++j) {
      acc += wT[j];
      if (acc >= u) break;
    }
    trajs.push_back(ancestral_trace(*ps, j));
  }

  AdpfSchedule schedule;
  schedule.pi = pi;
  schedule.mean.resize(static_cast<std::size_t>(T));
  schedule.chol.resize(static_cast<std::size_t>(T));
  schedule.log_det.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const int n = static_cast<int>(trajs[0][static_cast<std::size_t>(t)].size());
    Vector mu = Vector::Zero(n);
    for (int s = 0; s < S; ++s) mu += trajs[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
    mu /= static_cast<double>(S);
    Matrix Sigma = Matrix::Zero(n, n);
    for (int s = 0; s < S; ++s) {
      const Vector r = trajs[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] - mu;
      Sigma.noalias() += r * r.transpose();
    }
    Sigma /= static_cast<double>(S - 1);

    double jitter = 1e-8 * (Sigma.trace() + n) / static_cast<double>(n);
    Eigen::LLT<Matrix> llt;
    for (int attempt = 0;; ++attempt) {
      llt.compute(Sigma + jitter * Matrix::Identity(n, n));
      if (llt.info() == Eigen::Success) break;
      require(attempt < 3, "build_adpf_schedule: covariance not PD after jitter");
      jitter *= 10.0;
      if (telemetry) ++telemetry->jitter_escalations;
    }
    const Matrix L = llt.matrixL();
    double log_det = 0.0;
    for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(L(i, i));
    schedule.mean[static_cast<std::size_t>(t)] = std::move(mu);
    schedule.chol[static_cast<std::size_t>(t)] = L;
    schedule.log_det[static_cast<std::size_t>(t)] = log_det;
  }
  return schedule;
}

LikelihoodPanel evaluate_panel(const DisturbanceModel& model, const Vector& theta,
                               const std::vector<const FilterCrn*>& blocks,
                               const AdpfSchedule& schedule, const Dataset& data,
                               const PanelOptions& opts,
                               std::vector<ParticleSystem>* systems_out) {
  const int S = static_cast<int>(blocks.size());
  require(S >= 1, "evaluate_panel: empty block set");
  LikelihoodPanel panel;
  panel.trim = opts.trim;
  panel.per_filter.assign(static_cast<std::size_t>(S), kNegInf);
  std::vector<ParticleSystem> local;
  std::vector<ParticleSystem>& systems = systems_out ? *systems_out : local;
  systems.assign(static_cast<std::size_t>(S), ParticleSystem{});

  parallel_for(S, opts.workers, [&](int s) {
    try {
      systems[static_cast<std::size_t>(s)] =
          run_filter(model, theta, *blocks[static_cast<std::size_t>(s)],
                     schedule, data, opts.filter);
      panel.per_filter[static_cast<std::size_t>(s)] =
          systems[static_cast<std::size_t>(s)].loglik;
    } catch (const filter_degenerate_error&) {
      panel.per_filter[static_cast<std::size_t>(s)] = kNegInf;
      systems[static_cast<std::size_t>(s)].loglik = kNegInf;
    }
  });

  for (const ParticleSystem& ps : systems) panel.telemetry += ps.telemetry;
  panel.combined = trimmed_mean_loglik(panel.per_filter, opts.trim);
  return panel;
}

LikelihoodPanel evaluate_panel(const DisturbanceModel& model, const Vector& theta,
                               const CrnBlockSet& crn, const AdpfSchedule& schedule,
                               const Dataset& data, const PanelOptions& opts,
                               std::vector<ParticleSystem>* systems_out) {
  std::vector<const FilterCrn*> blocks;
  blocks.reserve(crn.blocks.size());
  for (const FilterCrn& b : crn.blocks) blocks.push_back(&b);
  return evaluate_panel(model, theta, blocks, schedule, data, opts, systems_out);
}

}  // namespace bcpm
