#include "bcpm/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "bcpm/parallel.hpp"
#include "bcpm/stats.hpp"

namespace bcpm {

IactEstimate estimate_iact(std::span<const double> series) {
  const std::size_t n = series.size();
  require(n >= 100, "estimate_iact: need at least 100 draws");
  const double m = mean(series);

  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = series[i] - m;

  auto gamma = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += centered[t] * centered[t + lag];
    return acc / static_cast<double>(n);
  };

  const double g0 = gamma(0);
  if (g0 <= 0.0) return {static_cast<double>(n), true};

  // Geyer: sum the pairs Gamma_m = rho(2m) + rho(2m+1) while positive,
  // clipping to keep the sequence non-increasing.
  double total = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t mpair = 0; 2 * mpair + 1 < n; ++mpair) {
    double g = (gamma(2 * mpair) + gamma(2 * mpair + 1)) / g0;
    if (g <= 0.0) break;
    g = std::min(g, prev);
    total += g;
    prev = g;
  }
  return {std::max(0.0, 2.0 * total - 1.0), false};
}

IfReport if_report(const ChainRecord& chain, const ChainRecord* benchmark) {
  IfReport rep;
  rep.params = chain.param_names;
  const int dim = static_cast<int>(chain.param_names.size());
  double acc = 0.0;
  rep.if_max = 0.0;
  for (int p = 0; p < dim; ++p) {
    const std::vector<double> series = chain.post_warmup(p);
    const IactEstimate est = estimate_iact(series);
    rep.iact_values.push_back(est.value);
    rep.any_degenerate = rep.any_degenerate || est.degenerate;
    acc += est.value;
    rep.if_max = std::max(rep.if_max, est.value);
  }
  rep.if_mean = acc / dim;
  rep.ct_seconds = chain.mean_seconds_per_iteration();
  rep.tnif_max = rep.if_max * rep.ct_seconds;
  rep.tnif_mean = rep.if_mean * rep.ct_seconds;

  if (benchmark) {
    require(benchmark->param_names == chain.param_names,
            "if_report: benchmark chain has a different parameter set");
    const IfReport base = if_report(*benchmark, nullptr);
    rep.rtnif_max = rep.tnif_max / base.tnif_max;
    rep.rtnif_mean = rep.tnif_mean / base.tnif_mean;
  }
  return rep;
}

const VarianceCell* VarianceTable::find(int N, int S, double trim) const {
  for (const VarianceCell& c : cells)
    if (c.N == N && c.S == S && std::abs(c.trim - trim) < 1e-12) return &c;
  return nullptr;
}

VarianceTable loglik_variance_experiment(
    const DisturbanceModel& model, const Dataset& data, const Vector& theta,
    const std::vector<int>& particle_counts, const std::vector<int>& filter_counts,
    const std::vector<double>& trims, int replications, std::uint64_t seed,
    int workers, SortPayload payload) {
  require(replications >= 2, "variance experiment: need at least 2 replications");
  VarianceTable table;
  table.replications = replications;
  table.seed = seed;
  const AdpfSchedule bootstrap = AdpfSchedule::bootstrap_mode();
  const FilterOptions fopts{payload, false};

  for (int N : particle_counts) {
    for (int S : filter_counts) {
      const CrnShape shape{data.T(), N, model.max_disturbance_dim()};
      // combined[trim][r]
      std::vector<std::vector<double>> combined(
          trims.size(), std::vector<double>(static_cast<std::size_t>(replications)));
      parallel_for(replications, workers, [&](int r) {
        std::vector<double> panel(static_cast<std::size_t>(S));
        FilterCrn block(shape);
        for (int s = 0; s < S; ++s) {
          Rng rng = make_rng(seed, {static_cast<std::uint64_t>(N),
                                    static_cast<std::uint64_t>(S),
                                    static_cast<std::uint64_t>(r),
                                    static_cast<std::uint64_t>(s)});
          block.fill_standard_normal(rng);
          try {
            panel[static_cast<std::size_t>(s)] =
                run_filter(model, theta, block, bootstrap, data, fopts).loglik;
          } catch (const filter_degenerate_error&) {
            panel[static_cast<std::size_t>(s)] = kNegInf;
          }
        }
        for (std::size_t k = 0; k < trims.size(); ++k)
          combined[k][static_cast<std::size_t>(r)] =
              trimmed_mean_loglik(panel, trims[k]);
      });
      for (std::size_t k = 0; k < trims.size(); ++k)
        table.cells.push_back(
            {N, S, trims[k], sample_variance(combined[k])});
    }
  }
  return table;
}

double correlation_experiment(const DisturbanceModel& model, const Dataset& data,
                              const Vector& theta, const Vector& theta_prime,
                              int S, int N, double trim, double rho_u,
                              int pairs, std::uint64_t seed, int workers,
                              SortPayload payload) {
  require(pairs >= 2, "correlation experiment: need at least 2 pairs");
  const CrnShape shape{data.T(), N, model.max_disturbance_dim()};
  const AdpfSchedule bootstrap = AdpfSchedule::bootstrap_mode();
  const FilterOptions fopts{payload, false};

  std::vector<double> first(static_cast<std::size_t>(pairs));
  std::vector<double> second(static_cast<std::size_t>(pairs));
  parallel_for(pairs, workers, [&](int r) {
    CrnBlockSet crn = crn_init(
        S, shape, derive_seed(seed, {0xabu, static_cast<std::uint64_t>(r)}), rho_u);
    std::vector<double> panel(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
      try {
        panel[static_cast<std::size_t>(s)] =
            run_filter(model, theta, crn.blocks[static_cast<std::size_t>(s)],
                       bootstrap, data, fopts)
                .loglik;
      } catch (const filter_degenerate_error&) {
        panel[static_cast<std::size_t>(s)] = kNegInf;
      }
    }
    first[static_cast<std::size_t>(r)] = trimmed_mean_loglik(panel, trim);

    Rng step_rng = make_rng(seed, {0xcdu, static_cast<std::uint64_t>(r)});
    const int s_updated = select_block(S, step_rng);
    FilterCrn eta(shape);
    eta.fill_standard_normal(step_rng);
    crn.blocks[static_cast<std::size_t>(s_updated)] = crn_block_update(
        crn.blocks[static_cast<std::size_t>(s_updated)], rho_u, eta);
    for (int s = 0; s < S; ++s) {
      try {
        panel[static_cast<std::size_t>(s)] =
            run_filter(model, theta_prime,
                       crn.blocks[static_cast<std::size_t>(s)], bootstrap, data,
                       fopts)
                .loglik;
      } catch (const filter_degenerate_error&) {
        panel[static_cast<std::size_t>(s)] = kNegInf;
      }
    }
    second[static_cast<std::size_t>(r)] = trimmed_mean_loglik(panel, trim);
  });
  return sample_correlation(first, second);
}

PosteriorSummary posterior_summary(const std::vector<const ChainRecord*>& chains) {
  require(!chains.empty(), "posterior_summary: no chains");
  const auto& names = chains.front()->param_names;
  for (const ChainRecord* c : chains)
    require(c->param_names == names,
            "posterior_summary: chains have different parameter sets");

  PosteriorSummary summary;
  summary.params = names;
  summary.chain_count = static_cast<int>(chains.size());
  const int dim = static_cast<int>(names.size());
  for (int p = 0; p < dim; ++p) {
    std::vector<double> pooled;
    std::vector<double> chain_means;
    for (const ChainRecord* c : chains) {
      const std::vector<double> draws = c->post_warmup(p);
      require(!draws.empty(), "posterior_summary: chain has no post-warmup draws");
      chain_means.push_back(mean(draws));
      pooled.insert(pooled.end(), draws.begin(), draws.end());
    }
    summary.mean.push_back(mean(pooled));
    summary.q025.push_back(quantile(pooled, 0.025));
    summary.q975.push_back(quantile(pooled, 0.975));
    if (chains.size() > 1)
      summary.se_mean.push_back(std::sqrt(sample_variance(chain_means)));
  }
  return summary;
}

}  // namespace bcpm
