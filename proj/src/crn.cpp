#include "bcpm/crn.hpp"

#include <algorithm>
#include <cmath>

#include "bcpm/stats.hpp"

namespace bcpm {

CrnBlockSet crn_init(int S, const CrnShape& shape, std::uint64_t seed,
                     double rho_u) {
  require(S >= 1, "crn_init: need at least one block");
  require(rho_u >= 0.0 && rho_u <= 1.0, "crn_init: rho_u outside [0,1]");
  CrnBlockSet set;
  set.rho_u = rho_u;
  set.blocks.reserve(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    FilterCrn block(shape);
    Rng rng = make_rng(seed, {0xc7u, static_cast<std::uint64_t>(s)});
    block.fill_standard_normal(rng);
    set.blocks.push_back(std::move(block));
  }
  return set;
}

int select_block(int S, Rng& rng) {
  require(S >= 1, "select_block: need at least one block");
  return std::uniform_int_distribution<int>(0, S - 1)(rng);
}

FilterCrn crn_block_update(const FilterCrn& u, double rho, const FilterCrn& eta) {
  require(u.shape() == eta.shape(), "crn_block_update: shape mismatch");
  require(rho >= 0.0 && rho <= 1.0, "crn_block_update: rho outside [0,1]");
  FilterCrn out(u.shape());
  const double w = std::sqrt(1.0 - rho * rho);
  const double* a = u.data();
  const double* b = eta.data();
  double* o = out.data();
  for (std::size_t i = 0; i < u.size(); ++i) o[i] = rho * a[i] + w * b[i];
  return out;
}

double reversibility_check(const FilterCrn& u, const FilterCrn& u_prime,
                           double rho) {
  require(u.shape() == u_prime.shape(), "reversibility_check: shape mismatch");
  if (rho == 1.0) {
    for (std::size_t i = 0; i < u.size(); ++i)
      require(u.data()[i] == u_prime.data()[i],
              "reversibility_check: degenerate kernel with u != u'");
    return 0.0;
  }
  const double var = 1.0 - rho * rho;
  double gap = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u.data()[i];
    const double b = u_prime.data()[i];
    // log q(b|a) + log p(a) - log q(a|b) - log p(b); analytically zero per
    // element, summed so only rounding remains.
    gap += normal_logpdf(b, rho * a, var) + normal_logpdf(a, 0.0, 1.0) -
           normal_logpdf(a, rho * b, var) - normal_logpdf(b, 0.0, 1.0);
  }
  return std::abs(gap);
}

double trimmed_mean_loglik(std::vector<double> logliks, double trim) {
  const int S = static_cast<int>(logliks.size());
  require(S >= 1, "trimmed_mean_loglik: empty panel");
  require(trim >= 0.0 && trim <= 0.5, "trimmed_mean_loglik: trim outside [0, 0.5]");
  std::sort(logliks.begin(), logliks.end());
  if (trim == 0.5) {
    if (S % 2 == 1) return logliks[static_cast<std::size_t>(S / 2)];
    const double two[] = {logliks[static_cast<std::size_t>(S / 2 - 1)],
                          logliks[static_cast<std::size_t>(S / 2)]};
    return logsumexp(std::span<const double>(two, 2)) - std::log(2.0);
  }
  const int k = static_cast<int>(std::floor(trim * S));
  const int kept = S - 2 * k;
  const std::span<const double> survivors(logliks.data() + k,
                                          static_cast<std::size_t>(kept));
  const double lse = logsumexp(survivors);
  if (!std::isfinite(lse)) return kNegInf;  // total degeneracy
  return lse - std::log(static_cast<double>(kept));
}

}  // namespace bcpm
