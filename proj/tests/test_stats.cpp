#include <doctest.h>

#include <cmath>
#include <random>

#include "bcpm/rng.hpp"
#include "bcpm/stats.hpp"

using namespace bcpm;

TEST_CASE("logsumexp basics") {
  std::vector<double> v{std::log(1.0), std::log(2.0), std::log(3.0)};
  CHECK(logsumexp(v) == doctest::Approx(std::log(6.0)).epsilon(1e-14));

  std::vector<double> shifted{1e6, 1e6 + std::log(2.0)};
  CHECK(logsumexp(shifted) == doctest::Approx(1e6 + std::log(3.0)).epsilon(1e-12));

  std::vector<double> all_inf{kNegInf, kNegInf};
  CHECK(logsumexp(all_inf) == kNegInf);
}

TEST_CASE("gamma log-density closed forms") {
  // Gamma(1,1) is Exp(1); Gamma(0.5,0.5) at 1 is exp(-1/2)/sqrt(2 pi).
  CHECK(gamma_logpdf(1.0, 1.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(gamma_logpdf(1.0, 0.5, 0.5) ==
        doctest::Approx(-0.5 - 0.5 * kLog2Pi).epsilon(1e-12));
  CHECK(gamma_logpdf(-0.1, 0.5, 0.5) == kNegInf);
}

TEST_CASE("normal cdf endpoints and symmetry") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021).epsilon(1e-6));
  CHECK(normal_cdf(-8.0) > 0.0);
}

TEST_CASE("normal cdf matches the erfc reference across the range") {
  for (double x = -12.0; x <= 12.0; x += 0.0137) {
    const double reference = 0.5 * std::erfc(-x * M_SQRT1_2);
    CHECK(std::abs(normal_cdf(x) - reference) < 1e-14);
  }
  CHECK(std::abs(normal_cdf(-30.0) - 0.5 * std::erfc(30.0 * M_SQRT1_2)) <
        0.5 * std::erfc(30.0 * M_SQRT1_2) * 1e-10);
}

TEST_CASE("quantile interpolation") {
  std::vector<double> xs{1, 2, 3, 4, 5};
  CHECK(quantile(xs, 0.0) == 1.0);
  CHECK(quantile(xs, 1.0) == 5.0);
  CHECK(quantile(xs, 0.5) == 3.0);
  CHECK(quantile(xs, 0.25) == doctest::Approx(2.0));
}

TEST_CASE("two-sample KS distance on disjoint and identical samples") {
  std::vector<double> a{1, 2, 3};
  std::vector<double> b{10, 11, 12};
  CHECK(ks_two_sample(a, b) == doctest::Approx(1.0));
  CHECK(ks_two_sample(a, a) == doctest::Approx(0.0));
}

TEST_CASE("one-sample KS against N(0,1) accepts normal draws") {
  Rng rng = make_rng(123, {1});
  std::vector<double> xs(100000);
  fill_standard_normal(rng, xs.data(), xs.size());
  const double d = ks_statistic_std_normal(xs);
  CHECK(ks_pvalue(d, xs.size()) > 0.01);
}

TEST_CASE("one-sample KS rejects shifted draws") {
  Rng rng = make_rng(123, {2});
  std::vector<double> xs(100000);
  fill_standard_normal(rng, xs.data(), xs.size());
  for (double& x : xs) x += 0.05;
  const double d = ks_statistic_std_normal(xs);
  CHECK(ks_pvalue(d, xs.size()) < 0.01);
}

TEST_CASE("sample correlation of an exact linear relation") {
  std::vector<double> xs{1, 2, 3, 4};
  std::vector<double> ys{2, 4, 6, 8};
  CHECK(sample_correlation(xs, ys) == doctest::Approx(1.0));
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
}
