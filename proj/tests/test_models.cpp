#include <doctest.h>

#include <cmath>

#include "bcpm/lgss.hpp"
#include "bcpm/stats.hpp"
#include "bcpm/svm.hpp"

using namespace bcpm;

TEST_CASE("lgss transition matrix entries") {
  const Matrix A = build_lgss_A(0.4, 2);
  CHECK(A(0, 0) == doctest::Approx(0.4));
  CHECK(A(0, 1) == doctest::Approx(0.16));
  CHECK(A(1, 0) == doctest::Approx(0.16));
  CHECK(A(1, 1) == doctest::Approx(0.4));

  CHECK(build_lgss_A(0.0, 3).isZero());
  CHECK(build_lgss_A(0.4, 1)(0, 0) == doctest::Approx(0.4));
  CHECK_THROWS_AS(build_lgss_A(0.4, 0), std::invalid_argument);
}

TEST_CASE("lgss transition map") {
  CHECK(lgss_transition(Vector::Zero(2), Vector::Zero(2), 0.4).isZero());

  Vector z1(1), e1(1);
  z1 << 1.0;
  e1 << 0.5;
  CHECK(lgss_transition(z1, e1, 0.4)[0] == doctest::Approx(0.9));

  Vector z2(2), e2(2);
  z2 << 1.0, 1.0;
  e2 << 0.0, 0.0;
  const Vector out = lgss_transition(z2, e2, 0.4);
  CHECK(out[0] == doctest::Approx(0.56));
  CHECK(out[1] == doctest::Approx(0.56));

  CHECK_THROWS_AS(lgss_transition(z2, e1, 0.4), std::invalid_argument);
}

TEST_CASE("lgss observation log-density") {
  Vector zero1 = Vector::Zero(1);
  CHECK(lgss_obs_logdensity(zero1, zero1) ==
        doctest::Approx(-0.5 * kLog2Pi).epsilon(1e-12));

  Vector one(1);
  one << 1.0;
  CHECK(lgss_obs_logdensity(one, one) == doctest::Approx(-0.5 * kLog2Pi));

  Vector y(2), z(2);
  y << 1.0, 0.0;
  z << 0.0, 0.0;
  CHECK(lgss_obs_logdensity(y, z) == doctest::Approx(-kLog2Pi - 0.5).epsilon(1e-12));
}

TEST_CASE("svm euler step") {
  SvmParams frozen{2.0, 1.81, 0.0, 0.0, 3};
  CHECK(svm_euler_step(std::log(1.81), 0.0, frozen) ==
        doctest::Approx(std::log(1.81)).epsilon(1e-14));

  SvmParams paper{2.0, 1.81, 0.38, 0.0, 3};
  CHECK(svm_euler_step(0.0, 0.0, paper) ==
        doctest::Approx((2.0 * 0.81 - 0.19) / 3.0).epsilon(1e-12));

  SvmParams driftless{0.0, 1.0, 0.38, 0.0, 3};
  CHECK(svm_euler_step(0.0, 1.0, driftless) ==
        doctest::Approx(-0.19 / 3.0 + std::sqrt(0.38 / 3.0)).epsilon(1e-12));
}

TEST_CASE("svm transition map") {
  SvmParams p{2.0, 1.81, 0.38, 0.0, 1};
  Vector h(1), eps(1);
  h << 0.3;
  eps << -0.7;
  CHECK(svm_transition_map(h, eps, p)[0] ==
        doctest::Approx(svm_euler_step(0.3, -0.7, p)));

  // Diffusion-free iteration is deterministic regardless of eps.
  SvmParams det{1.5, 2.0, 0.0, 0.0, 4};
  Vector h0(1), e1(4), e2(4);
  h0 << -0.2;
  e1 << 1.0, -2.0, 0.5, 3.0;
  e2 << 0.0, 0.0, 0.0, 0.0;
  CHECK(svm_transition_map(h0, e1, det)[0] ==
        doctest::Approx(svm_transition_map(h0, e2, det)[0]));

  // Coordinate permutation equivariance, d = 2, M = 3.
  SvmParams p2{2.0, 1.81, 0.38, 0.0, 3};
  Vector h2(2);
  h2 << 0.1, -0.4;
  Vector block(6);
  block << 0.3, -1.2, 0.8, 0.1, -0.5, 2.0;  // substep-major: (e11,e12),(e21,e22),...
  Vector h2_swapped(2);
  h2_swapped << -0.4, 0.1;
  Vector block_swapped(6);
  block_swapped << -1.2, 0.3, 0.1, 0.8, 2.0, -0.5;
  const Vector a = svm_transition_map(h2, block, p2);
  const Vector b = svm_transition_map(h2_swapped, block_swapped, p2);
  CHECK(a[0] == doctest::Approx(b[1]).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(b[0]).epsilon(1e-14));

  CHECK_THROWS_AS(svm_transition_map(h2, Vector::Zero(5), p2), std::invalid_argument);
}

TEST_CASE("svm observation log-density") {
  Vector zeros2 = Vector::Zero(2);
  CHECK(svm_obs_logdensity(zeros2, zeros2, 0.0) == doctest::Approx(-kLog2Pi));

  // d = 1: mean psi * h with h = 0 and unit variance.
  Vector y(1), h(1);
  h << 0.0;
  y << 0.0;
  CHECK(svm_obs_logdensity(y, h, 0.7) == doctest::Approx(-0.5 * kLog2Pi));

  Vector h2(2);
  h2 << std::log(4.0), 0.0;
  CHECK(svm_obs_logdensity(zeros2, h2, 0.0) ==
        doctest::Approx(-kLog2Pi - 0.5 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("prior log-densities") {
  SvmModel svm(2, 3);
  Vector theta(4);
  theta << 1.0, 1.0, 1.0, 0.0;
  const double expected = gamma_logpdf(1.0, 1.0, 1.0) + gamma_logpdf(1.0, 1.0, 1.0) +
                          gamma_logpdf(1.0, 0.5, 0.5) + normal_logpdf(0.0, 0.0, 1.0);
  CHECK(svm.prior_logdensity(theta) == doctest::Approx(expected).epsilon(1e-14));

  theta[2] = -0.1;
  CHECK(svm.prior_logdensity(theta) == kNegInf);

  // d = 10: the stability region is strictly inside (-1, 1).
  LgssModel lgss(10);
  CHECK(lgss.prior_logdensity(Vector::Constant(1, 0.9)) == kNegInf);
  CHECK(std::isfinite(lgss.prior_logdensity(Vector::Constant(1, 0.4))));
  CHECK(lgss_spectral_radius(0.4, 10) < 1.0);
  CHECK(lgss_spectral_radius(0.9, 10) >= 1.0);
}

TEST_CASE("transform round trips") {
  const std::vector<ParamSpec> specs = {
      {"a", Transform::LogPositive},
      {"b", Transform::Identity},
      {"c", Transform::ScaledLogit, -1.0, 1.0},
  };
  Vector theta(3);
  theta << 0.38, -1.3, 0.42;
  const Vector u = to_unconstrained(theta, specs);
  const Vector back = to_constrained(u, specs);
  for (int i = 0; i < 3; ++i)
    CHECK(back[i] == doctest::Approx(theta[i]).epsilon(1e-12));

  // Jacobian spot checks: d/du exp(u) = exp(u); scaled logit (hi-lo) s (1-s).
  CHECK(transform_log_jacobian(u[0], specs[0]) == doctest::Approx(u[0]));
  CHECK(transform_log_jacobian(u[2], specs[2]) ==
        doctest::Approx(std::log(1.0 - theta[2] * theta[2]) - std::log(2.0))
            .epsilon(1e-10));
}

TEST_CASE("lgss simulation moments and determinism") {
  LgssModel model(1);
  const Vector theta = Vector::Constant(1, 0.4);
  const Dataset a = model.simulate(theta, 3, 7);
  const Dataset b = model.simulate(theta, 3, 7);
  CHECK(a.observations == b.observations);

  // theta = 0: observations iid N(0, 2).
  const Dataset big = model.simulate(Vector::Zero(1), 40000, 11);
  std::vector<double> ys(big.observations.data(),
                         big.observations.data() + big.T());
  CHECK(std::abs(mean(ys)) < 3.0 * std::sqrt(2.0 / big.T()));
  CHECK(sample_variance(ys) == doctest::Approx(2.0).epsilon(0.05));

  CHECK_THROWS_AS(model.simulate(theta, 0, 1), std::invalid_argument);
}

TEST_CASE("svm frozen volatility at the drift fixed point") {
  // tau ~ 0 and h at log(mu): the transition map stays put, so the
  // observation variance is constant over time.
  SvmParams p{2.0, 1.81, 1e-30, 0.0, 3};
  Vector h = Vector::Constant(2, std::log(1.81));
  for (int t = 0; t < 20; ++t) h = svm_transition_map(h, Vector::Random(6), p);
  CHECK(h[0] == doctest::Approx(std::log(1.81)).epsilon(1e-8));
  CHECK(h[1] == doctest::Approx(std::log(1.81)).epsilon(1e-8));
}

TEST_CASE("svm simulation determinism and shape") {
  SvmModel model(3, 3);
  Vector theta(4);
  theta << 2.0, 1.81, 0.38, 0.01;
  const Dataset a = model.simulate(theta, 25, 5);
  const Dataset b = model.simulate(theta, 25, 5);
  CHECK(a.observations == b.observations);
  CHECK(a.T() == 25);
  CHECK(a.obs_dim() == 3);
  CHECK(a.observations.allFinite());
}

TEST_CASE("disturbance dimensions") {
  SvmModel svm(2, 3);
  CHECK(svm.disturbance_dim(1) == 2 * 4);
  CHECK(svm.disturbance_dim(2) == 2 * 3);
  CHECK(svm.max_disturbance_dim() == 8);
  LgssModel lgss(5);
  CHECK(lgss.disturbance_dim(1) == 5);
  CHECK(lgss.max_disturbance_dim() == 5);
}
