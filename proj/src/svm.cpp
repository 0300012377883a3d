#include "bcpm/svm.hpp"

#include <cmath>

#include "bcpm/lgss.hpp"
#include "bcpm/stats.hpp"

namespace bcpm {

namespace {
// e^h in the observation variance is clamped to keep early adaptive
// iterations from overflowing; clamps are counted in the telemetry.
constexpr double kLogVarClamp = 50.0;
}  // namespace

double svm_euler_step(double h, double eps, const SvmParams& p) {
  const double delta = p.delta();
  const double drift = p.alpha * (p.mu - std::exp(h)) * std::exp(-h) - 0.5 * p.tau2;
  return h + drift * delta + std::sqrt(p.tau2 * delta) * eps;
}

Vector svm_transition_map(const Vector& h_prev, const Vector& eps_block,
                          const SvmParams& p) {
  const int d = static_cast<int>(h_prev.size());
  require(eps_block.size() == static_cast<Eigen::Index>(p.M) * d,
          "svm_transition_map: eps block must be M x d");
  Vector h = h_prev;
  for (int j = 0; j < p.M; ++j)
    for (int i = 0; i < d; ++i) h[i] = svm_euler_step(h[i], eps_block[j * d + i], p);
  return h;
}

double svm_obs_logdensity(const Vector& y, const Vector& h, double psi) {
  require(y.size() == h.size(), "svm_obs_logdensity: dimension mismatch");
  const int d = static_cast<int>(y.size());
  const Matrix A = build_lgss_A(psi, d);
  const Vector mean = A * h;
  double acc = -0.5 * d * kLog2Pi;
  for (int i = 0; i < d; ++i) {
    const double hc = std::clamp(h[i], -kLogVarClamp, kLogVarClamp);
    const double r = y[i] - mean[i];
    acc -= 0.5 * (hc + r * r * std::exp(-hc));
  }
  return acc;
}

SvmModel::SvmModel(int d, int M) : d_(d), M_(M) {
  require(d >= 1, "SvmModel: dimension must be positive");
  require(M >= 1, "SvmModel: need at least one Euler point");
}

SvmParams SvmModel::unpack(const Vector& theta) const {
  require(theta.size() == 4, "SvmModel: theta is (alpha, mu, tau2, psi)");
  return SvmParams{theta[0], theta[1], theta[2], theta[3], M_};
}

void SvmModel::transition(int t, const Matrix& z_prev,
                          const Eigen::Ref<const Matrix>& eps,
                          const Vector& theta, Matrix& z_out) const {
  const SvmParams p = unpack(theta);
  const double delta = p.delta();
  const double sd = std::sqrt(p.tau2 * delta);
  const double base = -p.alpha - 0.5 * p.tau2;  // alpha(mu-e^h)e^{-h} = alpha mu e^{-h} - alpha
  const int offset = (t == 1) ? d_ : 0;         // t = 1: leading d normals become h_0
  if (t == 1)
    z_out = eps.topRows(d_);
  else
    z_out = z_prev;
  // Whole-batch Euler sub-steps; elementwise, so the in-place update is
  // alias-safe and the exp vectorizes across particles.
  for (int j = 0; j < M_; ++j)
    z_out.array() += delta * (p.alpha * p.mu * (-z_out).array().exp() + base) +
                     sd * eps.middleRows(offset + j * d_, d_).array();
}

namespace {
const Matrix& cached_loading_matrix(double psi, int d) {
  thread_local double cached_psi = std::numeric_limits<double>::quiet_NaN();
  thread_local int cached_d = -1;
  thread_local Matrix A;
  if (cached_d != d || cached_psi != psi) {
    A = build_lgss_A(psi, d);
    cached_psi = psi;
    cached_d = d;
  }
  return A;
}
}  // namespace

void SvmModel::obs_logdensity(const Vector& y, const Matrix& z,
                              const Vector& theta, Vector& log_dens,
                              FilterTelemetry* telemetry) const {
  const SvmParams p = unpack(theta);
  const Matrix& A = cached_loading_matrix(p.psi, d_);
  const double c = -0.5 * d_ * kLog2Pi;

  if (telemetry)
    telemetry->clamp_events += (z.array().abs() > kLogVarClamp).count();
  const auto h = z.array().min(kLogVarClamp).max(-kLogVarClamp);
  const Matrix resid = (A * z).colwise() - y;  // mean is A h; residual sign is immaterial
  // log N(y; Ah, diag(e^h)) summed per column, exp vectorized across the batch.
  log_dens = (c - 0.5 * (h + resid.array().square() * (-h).exp()).colwise().sum())
                 .transpose();
}

std::vector<ParamSpec> SvmModel::params() const {
  return {{"alpha", Transform::LogPositive},
          {"mu", Transform::LogPositive},
          {"tau2", Transform::LogPositive},
          {"psi", Transform::Identity}};
}

double SvmModel::prior_logdensity(const Vector& theta) const {
  require(theta.size() == 4, "SvmModel: theta is (alpha, mu, tau2, psi)");
  if (theta[0] <= 0.0 || theta[1] <= 0.0 || theta[2] <= 0.0) return kNegInf;
  return gamma_logpdf(theta[0], 1.0, 1.0) + gamma_logpdf(theta[1], 1.0, 1.0) +
         gamma_logpdf(theta[2], 0.5, 0.5) + normal_logpdf(theta[3], 0.0, 1.0);
}

Vector SvmModel::sample_prior(Rng& rng) const {
  std::gamma_distribution<double> g11(1.0, 1.0);   // shape, scale
  std::gamma_distribution<double> g55(0.5, 2.0);   // Gamma(0.5, rate 0.5)
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector theta(4);
  theta[0] = g11(rng);
  theta[1] = g11(rng);
  theta[2] = g55(rng);
  theta[3] = gauss(rng);
  return theta;
}

Dataset SvmModel::simulate(const Vector& theta, int T, std::uint64_t seed) const {
  require(T >= 1, "simulate: T must be positive");
  require(std::isfinite(prior_logdensity(theta)), "simulate: theta outside support");
  const SvmParams p = unpack(theta);
  Rng rng = make_rng(seed, {0x52u});
  const Matrix A = build_lgss_A(p.psi, d_);
  Dataset ds;
  ds.observations.resize(T, d_);
  ds.model_id = id();
  ds.generating_theta = theta;
  ds.seed = seed;
  Vector h = standard_normal_vector(rng, d_);  // h_0
  for (int t = 0; t < T; ++t) {
    h = svm_transition_map(h, standard_normal_vector(rng, d_ * M_), p);
    const Vector mean = A * h;
    for (int i = 0; i < d_; ++i) {
      const double sd = std::exp(0.5 * std::clamp(h[i], -kLogVarClamp, kLogVarClamp));
      ds.observations(t, i) = mean[i] + sd * std::normal_distribution<double>(0.0, 1.0)(rng);
    }
  }
  return ds;
}

}  // namespace bcpm
