#include "bcpm/lgss.hpp"

#include <cmath>

#include "bcpm/stats.hpp"

namespace bcpm {

Matrix build_lgss_A(double theta, int d) {
  require(d >= 1, "build_lgss_A: dimension must be positive");
  Matrix A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = std::pow(theta, std::abs(i - j) + 1);
  return A;
}

Vector lgss_transition(const Vector& z_prev, const Vector& eps, double theta) {
  require(z_prev.size() == eps.size(), "lgss_transition: dimension mismatch");
  const Matrix A = build_lgss_A(theta, static_cast<int>(z_prev.size()));
  return A * z_prev + eps;
}

double lgss_obs_logdensity(const Vector& y, const Vector& z) {
  require(y.size() == z.size(), "lgss_obs_logdensity: dimension mismatch");
  return std_normal_logpdf_vec(y - z);
}

double lgss_spectral_radius(double theta, int d) {
  const Matrix A = build_lgss_A(theta, d);
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

LgssModel::LgssModel(int d) : d_(d) {
  require(d >= 1, "LgssModel: dimension must be positive");
}

namespace {
// The transition matrix is rebuilt only when theta changes; the filter calls
// this once per time step per particle batch.
const Matrix& cached_lgss_A(double theta, int d) {
  thread_local double cached_theta = std::numeric_limits<double>::quiet_NaN();
  thread_local int cached_d = -1;
  thread_local Matrix A;
  if (cached_d != d || cached_theta != theta) {
    A = build_lgss_A(theta, d);
    cached_theta = theta;
    cached_d = d;
  }
  return A;
}
}  // namespace

void LgssModel::transition(int t, const Matrix& z_prev,
                           const Eigen::Ref<const Matrix>& eps,
                           const Vector& theta, Matrix& z_out) const {
  // t = 1 with z_prev = 0 gives X_1 = eps_1 ~ N(0, I), which is exactly the
  // model's initial state; no special case is needed.
  (void)t;
  z_out.noalias() = cached_lgss_A(theta[0], d_) * z_prev;
  z_out += eps.topRows(d_);
}

void LgssModel::obs_logdensity(const Vector& y, const Matrix& z,
                               const Vector& theta, Vector& log_dens,
                               FilterTelemetry*) const {
  (void)theta;
  const double c = -0.5 * d_ * kLog2Pi;
  for (Eigen::Index i = 0; i < z.cols(); ++i)
    log_dens[i] = c - 0.5 * (y - z.col(i)).squaredNorm();
}

std::vector<ParamSpec> LgssModel::params() const {
  return {{"theta", Transform::ScaledLogit, -1.0, 1.0}};
}

double LgssModel::prior_logdensity(const Vector& theta) const {
  require(theta.size() == 1, "LgssModel: theta must be scalar");
  const double th = theta[0];
  if (!(th > -1.0 && th < 1.0)) return kNegInf;
  if (lgss_spectral_radius(th, d_) >= 1.0) return kNegInf;
  return -std::log(2.0);  // flat on (-1,1); constants are irrelevant to MCMC
}

Vector LgssModel::sample_prior(Rng& rng) const {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double th = unif(rng);
    if (lgss_spectral_radius(th, d_) < 1.0) return Vector::Constant(1, th);
  }
  throw initialization_failure("LgssModel: could not sample a stable theta");
}

Dataset LgssModel::simulate(const Vector& theta, int T, std::uint64_t seed) const {
  require(T >= 1, "simulate: T must be positive");
  require(std::isfinite(prior_logdensity(theta)), "simulate: theta outside support");
  Rng rng = make_rng(seed, {0x51u});
  const Matrix A = build_lgss_A(theta[0], d_);
  Dataset ds;
  ds.observations.resize(T, d_);
  ds.model_id = id();
  ds.generating_theta = theta;
  ds.seed = seed;
  Vector x = standard_normal_vector(rng, d_);  // X_1 ~ N(0, I)
  for (int t = 0; t < T; ++t) {
    if (t > 0) x = A * x + standard_normal_vector(rng, d_);
    ds.observations.row(t) = (x + standard_normal_vector(rng, d_)).transpose();
  }
  return ds;
}

}  // namespace bcpm
