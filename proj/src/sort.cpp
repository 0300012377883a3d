#include "bcpm/sort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bcpm {

SortResult apply_sort_order(const Matrix& particles, const Vector& weights,
                            std::vector<int> zeta) {
  const int N = static_cast<int>(particles.cols());
  SortResult out;
  out.sorted_particles.resize(particles.rows(), N);
  out.sorted_weights.resize(N);
  for (int i = 0; i < N; ++i) {
    out.sorted_particles.col(i) = particles.col(zeta[static_cast<std::size_t>(i)]);
    out.sorted_weights[i] = weights[zeta[static_cast<std::size_t>(i)]];
  }
  out.zeta = std::move(zeta);
  return out;
}

void euclidean_sort_order(const Eigen::Ref<const Matrix>& particles,
                          std::vector<int>& zeta, Vector& dist2) {
  const int N = static_cast<int>(particles.cols());
  require(N >= 1, "euclidean_sort: empty particle set");

  // First index: smallest coordinate mean, ties to the lower index.
  int first = 0;
  double best = particles.col(0).mean();
  for (int i = 1; i < N; ++i) {
    const double m = particles.col(i).mean();
    if (m < best) {
      best = m;
      first = i;
    }
  }

  // Squared distances preserve the ordering and skip the square root.
  dist2.resize(N);
  const auto ref = particles.col(first);
  for (int i = 0; i < N; ++i) dist2[i] = (particles.col(i) - ref).squaredNorm();

  zeta.resize(static_cast<std::size_t>(N));
  std::iota(zeta.begin(), zeta.end(), 0);
  std::swap(zeta[0], zeta[static_cast<std::size_t>(first)]);
  std::sort(zeta.begin() + 1, zeta.end(), [&](int a, int b) {
    if (dist2[a] != dist2[b]) return dist2[a] < dist2[b];
    return a < b;
  });
}

SortResult euclidean_sort(const Matrix& particles, const Vector& weights) {
  require(weights.size() == particles.cols(),
          "euclidean_sort: weight count mismatch");
  std::vector<int> zeta;
  Vector dist2;
  euclidean_sort_order(particles, zeta, dist2);
  return apply_sort_order(particles, weights, std::move(zeta));
}

SortResult choppala_sort(const Matrix& particles, const Vector& weights) {
  const int N = static_cast<int>(particles.cols());
  require(N >= 1, "choppala_sort: empty particle set");
  require(weights.size() == N, "choppala_sort: weight count mismatch");

  std::vector<int> zeta;
  zeta.reserve(static_cast<std::size_t>(N));
  std::vector<char> used(static_cast<std::size_t>(N), 0);

  int current = 0;
  for (int i = 1; i < N; ++i)
    if (particles(0, i) < particles(0, current)) current = i;
  zeta.push_back(current);
  used[static_cast<std::size_t>(current)] = 1;

  for (int step = 1; step < N; ++step) {
    int next = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const double d2 = (particles.col(i) - particles.col(current)).squaredNorm();
      if (d2 < best) {
        best = d2;
        next = i;
      }
    }
    zeta.push_back(next);
    used[static_cast<std::size_t>(next)] = 1;
    current = next;
  }
  return apply_sort_order(particles, weights, std::move(zeta));
}

std::vector<int> correlated_multinomial_resample(const Vector& sorted_weights,
                                                 const Vector& uniforms) {
  const int N = static_cast<int>(sorted_weights.size());
  require(N >= 1, "correlated_multinomial_resample: empty weights");
  double total = sorted_weights.sum();
  require(std::abs(total - 1.0) <= 1e-6,
          "correlated_multinomial_resample: weights must sum to 1");

  Vector cum(N);
  double acc = 0.0;
  for (int j = 0; j < N; ++j) {
    acc += sorted_weights[j];
    cum[j] = acc;
  }
  cum[N - 1] = 1.0;  // guard against rounding just below the last uniform

  std::vector<int> ancestors(static_cast<std::size_t>(uniforms.size()));
  for (Eigen::Index i = 0; i < uniforms.size(); ++i) {
    const double u = uniforms[i];
    require(u > 0.0 && u < 1.0,
            "correlated_multinomial_resample: uniforms must lie in (0,1)");
    const double* pos = std::lower_bound(cum.data(), cum.data() + N, u);
    ancestors[static_cast<std::size_t>(i)] = static_cast<int>(pos - cum.data());
  }
  return ancestors;
}

std::vector<int> unsort_ancestors(const std::vector<int>& sorted_ancestors,
                                  const std::vector<int>& zeta) {
  std::vector<int> out(sorted_ancestors.size());
  for (std::size_t i = 0; i < sorted_ancestors.size(); ++i) {
    const int a = sorted_ancestors[i];
    require(a >= 0 && a < static_cast<int>(zeta.size()),
            "unsort_ancestors: ancestor index out of range");
    out[i] = zeta[static_cast<std::size_t>(a)];
  }
  return out;
}

}  // namespace bcpm
