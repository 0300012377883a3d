#pragma once

#include <vector>

#include "bcpm/common.hpp"

namespace bcpm {

// Output of a particle sort.  Particles are stored one per column; zeta maps
// sorted position -> original index (0-based).
struct SortResult {
  std::vector<int> zeta;
  Matrix sorted_particles;  // d x N
  Vector sorted_weights;    // N
};

// Fast Euclidean sort: the first position is the particle with the smallest
// coordinate mean; the rest are ordered by ascending Euclidean distance to
// it.  Ties resolve to the lower original index.  One distance pass plus one
// comparison sort.
SortResult euclidean_sort(const Matrix& particles, const Vector& weights);

// Permutation-only variant used in the filter hot loop; fills zeta and a
// caller-provided distance buffer without copying any payload.
void euclidean_sort_order(const Eigen::Ref<const Matrix>& particles,
                          std::vector<int>& zeta, Vector& dist2);

// Iterative greedy sort used as the correctness/timing oracle: start at the
// particle with the smallest first coordinate, then repeatedly append the
// nearest unselected particle to the most recently selected one.  O(N^2 d).
SortResult choppala_sort(const Matrix& particles, const Vector& weights);

// Fills zeta/sorted arrays for a given permutation; shared by both sorts.
SortResult apply_sort_order(const Matrix& particles, const Vector& weights,
                            std::vector<int> zeta);

// CDF-inversion multinomial resampling on sorted weights:
//   a_i = min{ j : F(j) >= u[i] },  F(j) = sum_{k<=j} w[k].
// Returns ancestor indices in the sorted frame (0-based).
std::vector<int> correlated_multinomial_resample(const Vector& sorted_weights,
                                                 const Vector& uniforms);

// Maps sorted-frame ancestors back to original particle indices.
std::vector<int> unsort_ancestors(const std::vector<int>& sorted_ancestors,
                                  const std::vector<int>& zeta);

}  // namespace bcpm
