#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace bcpm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexVector = Eigen::VectorXi;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Thrown when every particle weight underflows to zero at some time step.
// The sampler treats this as a log-likelihood of -inf at the proposal.
class filter_degenerate_error : public std::runtime_error {
 public:
  filter_degenerate_error(int t, const std::string& what)
      : std::runtime_error(what), time_index_(t) {}
  int time_index() const { return time_index_; }

 private:
  int time_index_;
};

class initialization_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The message is a literal so the fast path allocates nothing.
inline void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Counters surfaced from the particle filters to the diagnostics layer.
struct FilterTelemetry {
  long clamp_events = 0;
  long jitter_escalations = 0;
  long degeneracies = 0;

  FilterTelemetry& operator+=(const FilterTelemetry& o) {
    clamp_events += o.clamp_events;
    jitter_escalations += o.jitter_escalations;
    degeneracies += o.degeneracies;
    return *this;
  }
};

}  // namespace bcpm
