#ifndef NPF_SNAPSHOT_HPP
#define NPF_SNAPSHOT_HPP

#include <cstddef>
#include <vector>

#include "npf/types.hpp"

namespace npf {

/// Discrete measure sum_i w_i delta_{theta_i}.
struct WeightedSample {
  std::vector<ParameterVector> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return points.size(); }

  static WeightedSample point_mass(ParameterVector theta) {
    return {{std::move(theta)}, {1.0}};
  }
  static WeightedSample uniform(std::vector<ParameterVector> points);
};

/// Output of one nested-filter step.
///
/// `posterior` is the weighted pre-resample measure (jittered thetas with
/// normalised weights). `ancestors[i]` is the index in `posterior.points`
/// that outer particle i inherited during the joint resampling, so the
/// unweighted post-resample measure is recoverable with `resampled()`.
struct PosteriorSnapshot {
  std::size_t step = 0;
  WeightedSample posterior;
  std::vector<std::size_t> ancestors;
  /// log u^M for each jittered theta (0 for the prior snapshot).
  std::vector<double> log_likelihoods;
  /// Row-major N x d_x: mean of each inner cloud after inner resampling.
  std::vector<double> state_means;
  std::size_t state_dim = 0;
  /// log((1/N) sum_i u^M_i).
  double log_norm = 0.0;

  WeightedSample resampled() const;
  /// sum_i w_i * state_means[i].
  std::vector<double> state_estimate() const;
};

}  // namespace npf

#endif
