#ifndef NPF_MODEL_HPP
#define NPF_MODEL_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "npf/rng.hpp"
#include "npf/types.hpp"

namespace npf {

/// A discrete-time state-space Markov model with static parameters.
///
/// Implementations hold no mutable state: every method is const and all
/// randomness comes from the caller's Rng, so one instance can be shared by
/// any number of workers.
///
/// Transitions and priors write into caller-owned spans of length
/// `state_dim()`; this keeps inner clouds contiguous and allocation free.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  virtual std::size_t param_dim() const = 0;
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual const ParameterBox& param_box() const = 0;

  virtual ParameterVector sample_param_prior(Rng& rng) const = 0;
  virtual void sample_state_prior(std::span<double> x, Rng& rng) const = 0;
  /// Replaces x (the state at t-1) with a draw from the kernel at time t.
  virtual void sample_transition(const ParameterVector& theta,
                                 std::span<double> x, std::size_t t,
                                 Rng& rng) const = 0;
  /// log g(y | x, theta), up to a constant common to every (x, theta).
  virtual double log_likelihood(const ParameterVector& theta,
                                std::span<const double> x,
                                const Observation& y) const = 0;

  /// The point that actually parameterises the dynamics. Identity except for
  /// models defined on a finite parameter set.
  virtual ParameterVector canonical_parameter(const ParameterVector& theta) const {
    return theta;
  }

  StateVector sample_state_prior(Rng& rng) const;
  StateVector transition(const ParameterVector& theta, const StateVector& x,
                         std::size_t t, Rng& rng) const;
};

std::vector<double> log_likelihood_batch(const StateSpaceModel& model,
                                         const ParameterVector& theta,
                                         std::span<const StateVector> states,
                                         const Observation& y);

std::vector<double> log_likelihood_batch(const StateSpaceModel& model,
                                         const ParameterVector& theta,
                                         const StateCloud& states,
                                         const Observation& y);

/// Projects each coordinate onto [lower, upper].
ParameterVector clamp_to_box(const ParameterVector& theta, const ParameterBox& box);

}  // namespace npf

#endif
