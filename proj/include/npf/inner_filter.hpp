#ifndef NPF_INNER_FILTER_HPP
#define NPF_INNER_FILTER_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "npf/jitter.hpp"
#include "npf/model.hpp"
#include "npf/rng.hpp"
#include "npf/types.hpp"

namespace npf {

/// State particles of one conditional bootstrap filter.
struct InnerCloud {
  StateCloud particles;
  /// log sum_j g(xbar_j) from the most recent weighting.
  double last_loglik_sum = 0.0;

  std::size_t size() const noexcept { return particles.size(); }
  friend bool operator==(const InnerCloud&, const InnerCloud&) = default;
};

struct WeighResult {
  std::vector<double> weights;
  /// log u^M = logsumexp(log g) - log M.
  double log_mean_lik = 0.0;
};

/// Normalises log-weights through log-sum-exp. Returns the normalised
/// weights and writes logsumexp(log_weights) to `log_sum`. Throws
/// DegenerateWeights when every entry is -inf.
std::vector<double> normalize_log_weights(std::span<const double> log_weights,
                                          double& log_sum);

double log_sum_exp(std::span<const double> values);

InnerCloud inner_init(const StateSpaceModel& model, std::size_t m, Rng& rng);

/// Moves every particle through the transition kernel at time t.
void propagate(const StateSpaceModel& model, const ParameterVector& theta,
               InnerCloud& cloud, std::size_t t, Rng& rng);

WeighResult weigh(const StateSpaceModel& model, const ParameterVector& theta,
                  InnerCloud& cloud, const Observation& y);

/// `count` i.i.d. draws from Categorical(weights). Weights must sum to one
/// within 1e-9.
std::vector<std::size_t> multinomial_indices(std::span<const double> weights,
                                             std::size_t count, Rng& rng);

template <class T>
std::vector<T> resample_multinomial(const std::vector<T>& items,
                                    std::span<const double> weights, Rng& rng) {
  if (items.size() != weights.size()) {
    throw InvalidInput("resample_multinomial: items and weights differ in length");
  }
  const auto idx = multinomial_indices(weights, items.size(), rng);
  std::vector<T> out;
  out.reserve(items.size());
  for (std::size_t k : idx) out.push_back(items[k]);
  return out;
}

StateCloud resample_cloud(const StateCloud& cloud, std::span<const double> weights,
                          Rng& rng);

/// One propagate / weigh / resample cycle. Returns log u^M computed from the
/// propagated (pre-resample) particles.
double inner_step(const StateSpaceModel& model, const ParameterVector& theta,
                  InnerCloud& cloud, const Observation& y, Rng& rng);

struct BootstrapResult {
  /// clouds[0] is the prior cloud; clouds[t] the resampled cloud after y_t.
  std::vector<InnerCloud> clouds;
  std::vector<double> log_mean_liks;
  double log_evidence = 0.0;
};

/// Bootstrap filter conditional on a fixed parameter.
BootstrapResult bootstrap_run(const StateSpaceModel& model, const ParameterVector& theta,
                              std::span<const Observation> observations, std::size_t m,
                              Rng& rng);

struct ChainBootstrapResult {
  std::vector<InnerCloud> clouds;
  /// theta_path[t] drives step t; theta_path[0] is the prior draw.
  std::vector<ParameterVector> theta_path;
  std::vector<double> log_mean_liks;
  double log_evidence = 0.0;
};

/// Bootstrap filter whose parameter follows the jitter-kernel Markov chain
/// theta_0 ~ prior, theta_t ~ kappa(. | theta_{t-1}). The chain consumes
/// `param_rng` only, so with a frozen kernel the state trajectory equals
/// bootstrap_run(theta_0) under the same `state_rng`.
ChainBootstrapResult bootstrap_run_chain_param(const StateSpaceModel& model,
                                               const JitterConfig& chain,
                                               std::span<const Observation> observations,
                                               std::size_t m, Rng& state_rng,
                                               Rng& param_rng);

}  // namespace npf

#endif
