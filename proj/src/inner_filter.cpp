#include "npf/inner_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace npf {

double log_sum_exp(std::span<const double> values) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : values) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights,
                                          double& log_sum) {
  log_sum = log_sum_exp(log_weights);
  if (log_weights.empty() || log_sum == -std::numeric_limits<double>::infinity()) {
    throw DegenerateWeights("all log-weights are -inf");
  }
  if (std::isnan(log_sum) || log_sum == std::numeric_limits<double>::infinity()) {
    throw DegenerateWeights("log-weights are not finite");
  }
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(log_weights[k] - log_sum);
  return w;
}

InnerCloud inner_init(const StateSpaceModel& model, std::size_t m, Rng& rng) {
  if (m == 0) throw InvalidInput("inner filter: M must be positive");
  InnerCloud cloud{StateCloud(m, model.state_dim()), 0.0};
  for (std::size_t j = 0; j < m; ++j) model.sample_state_prior(cloud.particles[j], rng);
  return cloud;
}

void propagate(const StateSpaceModel& model, const ParameterVector& theta,
               InnerCloud& cloud, std::size_t t, Rng& rng) {
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    model.sample_transition(theta, cloud.particles[j], t, rng);
  }
}

WeighResult weigh(const StateSpaceModel& model, const ParameterVector& theta,
                  InnerCloud& cloud, const Observation& y) {
  if (cloud.size() == 0) throw InvalidInput("weigh: empty cloud");
  const auto log_g = log_likelihood_batch(model, theta, cloud.particles, y);
  WeighResult result;
  double log_sum = 0.0;
  result.weights = normalize_log_weights(log_g, log_sum);
  cloud.last_loglik_sum = log_sum;
  result.log_mean_lik = log_sum - std::log(static_cast<double>(cloud.size()));
  return result;
}

std::vector<std::size_t> multinomial_indices(std::span<const double> weights,
                                             std::size_t count, Rng& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidInput("multinomial: negative or NaN weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("multinomial: weights are not normalised");
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> idx(count);
  for (auto& k : idx) k = pick(rng);
  return idx;
}

StateCloud resample_cloud(const StateCloud& cloud, std::span<const double> weights,
                          Rng& rng) {
  if (cloud.size() != weights.size()) {
    throw InvalidInput("resample_cloud: cloud and weights differ in length");
  }
  const auto idx = multinomial_indices(weights, cloud.size(), rng);
  StateCloud out(cloud.size(), cloud.dim());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    std::ranges::copy(cloud[idx[j]], out[j].begin());
  }
  return out;
}

double inner_step(const StateSpaceModel& model, const ParameterVector& theta,
                  InnerCloud& cloud, const Observation& y, Rng& rng) {
  propagate(model, theta, cloud, y.time_index, rng);
  const WeighResult w = weigh(model, theta, cloud, y);
  cloud.particles = resample_cloud(cloud.particles, w.weights, rng);
  return w.log_mean_lik;
}

BootstrapResult bootstrap_run(const StateSpaceModel& model, const ParameterVector& theta,
                              std::span<const Observation> observations, std::size_t m,
                              Rng& rng) {
  BootstrapResult result;
  result.clouds.reserve(observations.size() + 1);
  result.clouds.push_back(inner_init(model, m, rng));
  for (const auto& y : observations) {
    InnerCloud cloud = result.clouds.back();
    const double log_u = inner_step(model, theta, cloud, y, rng);
    result.log_mean_liks.push_back(log_u);
    result.log_evidence += log_u;
    result.clouds.push_back(std::move(cloud));
  }
  return result;
}

ChainBootstrapResult bootstrap_run_chain_param(const StateSpaceModel& model,
                                               const JitterConfig& chain,
                                               std::span<const Observation> observations,
                                               std::size_t m, Rng& state_rng,
                                               Rng& param_rng) {
  chain.validate();
  ChainBootstrapResult result;
  result.clouds.reserve(observations.size() + 1);
  result.theta_path.reserve(observations.size() + 1);
  result.theta_path.push_back(model.sample_param_prior(param_rng));
  result.clouds.push_back(inner_init(model, m, state_rng));
  for (const auto& y : observations) {
    result.theta_path.push_back(jitter_sample(chain, result.theta_path.back(), param_rng));
    InnerCloud cloud = result.clouds.back();
    const double log_u = inner_step(model, result.theta_path.back(), cloud, y, state_rng);
    result.log_mean_liks.push_back(log_u);
    result.log_evidence += log_u;
    result.clouds.push_back(std::move(cloud));
  }
  return result;
}

}  // namespace npf
