#ifndef NPF_ORACLE_HPP
#define NPF_ORACLE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "npf/rng.hpp"
#include "npf/types.hpp"

namespace npf {

using Matrix = std::vector<std::vector<double>>;

/// Finite-state HMM indexed by a finite grid of parameter points. Every
/// quantity the nested filter approximates is exactly computable on it.
///
/// Convention: x_0 ~ initial, x_t ~ transition[k][x_{t-1}], y_t ~ emission[k][x_t].
/// Observations carry the symbol index in values[0].
struct GridHmm {
  std::size_t n_states = 0;
  std::size_t n_symbols = 0;
  std::vector<ParameterVector> param_points;
  std::vector<double> param_prior;
  std::vector<double> initial;
  std::vector<Matrix> transition;
  std::vector<Matrix> emission;

  std::size_t n_params() const noexcept { return param_points.size(); }
  void validate() const;

  nlohmann::json to_json() const;
  static GridHmm from_json(const nlohmann::json& j);

  /// Two hidden states, binary symbols, three points for the stay
  /// probability. The data resolve the points only gradually.
  static GridHmm sticky_two_state();
  /// Two hidden states and three symbols. The parameter sets the stay
  /// probability and the rate of a marker symbol, so a few hundred
  /// observations pin it down.
  static GridHmm identifiable_two_state();
};

struct ConditionalFilterResult {
  /// predictive[t] = P(x_t | y_{1:t-1}), filtered[t] = P(x_t | y_{1:t});
  /// index 0 holds the initial distribution in both.
  std::vector<std::vector<double>> predictive;
  std::vector<std::vector<double>> filtered;
  /// likelihoods[t-1] = u_t(theta_k) = P(y_t | y_{1:t-1}, theta_k).
  std::vector<double> likelihoods;
};

ConditionalFilterResult exact_conditional_filter(const GridHmm& hmm, std::size_t k,
                                                 std::span<const Observation> observations);

/// posterior[t][k] = P(theta_k | y_{1:t}); posterior[0] is the prior.
std::vector<std::vector<double>> exact_param_posterior(const GridHmm& hmm,
                                                       std::span<const Observation> observations);

std::vector<Observation> simulate_grid_hmm(const GridHmm& hmm, std::size_t k, std::size_t length,
                                           Rng& rng, std::vector<std::size_t>* states = nullptr);

/// Scalar linear-Gaussian model x_t = a x_{t-1} + w_t, y_t = c x_t + v_t with
/// w ~ N(0, q), v ~ N(0, r), x_0 ~ N(m0, p0). The parameter is a.
struct LinearGaussianConfig {
  double c = 1.0;
  double q = 1.0;
  double r = 1.0;
  double m0 = 0.0;
  double p0 = 1.0;
  ParameterBox box{{0.1}, {0.95}};

  nlohmann::json to_json() const;
  static LinearGaussianConfig from_json(const nlohmann::json& j);
};

struct KalmanResult {
  /// Index t = 1..T stored at t - 1.
  std::vector<double> predictive_mean;
  std::vector<double> predictive_var;
  std::vector<double> filtered_mean;
  std::vector<double> filtered_var;
  /// log p(y_t | y_{1:t-1}).
  std::vector<double> log_increments;
  double log_evidence = 0.0;
};

KalmanResult kalman_filter(double a, const LinearGaussianConfig& cfg,
                           std::span<const Observation> observations);
/// Time-varying coefficient: a_path[t - 1] drives the transition into step t.
KalmanResult kalman_filter(std::span<const double> a_path, const LinearGaussianConfig& cfg,
                           std::span<const Observation> observations);

std::vector<Observation> simulate_linear_gaussian(double a, const LinearGaussianConfig& cfg,
                                                  std::size_t length, Rng& rng,
                                                  std::vector<double>* states = nullptr);

/// Posterior mean of a after each observation under a uniform prior on the
/// box, by midpoint quadrature over `nodes` points of Kalman evidences.
/// Element 0 is the prior mean.
std::vector<double> linear_gaussian_posterior_means(const LinearGaussianConfig& cfg,
                                                    std::span<const Observation> observations,
                                                    std::size_t nodes = 2001);

}  // namespace npf

#endif
