#include "npf/jitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace npf {

namespace {

constexpr int kMaxRejections = 1000;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Upper-tail probability, accurate far into the tail.
double std_normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_quantile(double u) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

}  // namespace

JitterConfig JitterConfig::for_population(std::size_t n, std::vector<double> covariance_diag,
                                          ParameterBox box, double p_exponent) {
  if (n == 0) throw InvalidInput("jitter: population size must be positive");
  JitterConfig cfg;
  cfg.p_exponent = p_exponent;
  cfg.epsilon = std::pow(static_cast<double>(n), -0.5 * p_exponent);
  cfg.covariance_diag = std::move(covariance_diag);
  cfg.box = std::move(box);
  cfg.validate();
  return cfg;
}

JitterConfig JitterConfig::frozen(ParameterBox box) {
  JitterConfig cfg;
  cfg.epsilon = std::numeric_limits<double>::denorm_min();
  cfg.covariance_diag.assign(box.dim(), 1.0);
  cfg.box = std::move(box);
  return cfg;
}

void JitterConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw InvalidInput("jitter: epsilon must lie in (0, 1]");
  if (!(p_exponent >= 1.0)) throw InvalidInput("jitter: p exponent must be >= 1");
  if (covariance_diag.size() != box.dim()) {
    throw InvalidInput("jitter: covariance dimension does not match the box");
  }
  for (double c : covariance_diag) {
    if (!(c > 0.0)) throw InvalidInput("jitter: covariance entries must be positive");
  }
}

void JitterConfig::validate_rate(std::size_t n) const {
  validate();
  const double bound = std::pow(static_cast<double>(n), -0.5 * p_exponent);
  // Allow for the rounding in pow when eps was produced by for_population.
  if (epsilon > bound * (1.0 + 1e-12)) {
    throw InvalidInput("jitter: epsilon exceeds n^(-p/2)");
  }
}

double truncated_normal_sample(double mean, double sd, double lo, double hi, Rng& rng) {
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const double x = rng.normal(mean, sd);
    if (x >= lo && x <= hi) return x;
  }
  // Inverse CDF in whichever tail keeps the probabilities representable.
  double alpha = (lo - mean) / sd;
  double beta = (hi - mean) / sd;
  const bool mirrored = beta < 0.0;
  if (mirrored) {
    std::swap(alpha, beta);
    alpha = -alpha;
    beta = -beta;
  }
  double z;
  if (alpha > 0.0) {
    const double sa = std_normal_sf(alpha);
    const double sb = std_normal_sf(beta);
    if (sa > sb && sa > 0.0) {
      const double p = sb + (sa - sb) * rng.uniform();
      z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * std::max(p, std::numeric_limits<double>::min()));
    } else {
      // Beyond double range: the density is effectively exponential with rate alpha.
      z = alpha - std::log1p(-rng.uniform() * -std::expm1(-alpha * (beta - alpha))) / alpha;
    }
  } else {
    const double a = std_normal_cdf(alpha);
    const double b = std_normal_cdf(beta);
    const double u = std::clamp(a + (b - a) * rng.uniform(), std::numeric_limits<double>::min(),
                                1.0 - std::numeric_limits<double>::epsilon());
    z = std_normal_quantile(u);
  }
  if (mirrored) z = -z;
  return std::clamp(mean + sd * z, lo, hi);
}

double truncated_normal_mean(double mean, double sd, double lo, double hi) {
  const double alpha = (lo - mean) / sd;
  const double beta = (hi - mean) / sd;
  const double z = alpha > 0.0 ? std_normal_sf(alpha) - std_normal_sf(beta)
                                : std_normal_cdf(beta) - std_normal_cdf(alpha);
  return mean + sd * (std_normal_pdf(alpha) - std_normal_pdf(beta)) / z;
}

ParameterVector jitter_sample(const JitterConfig& cfg, const ParameterVector& theta_prev,
                              Rng& rng) {
  if (!cfg.box.contains(theta_prev)) throw InvalidInput("jitter: previous parameter outside box");
  if (!(rng.uniform() < cfg.epsilon)) return theta_prev;
  ParameterVector out = theta_prev;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = truncated_normal_sample(theta_prev[k], std::sqrt(cfg.covariance_diag[k]),
                                     cfg.box.lower(k), cfg.box.upper(k), rng);
  }
  return out;
}

double jitter_moment_check(const JitterConfig& cfg, const ParameterVector& theta_prev,
                           double p, std::size_t n_samples, Rng& rng) {
  if (n_samples == 0) throw InvalidInput("jitter_moment_check: need at least one sample");
  double acc = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const ParameterVector theta = jitter_sample(cfg, theta_prev, rng);
    double sq = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double d = theta[k] - theta_prev[k];
      sq += d * d;
    }
    acc += std::pow(std::sqrt(sq), p);
  }
  return acc / static_cast<double>(n_samples);
}

double jitter_mean_abs_change(const JitterConfig& cfg, const ParameterVector& theta_prev,
                              const std::function<double(const ParameterVector&)>& h,
                              std::size_t n_samples, Rng& rng) {
  if (n_samples == 0) throw InvalidInput("jitter_mean_abs_change: need at least one sample");
  const double h_prev = h(theta_prev);
  double acc = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    acc += std::abs(h(jitter_sample(cfg, theta_prev, rng)) - h_prev);
  }
  return acc / static_cast<double>(n_samples);
}

}  // namespace npf
