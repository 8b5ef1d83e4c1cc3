#ifndef NPF_JITTER_HPP
#define NPF_JITTER_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "npf/rng.hpp"
#include "npf/types.hpp"

namespace npf {

/// Parameter-space rejuvenation kernel
///
///   kappa(d theta | theta') = (1 - eps) delta_{theta'} + eps * kbar(theta | theta'),
///
/// where kbar is a Gaussian with diagonal covariance centred at theta' and
/// truncated to `box`. With truncation the kbar mean is only equal to theta'
/// when the box is symmetric about theta'; no re-centring is applied.
struct JitterConfig {
  double epsilon = 1.0;
  double p_exponent = 1.0;
  std::vector<double> covariance_diag;
  ParameterBox box;

  /// eps = n^(-p/2), the largest value the rate results allow.
  static JitterConfig for_population(std::size_t n, std::vector<double> covariance_diag,
                                     ParameterBox box, double p_exponent = 1.0);

  /// The rejuvenation branch is (almost surely) never taken: eps is the
  /// smallest positive double and uniforms are multiples of 2^-53.
  static JitterConfig frozen(ParameterBox box);

  void validate() const;
  /// validate() plus eps <= n^(-p/2).
  void validate_rate(std::size_t n) const;
};

/// Per-coordinate truncated normal on [lo, hi]. Rejection first; after 1000
/// rejected proposals falls back to inverse-CDF sampling.
double truncated_normal_sample(double mean, double sd, double lo, double hi, Rng& rng);

/// Analytic mean of N(mean, sd^2) truncated to [lo, hi].
double truncated_normal_mean(double mean, double sd, double lo, double hi);

ParameterVector jitter_sample(const JitterConfig& cfg, const ParameterVector& theta_prev,
                              Rng& rng);

/// Monte Carlo estimate of E ||theta - theta_prev||^p under the kernel.
double jitter_moment_check(const JitterConfig& cfg, const ParameterVector& theta_prev,
                           double p, std::size_t n_samples, Rng& rng);

/// Monte Carlo estimate of E |h(theta) - h(theta_prev)| under the kernel.
double jitter_mean_abs_change(const JitterConfig& cfg, const ParameterVector& theta_prev,
                              const std::function<double(const ParameterVector&)>& h,
                              std::size_t n_samples, Rng& rng);

}  // namespace npf

#endif
