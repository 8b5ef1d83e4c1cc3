#ifndef NPF_METRICS_HPP
#define NPF_METRICS_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "npf/snapshot.hpp"
#include "npf/types.hpp"

namespace npf {

ParameterVector posterior_mean(const WeightedSample& sample);

/// Weighted standard deviation of each coordinate divided by |truth_k|.
std::vector<double> nstd(const WeightedSample& sample, const ParameterVector& truth);

/// 1 / sum w^2.
double ess(std::span<const double> weights);

/// A finite family of test functions h_i with |h_i| <= 1, weighted 2^-(i+1).
class OmegaSet {
 public:
  using TestFunction = std::function<double(const ParameterVector&)>;

  explicit OmegaSet(std::vector<TestFunction> functions);

  /// Clipped normalised coordinates c_k = clip((theta_k - mid_k) / half_k, -1, 1),
  /// followed by products c_k c_l for k <= l, truncated to `max_functions`.
  static OmegaSet default_for_box(const ParameterBox& box, std::size_t max_functions = 16);

  std::size_t size() const noexcept { return functions_.size(); }
  double weight(std::size_t i) const;
  double integrate(std::size_t i, const WeightedSample& sample) const;

 private:
  std::vector<TestFunction> functions_;
};

/// sum_i 2^-(i+1) |(h_i, a) - (h_i, b)|, always in [0, 2].
double d_omega(const WeightedSample& a, const WeightedSample& b, const OmegaSet& omega);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log(error) against log(n).
RateFit fit_rate(std::span<const std::pair<double, double>> errors);

struct TraceRecord {
  std::size_t step = 0;
  double time = 0.0;
  std::vector<double> theta_hat;
  std::vector<double> nstd;
  std::vector<double> state_error;
  double ess = 0.0;
  double log_evidence_increment = 0.0;
  std::optional<double> d_omega;
  std::vector<double> extra;
};

/// Per-step diagnostics of one nested-filter run.
struct RunTrace {
  std::size_t param_dim = 0;
  std::size_t state_dim = 0;
  bool has_nstd = false;
  bool has_state_error = false;
  bool has_d_omega = false;
  std::vector<std::string> param_names;
  std::vector<std::string> extra_columns;
  std::vector<TraceRecord> records;

  /// Writes '#'-prefixed header lines, a column row, then one row per record.
  void write_csv(std::ostream& out, std::span<const std::string> header_lines = {}) const;
  /// Final estimates, time-averaged NSTD and record count.
  nlohmann::json summary() const;
};

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace npf

#endif
