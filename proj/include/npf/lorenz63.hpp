#ifndef NPF_LORENZ63_HPP
#define NPF_LORENZ63_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "npf/model.hpp"

namespace npf::lorenz63 {

using State3 = std::array<double, 3>;

/// (S, R, B, k_o).
struct Params {
  double s = 10.0;
  double r = 28.0;
  double b = 8.0 / 3.0;
  double k_o = 0.8;

  ParameterVector to_vector() const { return {s, r, b, k_o}; }
  static Params from_vector(const ParameterVector& theta);
};

struct Config {
  double delta = 1e-3;
  std::size_t decimation = 40;
  double obs_noise_var = 0.1;
  State3 state_prior_mean{-5.91652, -5.52332, 24.5723};
  double state_prior_var = 10.0;
  ParameterBox box = default_box();

  static ParameterBox default_box();
  /// Continuous time between observations.
  double observation_interval() const { return delta * static_cast<double>(decimation); }
  void validate() const;
};

/// One Euler-Maruyama step: drift evaluated at x, plus sqrt(delta) * noise.
State3 euler_step(const Params& p, const State3& x, double delta, const State3& noise);

/// `decimation` Euler steps with i.i.d. N(0, 1) noise scaled by `noise_scale`
/// (0 gives the deterministic Euler map). Updates x in place.
void composite_transition(const Params& p, std::span<double> x, std::size_t decimation,
                          double delta, Rng& rng, double noise_scale = 1.0);

/// Gaussian log-density of y = (y1, y3) given k_o * (x1, x3) with variance obs_var.
double observe_loglik(double k_o, std::span<const double> x, const Observation& y,
                      double obs_var);

class Model final : public StateSpaceModel {
 public:
  explicit Model(Config cfg = {});

  std::size_t param_dim() const override { return 4; }
  std::size_t state_dim() const override { return 3; }
  std::size_t obs_dim() const override { return 2; }
  const ParameterBox& param_box() const override { return cfg_.box; }

  ParameterVector sample_param_prior(Rng& rng) const override;
  using StateSpaceModel::sample_state_prior;
  void sample_state_prior(std::span<double> x, Rng& rng) const override;
  void sample_transition(const ParameterVector& theta, std::span<double> x, std::size_t t,
                         Rng& rng) const override;
  double log_likelihood(const ParameterVector& theta, std::span<const double> x,
                        const Observation& y) const override;

  const Config& config() const noexcept { return cfg_; }

 private:
  Config cfg_;
};

struct SyntheticData {
  /// Every discrete-time state, path[0] = x_0. Length decimation * n + 1.
  std::vector<StateVector> path;
  std::vector<Observation> observations;

  /// States at observation instants; element 0 is x_0.
  std::vector<StateVector> observed_states(std::size_t decimation) const;
};

SyntheticData generate_synthetic(const Params& truth, const Config& cfg,
                                 std::size_t n_observations, Rng& rng);

/// Header metadata for the two-file dataset format.
struct DatasetHeader {
  std::uint64_t seed = 0;
  double delta = 1e-3;
  std::size_t decimation = 40;
  Params true_params;
  /// Written as further '#' lines (e.g. the full run configuration).
  std::vector<std::string> extra_lines;
};

void write_dataset(const SyntheticData& data, const DatasetHeader& header,
                   const std::filesystem::path& states_file,
                   const std::filesystem::path& observations_file);

/// Reads an observations file written by write_dataset.
std::vector<Observation> read_observations(const std::filesystem::path& observations_file,
                                           DatasetHeader* header = nullptr);

}  // namespace npf::lorenz63

#endif
