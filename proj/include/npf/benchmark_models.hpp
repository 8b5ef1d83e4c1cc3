#ifndef NPF_BENCHMARK_MODELS_HPP
#define NPF_BENCHMARK_MODELS_HPP

#include <cstddef>
#include <optional>

#include "npf/model.hpp"
#include "npf/oracle.hpp"

namespace npf {

/// GridHmm exposed as a StateSpaceModel. A continuous theta acts through its
/// nearest grid point, so jittered particles stay meaningful while the prior
/// (and a frozen kernel) keeps them exactly on the grid.
class GridHmmModel final : public StateSpaceModel {
 public:
  /// Without `box`, the bounding box of the grid padded by half the smallest
  /// spacing per coordinate (0.5 when a coordinate is constant).
  explicit GridHmmModel(GridHmm hmm, std::optional<ParameterBox> box = std::nullopt);

  std::size_t param_dim() const override { return hmm_.param_points.front().size(); }
  std::size_t state_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  const ParameterBox& param_box() const override { return box_; }

  ParameterVector sample_param_prior(Rng& rng) const override;
  using StateSpaceModel::sample_state_prior;
  void sample_state_prior(std::span<double> x, Rng& rng) const override;
  void sample_transition(const ParameterVector& theta, std::span<double> x, std::size_t t,
                         Rng& rng) const override;
  double log_likelihood(const ParameterVector& theta, std::span<const double> x,
                        const Observation& y) const override;
  ParameterVector canonical_parameter(const ParameterVector& theta) const override;

  std::size_t nearest_index(const ParameterVector& theta) const;
  const GridHmm& hmm() const noexcept { return hmm_; }

 private:
  GridHmm hmm_;
  ParameterBox box_;
};

class LinearGaussianModel final : public StateSpaceModel {
 public:
  explicit LinearGaussianModel(LinearGaussianConfig cfg = {}) : cfg_(std::move(cfg)) {}

  std::size_t param_dim() const override { return 1; }
  std::size_t state_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  const ParameterBox& param_box() const override { return cfg_.box; }

  ParameterVector sample_param_prior(Rng& rng) const override;
  using StateSpaceModel::sample_state_prior;
  void sample_state_prior(std::span<double> x, Rng& rng) const override;
  void sample_transition(const ParameterVector& theta, std::span<double> x, std::size_t t,
                         Rng& rng) const override;
  double log_likelihood(const ParameterVector& theta, std::span<const double> x,
                        const Observation& y) const override;

  const LinearGaussianConfig& config() const noexcept { return cfg_; }

 private:
  LinearGaussianConfig cfg_;
};

}  // namespace npf

#endif
