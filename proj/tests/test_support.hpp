#ifndef NPF_TEST_SUPPORT_HPP
#define NPF_TEST_SUPPORT_HPP

#include <cmath>
#include <span>

#include "npf/model.hpp"

namespace npf::testing {

/// x' = a x + b with no noise, y ~ N(x, 1); theta = (a).
class AffineModel final : public StateSpaceModel {
 public:
  explicit AffineModel(double b = 1.0) : b_(b), box_({-2.0}, {2.0}) {}
  std::size_t param_dim() const override { return 1; }
  std::size_t state_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  const ParameterBox& param_box() const override { return box_; }
  ParameterVector sample_param_prior(Rng& rng) const override {
    return {-2.0 + 4.0 * rng.uniform()};
  }
  using StateSpaceModel::sample_state_prior;
  void sample_state_prior(std::span<double> x, Rng& rng) const override { x[0] = rng.normal(); }
  void sample_transition(const ParameterVector& theta, std::span<double> x, std::size_t,
                         Rng&) const override {
    x[0] = theta[0] * x[0] + b_;
  }
  double log_likelihood(const ParameterVector&, std::span<const double> x,
                        const Observation& y) const override {
    const double r = y.values.at(0) - x[0];
    return -0.5 * r * r;
  }

 private:
  double b_;
  ParameterBox box_;
};

/// Random-walk state, likelihood identically zero on the log scale.
class FlatModel final : public StateSpaceModel {
 public:
  explicit FlatModel(std::size_t dim = 2)
      : box_(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)) {}
  std::size_t param_dim() const override { return box_.dim(); }
  std::size_t state_dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  const ParameterBox& param_box() const override { return box_; }
  ParameterVector sample_param_prior(Rng& rng) const override {
    std::vector<double> th(box_.dim());
    for (auto& v : th) v = rng.uniform();
    return ParameterVector(std::move(th));
  }
  using StateSpaceModel::sample_state_prior;
  void sample_state_prior(std::span<double> x, Rng& rng) const override { x[0] = rng.normal(); }
  void sample_transition(const ParameterVector&, std::span<double> x, std::size_t,
                         Rng& rng) const override {
    x[0] += rng.normal();
  }
  double log_likelihood(const ParameterVector&, std::span<const double>,
                        const Observation&) const override {
    return 0.0;
  }

 private:
  ParameterBox box_;
};

}  // namespace npf::testing

#endif
