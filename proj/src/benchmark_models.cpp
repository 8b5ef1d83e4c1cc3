#include "npf/benchmark_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace npf {

namespace {

ParameterBox padded_bounding_box(const GridHmm& hmm) {
  const std::size_t d = hmm.param_points.front().size();
  std::vector<double> lo(d), hi(d);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> coords;
    for (const auto& p : hmm.param_points) coords.push_back(p[k]);
    std::ranges::sort(coords);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < coords.size(); ++i) {
      if (coords[i] > coords[i - 1]) gap = std::min(gap, coords[i] - coords[i - 1]);
    }
    const double pad = std::isfinite(gap) ? 0.5 * gap : 0.5;
    lo[k] = coords.front() - pad;
    hi[k] = coords.back() + pad;
  }
  return {lo, hi};
}

std::size_t pick(std::span<const double> p, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    acc += p[k];
    if (u < acc) return k;
  }
  return p.size() - 1;
}

}  // namespace

GridHmmModel::GridHmmModel(GridHmm hmm, std::optional<ParameterBox> box)
    : hmm_(std::move(hmm)) {
  hmm_.validate();
  box_ = box ? std::move(*box) : padded_bounding_box(hmm_);
  if (box_.dim() != param_dim()) throw InvalidInput("grid hmm model: box dimension mismatch");
  for (const auto& p : hmm_.param_points) {
    if (!box_.contains(p)) throw InvalidInput("grid hmm model: grid point outside box");
  }
}

std::size_t GridHmmModel::nearest_index(const ParameterVector& theta) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < hmm_.n_params(); ++k) {
    double d = 0.0;
    for (std::size_t c = 0; c < theta.size(); ++c) {
      const double diff = theta[c] - hmm_.param_points[k][c];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

ParameterVector GridHmmModel::sample_param_prior(Rng& rng) const {
  return hmm_.param_points[pick(hmm_.param_prior, rng.uniform())];
}

void GridHmmModel::sample_state_prior(std::span<double> x, Rng& rng) const {
  x[0] = static_cast<double>(pick(hmm_.initial, rng.uniform()));
}

void GridHmmModel::sample_transition(const ParameterVector& theta, std::span<double> x,
                                     std::size_t, Rng& rng) const {
  const auto& row = hmm_.transition[nearest_index(theta)][static_cast<std::size_t>(x[0])];
  x[0] = static_cast<double>(pick(row, rng.uniform()));
}

double GridHmmModel::log_likelihood(const ParameterVector& theta, std::span<const double> x,
                                    const Observation& y) const {
  const auto sym = static_cast<std::size_t>(y.values.at(0));
  if (sym >= hmm_.n_symbols) throw InvalidInput("grid hmm model: symbol outside alphabet");
  return std::log(hmm_.emission[nearest_index(theta)][static_cast<std::size_t>(x[0])][sym]);
}

ParameterVector GridHmmModel::canonical_parameter(const ParameterVector& theta) const {
  return hmm_.param_points[nearest_index(theta)];
}

ParameterVector LinearGaussianModel::sample_param_prior(Rng& rng) const {
  return {cfg_.box.lower(0) + (cfg_.box.upper(0) - cfg_.box.lower(0)) * rng.uniform()};
}

void LinearGaussianModel::sample_state_prior(std::span<double> x, Rng& rng) const {
  x[0] = rng.normal(cfg_.m0, std::sqrt(cfg_.p0));
}

void LinearGaussianModel::sample_transition(const ParameterVector& theta, std::span<double> x,
                                            std::size_t, Rng& rng) const {
  x[0] = theta[0] * x[0] + rng.normal(0.0, std::sqrt(cfg_.q));
}

double LinearGaussianModel::log_likelihood(const ParameterVector&, std::span<const double> x,
                                           const Observation& y) const {
  const double r = y.values.at(0) - cfg_.c * x[0];
  return -0.5 * (std::log(2.0 * std::numbers::pi * cfg_.r) + r * r / cfg_.r);
}

}  // namespace npf
