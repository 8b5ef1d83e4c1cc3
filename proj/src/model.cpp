#include "npf/model.hpp"

#include <algorithm>
#include <cmath>

namespace npf {

ParameterBox::ParameterBox(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw InvalidInput("parameter box: bound dimensions differ");
  }
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    if (!(lower_[k] < upper_[k])) {
      throw InvalidInput("parameter box: lower bound must be below upper bound");
    }
  }
}

bool ParameterBox::contains(const ParameterVector& theta) const {
  if (theta.size() != dim()) return false;
  for (std::size_t k = 0; k < dim(); ++k) {
    if (!(theta[k] >= lower_[k] && theta[k] <= upper_[k])) return false;
  }
  return true;
}

double ParameterBox::diameter() const {
  double sq = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) {
    const double w = upper_[k] - lower_[k];
    sq += w * w;
  }
  return std::sqrt(sq);
}

std::vector<double> ParameterBox::midpoint() const {
  std::vector<double> m(dim());
  for (std::size_t k = 0; k < dim(); ++k) m[k] = 0.5 * (lower_[k] + upper_[k]);
  return m;
}

std::vector<double> ParameterBox::half_width() const {
  std::vector<double> r(dim());
  for (std::size_t k = 0; k < dim(); ++k) r[k] = 0.5 * (upper_[k] - lower_[k]);
  return r;
}

std::vector<double> StateCloud::mean() const {
  std::vector<double> m(dim_, 0.0);
  if (count_ == 0) return m;
  for (std::size_t j = 0; j < count_; ++j) {
    const auto x = (*this)[j];
    for (std::size_t d = 0; d < dim_; ++d) m[d] += x[d];
  }
  for (auto& v : m) v /= static_cast<double>(count_);
  return m;
}

StateVector StateSpaceModel::sample_state_prior(Rng& rng) const {
  StateVector x(std::vector<double>(state_dim(), 0.0));
  sample_state_prior(x.span(), rng);
  return x;
}

StateVector StateSpaceModel::transition(const ParameterVector& theta,
                                        const StateVector& x, std::size_t t,
                                        Rng& rng) const {
  if (x.size() != state_dim()) throw InvalidInput("transition: state dimension mismatch");
  StateVector out = x;
  sample_transition(theta, out.span(), t, rng);
  return out;
}

std::vector<double> log_likelihood_batch(const StateSpaceModel& model,
                                         const ParameterVector& theta,
                                         std::span<const StateVector> states,
                                         const Observation& y) {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& x : states) {
    if (x.size() != model.state_dim()) {
      throw InvalidInput("log_likelihood_batch: state dimension mismatch");
    }
    out.push_back(model.log_likelihood(theta, x.span(), y));
  }
  return out;
}

std::vector<double> log_likelihood_batch(const StateSpaceModel& model,
                                         const ParameterVector& theta,
                                         const StateCloud& states,
                                         const Observation& y) {
  if (!states.empty() && states.dim() != model.state_dim()) {
    throw InvalidInput("log_likelihood_batch: state dimension mismatch");
  }
  std::vector<double> out(states.size());
  for (std::size_t j = 0; j < states.size(); ++j) {
    out[j] = model.log_likelihood(theta, states[j], y);
  }
  return out;
}

ParameterVector clamp_to_box(const ParameterVector& theta, const ParameterBox& box) {
  if (theta.size() != box.dim()) throw InvalidInput("clamp_to_box: dimension mismatch");
  ParameterVector out = theta;
  for (std::size_t k = 0; k < box.dim(); ++k) {
    out[k] = std::clamp(out[k], box.lower(k), box.upper(k));
  }
  return out;
}

}  // namespace npf
