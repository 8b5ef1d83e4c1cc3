#ifndef NPF_TYPES_HPP
#define NPF_TYPES_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace npf {

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every likelihood in a weighting step evaluated to -inf.
class DegenerateWeights : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A filter step failed; carries the 1-based observation index.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Real-valued coordinate vector, tagged so parameters and states do not mix.
template <class Tag>
class Coordinates {
 public:
  Coordinates() = default;
  explicit Coordinates(std::vector<double> values) : values_(std::move(values)) {}
  Coordinates(std::initializer_list<double> values) : values_(values) {}
  explicit Coordinates(std::span<const double> values)
      : values_(values.begin(), values.end()) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const Coordinates&, const Coordinates&) = default;

 private:
  std::vector<double> values_;
};

struct ParameterTag {};
struct StateTag {};

using ParameterVector = Coordinates<ParameterTag>;
using StateVector = Coordinates<StateTag>;

struct Observation {
  std::vector<double> values;
  std::size_t time_index = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Compact support [lower, upper] of the static parameters.
class ParameterBox {
 public:
  ParameterBox() = default;
  ParameterBox(std::vector<double> lower, std::vector<double> upper);

  std::size_t dim() const noexcept { return lower_.size(); }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  double lower(std::size_t k) const { return lower_[k]; }
  double upper(std::size_t k) const { return upper_[k]; }

  bool contains(const ParameterVector& theta) const;
  /// Euclidean diameter, sup ||a - b|| over the box.
  double diameter() const;
  std::vector<double> midpoint() const;
  std::vector<double> half_width() const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// M states of equal dimension in one contiguous buffer.
class StateCloud {
 public:
  StateCloud() = default;
  StateCloud(std::size_t count, std::size_t dim)
      : count_(count), dim_(dim), data_(count * dim, 0.0) {}

  std::size_t size() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return count_ == 0; }

  std::span<double> operator[](std::size_t j) noexcept {
    return {data_.data() + j * dim_, dim_};
  }
  std::span<const double> operator[](std::size_t j) const noexcept {
    return {data_.data() + j * dim_, dim_};
  }

  StateVector state(std::size_t j) const { return StateVector((*this)[j]); }
  std::vector<double> mean() const;

  std::span<const double> raw() const noexcept { return data_; }

  friend bool operator==(const StateCloud&, const StateCloud&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

}  // namespace npf

#endif
