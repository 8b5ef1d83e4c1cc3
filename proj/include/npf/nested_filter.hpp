#ifndef NPF_NESTED_FILTER_HPP
#define NPF_NESTED_FILTER_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "npf/inner_filter.hpp"
#include "npf/jitter.hpp"
#include "npf/metrics.hpp"
#include "npf/model.hpp"
#include "npf/snapshot.hpp"

namespace npf {

struct OuterParticle {
  ParameterVector theta;
  InnerCloud cloud;
  /// Unnormalised log-weight of the current step; 0 right after resampling.
  double log_weight = 0.0;
  /// Index of the pre-resample particle this one was copied from.
  std::size_t ancestor = 0;
};

struct NestedFilterState {
  std::vector<OuterParticle> outer;
  std::size_t t = 0;
  double last_log_norm = 0.0;

  std::size_t size() const noexcept { return outer.size(); }
};

/// Seed and worker count for the nested filter. Every random draw is taken
/// from a stream keyed by (seed, step, particle index), so output does not
/// depend on `workers`.
struct NestedFilterOptions {
  std::size_t n = 100;
  std::size_t m = 100;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

NestedFilterState nested_init(const StateSpaceModel& model, const NestedFilterOptions& opts);

/// Snapshot of the initial (prior) ensemble with uniform weights.
PosteriorSnapshot prior_snapshot(const NestedFilterState& state);

/// One recursive step: jitter each theta, advance its inner filter, weight by
/// u^M from the propagated cloud, then resample (theta, cloud) pairs jointly.
/// Throws StepFailure when every outer weight is zero.
PosteriorSnapshot nested_step(NestedFilterState& state, const StateSpaceModel& model,
                              const JitterConfig& jitter, const Observation& y,
                              const NestedFilterOptions& opts);

/// Optional ground truth and monitors used to fill a RunTrace.
struct RunContext {
  std::optional<ParameterVector> true_params;
  /// truth[t] is the hidden state at observation t (truth[0] at time 0).
  std::vector<StateVector> truth;
  double time_per_step = 1.0;
  const OmegaSet* omega = nullptr;
  /// d_omega is measured between the resampled ensemble and this measure.
  std::optional<WeightedSample> omega_reference;
};

class SnapshotSink {
 public:
  virtual ~SnapshotSink() = default;
  virtual void on_snapshot(const PosteriorSnapshot& snapshot, const TraceRecord& record) = 0;
};

TraceRecord make_trace_record(const PosteriorSnapshot& snapshot, const RunContext& ctx);

RunTrace run_nested(const StateSpaceModel& model, std::span<const Observation> observations,
                    const JitterConfig& jitter, const NestedFilterOptions& opts,
                    const RunContext& ctx = {}, std::span<SnapshotSink* const> sinks = {});

}  // namespace npf

#endif
