#include "npf/nested_filter.hpp"

#include <cmath>
#include <limits>

#include "npf/parallel.hpp"

namespace npf {

namespace {

void write_mean(const InnerCloud& cloud, std::vector<double>& out, std::size_t i) {
  const auto m = cloud.particles.mean();
  std::ranges::copy(m, out.begin() + static_cast<std::ptrdiff_t>(i * m.size()));
}

}  // namespace

NestedFilterState nested_init(const StateSpaceModel& model, const NestedFilterOptions& opts) {
  if (opts.n == 0 || opts.m == 0) throw InvalidInput("nested filter: N and M must be positive");
  NestedFilterState state;
  state.outer.resize(opts.n);
  parallel_for(opts.n, opts.workers, [&](std::size_t i) {
    Rng param_rng = Rng::stream(opts.seed, StreamTag::param_prior, i);
    Rng state_rng = Rng::stream(opts.seed, StreamTag::state_prior, i);
    auto& p = state.outer[i];
    p.theta = model.sample_param_prior(param_rng);
    p.cloud = inner_init(model, opts.m, state_rng);
    p.ancestor = i;
  });
  return state;
}

PosteriorSnapshot prior_snapshot(const NestedFilterState& state) {
  const std::size_t n = state.size();
  PosteriorSnapshot snap;
  snap.step = state.t;
  std::vector<ParameterVector> thetas;
  thetas.reserve(n);
  for (const auto& p : state.outer) thetas.push_back(p.theta);
  snap.posterior = WeightedSample::uniform(std::move(thetas));
  snap.ancestors.resize(n);
  for (std::size_t i = 0; i < n; ++i) snap.ancestors[i] = i;
  snap.log_likelihoods.assign(n, 0.0);
  snap.state_dim = n > 0 ? state.outer.front().cloud.particles.dim() : 0;
  snap.state_means.assign(n * snap.state_dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) write_mean(state.outer[i].cloud, snap.state_means, i);
  return snap;
}

PosteriorSnapshot nested_step(NestedFilterState& state, const StateSpaceModel& model,
                              const JitterConfig& jitter, const Observation& y,
                              const NestedFilterOptions& opts) {
  const std::size_t step = state.t + 1;
  if (y.time_index != step) throw InvalidInput("nested_step: observation index out of order");
  jitter.validate();
  const std::size_t n = state.size();
  const std::size_t dx = model.state_dim();

  PosteriorSnapshot snap;
  snap.step = step;
  snap.state_dim = dx;
  snap.posterior.points.resize(n);
  snap.log_likelihoods.resize(n);
  snap.state_means.assign(n * dx, 0.0);

  parallel_for(n, opts.workers, [&](std::size_t i) {
    Rng rng = Rng::stream(opts.seed, StreamTag::step, step, i);
    auto& particle = state.outer[i];
    const ParameterVector theta = jitter_sample(jitter, particle.theta, rng);
    propagate(model, theta, particle.cloud, step, rng);
    try {
      const WeighResult w = weigh(model, theta, particle.cloud, y);
      snap.log_likelihoods[i] = w.log_mean_lik;
      particle.cloud.particles = resample_cloud(particle.cloud.particles, w.weights, rng);
    } catch (const DegenerateWeights&) {
      // u^M = 0: this theta cannot be selected, its cloud is left unresampled.
      snap.log_likelihoods[i] = -std::numeric_limits<double>::infinity();
    }
    particle.log_weight = snap.log_likelihoods[i];
    snap.posterior.points[i] = theta;
    write_mean(particle.cloud, snap.state_means, i);
  });

  double log_sum = 0.0;
  try {
    snap.posterior.weights = normalize_log_weights(snap.log_likelihoods, log_sum);
  } catch (const DegenerateWeights& e) {
    throw StepFailure(step, std::string("degenerate outer weights: ") + e.what());
  }
  snap.log_norm = log_sum - std::log(static_cast<double>(n));

  Rng resample_rng = Rng::stream(opts.seed, StreamTag::outer_resample, step);
  snap.ancestors = multinomial_indices(snap.posterior.weights, n, resample_rng);

  std::vector<OuterParticle> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = snap.ancestors[i];
    next[i].theta = snap.posterior.points[a];
    next[i].cloud = state.outer[a].cloud;
    next[i].log_weight = 0.0;
    next[i].ancestor = a;
  }
  state.outer = std::move(next);
  state.t = step;
  state.last_log_norm = snap.log_norm;
  return snap;
}

TraceRecord make_trace_record(const PosteriorSnapshot& snapshot, const RunContext& ctx) {
  TraceRecord rec;
  rec.step = snapshot.step;
  rec.time = static_cast<double>(snapshot.step) * ctx.time_per_step;
  const ParameterVector mean = posterior_mean(snapshot.posterior);
  rec.theta_hat = mean.values();
  if (ctx.true_params) rec.nstd = nstd(snapshot.posterior, *ctx.true_params);
  if (snapshot.step < ctx.truth.size()) {
    const auto est = snapshot.state_estimate();
    const auto& truth = ctx.truth[snapshot.step];
    rec.state_error.resize(est.size());
    for (std::size_t d = 0; d < est.size(); ++d) rec.state_error[d] = est[d] - truth[d];
  }
  rec.ess = ess(snapshot.posterior.weights);
  rec.log_evidence_increment = snapshot.log_norm;
  if (ctx.omega != nullptr && ctx.omega_reference) {
    rec.d_omega = d_omega(snapshot.resampled(), *ctx.omega_reference, *ctx.omega);
  }
  return rec;
}

RunTrace run_nested(const StateSpaceModel& model, std::span<const Observation> observations,
                    const JitterConfig& jitter, const NestedFilterOptions& opts,
                    const RunContext& ctx, std::span<SnapshotSink* const> sinks) {
  RunTrace trace;
  trace.param_dim = model.param_dim();
  trace.state_dim = model.state_dim();
  trace.has_nstd = ctx.true_params.has_value();
  trace.has_state_error = !ctx.truth.empty();
  trace.has_d_omega = ctx.omega != nullptr && ctx.omega_reference.has_value();

  auto emit = [&](const PosteriorSnapshot& snap) {
    TraceRecord rec = make_trace_record(snap, ctx);
    for (SnapshotSink* sink : sinks) sink->on_snapshot(snap, rec);
    trace.records.push_back(std::move(rec));
  };

  NestedFilterState state = nested_init(model, opts);
  emit(prior_snapshot(state));
  for (const auto& y : observations) emit(nested_step(state, model, jitter, y, opts));
  return trace;
}

}  // namespace npf
