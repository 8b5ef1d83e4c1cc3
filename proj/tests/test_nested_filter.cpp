#include <doctest.h>

#include <cmath>
#include <vector>

#include "npf/benchmark_models.hpp"
#include "npf/nested_filter.hpp"
#include "npf/oracle.hpp"
#include "test_support.hpp"

using namespace npf;
using npf::testing::FlatModel;

namespace {

std::vector<Observation> flat_observations(std::size_t t) {
  std::vector<Observation> obs;
  for (std::size_t k = 1; k <= t; ++k) obs.push_back({{0.0}, k});
  return obs;
}

}  // namespace

TEST_CASE("minimal ensemble") {
  const LinearGaussianModel model(LinearGaussianConfig{});
  const NestedFilterOptions opts{1, 1, 3, 1};
  const auto state = nested_init(model, opts);
  REQUIRE(state.size() == 1);
  CHECK(state.outer[0].cloud.size() == 1);
  Rng p = Rng::stream(3, StreamTag::param_prior, 0);
  CHECK(state.outer[0].theta == model.sample_param_prior(p));
}

TEST_CASE("uniform prior sample is centred on the box midpoint") {
  const FlatModel model(3);
  const NestedFilterOptions opts{10000, 1, 4, 1};
  const auto state = nested_init(model, opts);
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (const auto& p : state.outer) mean += p.theta[k];
    mean /= 10000.0;
    // Uniform(0, 1): sd of the mean is sqrt(1/12 / 1e4).
    CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / 10000.0));
  }
}

TEST_CASE("same seed gives the same state and trace") {
  const LinearGaussianConfig cfg;
  const LinearGaussianModel model(cfg);
  Rng data_rng(1);
  const auto obs = simulate_linear_gaussian(0.8, cfg, 25, data_rng);
  const NestedFilterOptions opts{40, 30, 9, 1};
  const auto jit = JitterConfig::for_population(40, {0.01}, cfg.box);
  auto s1 = nested_init(model, opts);
  auto s2 = nested_init(model, opts);
  for (const auto& y : obs) {
    nested_step(s1, model, jit, y, opts);
    nested_step(s2, model, jit, y, opts);
  }
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1.outer[i].theta == s2.outer[i].theta);
    CHECK(s1.outer[i].cloud == s2.outer[i].cloud);
  }
}

TEST_CASE("worker count does not change the result") {
  const LinearGaussianConfig cfg;
  const LinearGaussianModel model(cfg);
  Rng data_rng(2);
  const auto obs = simulate_linear_gaussian(0.8, cfg, 20, data_rng);
  const auto jit = JitterConfig::for_population(64, {0.01}, cfg.box);
  const auto t1 = run_nested(model, obs, jit, {64, 32, 5, 1});
  const auto t4 = run_nested(model, obs, jit, {64, 32, 5, 4});
  REQUIRE(t1.records.size() == t4.records.size());
  for (std::size_t t = 0; t < t1.records.size(); ++t) {
    CHECK(t1.records[t].theta_hat == t4.records[t].theta_hat);
    CHECK(t1.records[t].ess == t4.records[t].ess);
    CHECK(t1.records[t].log_evidence_increment == t4.records[t].log_evidence_increment);
  }
}

TEST_CASE("single outer particle collapses to the parameter chain") {
  const LinearGaussianConfig cfg;
  const LinearGaussianModel model(cfg);
  Rng data_rng(3);
  const auto obs = simulate_linear_gaussian(0.8, cfg, 30, data_rng);
  const auto jit = JitterConfig::for_population(1, {0.01}, cfg.box);
  const NestedFilterOptions opts{1, 20, 7, 1};
  auto state = nested_init(model, opts);
  ParameterVector prev = state.outer[0].theta;
  for (const auto& y : obs) {
    const auto snap = nested_step(state, model, jit, y, opts);
    CHECK(snap.ancestors == std::vector<std::size_t>{0});
    CHECK(snap.posterior.weights[0] == 1.0);
    CHECK(state.outer[0].theta == snap.posterior.points[0]);
    CHECK(cfg.box.contains(state.outer[0].theta));
    prev = state.outer[0].theta;
  }
}

TEST_CASE("resampling moves theta together with its inner cloud") {
  const LinearGaussianConfig cfg;
  const LinearGaussianModel model(cfg);
  Rng data_rng(4);
  const auto obs = simulate_linear_gaussian(0.8, cfg, 3, data_rng);
  const auto jit = JitterConfig::for_population(30, {0.01}, cfg.box);
  const NestedFilterOptions opts{30, 10, 8, 1};
  auto state = nested_init(model, opts);
  for (const auto& y : obs) {
    auto before = state;
    const auto snap = nested_step(state, model, jit, y, opts);
    CHECK(state.size() == 30);
    // Replay the per-particle work to recover each pre-resample cloud.
    for (std::size_t i = 0; i < state.size(); ++i) {
      const std::size_t a = snap.ancestors[i];
      CHECK(state.outer[i].ancestor == a);
      CHECK(state.outer[i].theta == snap.posterior.points[a]);
      Rng rng = Rng::stream(opts.seed, StreamTag::step, y.time_index, a);
      OuterParticle p = before.outer[a];
      const auto theta = jitter_sample(jit, p.theta, rng);
      CHECK(theta == snap.posterior.points[a]);
      propagate(model, theta, p.cloud, y.time_index, rng);
      const auto w = weigh(model, theta, p.cloud, y);
      CHECK(w.log_mean_lik == snap.log_likelihoods[a]);
      CHECK(resample_cloud(p.cloud.particles, w.weights, rng) == state.outer[i].cloud.particles);
    }
  }
}

TEST_CASE("uninformative likelihood gives uniform outer weights") {
  const FlatModel model(2);
  const auto obs = flat_observations(10);
  const auto frozen = JitterConfig::frozen(model.param_box());
  const NestedFilterOptions opts{200, 5, 11, 1};
  auto state = nested_init(model, opts);
  for (const auto& y : obs) {
    const auto snap = nested_step(state, model, frozen, y, opts);
    for (double w : snap.posterior.weights) CHECK(w == doctest::Approx(1.0 / 200));
    CHECK(snap.log_norm == doctest::Approx(0.0));
    for (const auto& th : snap.posterior.points) CHECK(model.param_box().contains(th));
  }
}

TEST_CASE("frozen nested filter matches the exact grid posterior on average") {
  // One run wanders by about sqrt(T p (1 - p) / N) because the static theta
  // cloud is resampled every step, so compare the replicate average.
  const GridHmm hmm = GridHmm::sticky_two_state();
  const GridHmmModel model(hmm);
  Rng data_rng(5);
  const auto obs = simulate_grid_hmm(hmm, 2, 20, data_rng);
  const auto exact = exact_param_posterior(hmm, obs);
  const auto frozen = JitterConfig::frozen(model.param_box());
  const std::size_t n = 2000, reps = 16;
  std::vector<std::vector<double>> avg(obs.size() + 1, std::vector<double>(hmm.n_params(), 0.0));
  for (std::size_t r = 0; r < reps; ++r) {
    const NestedFilterOptions opts{n, 50, 100 + r, 1};
    auto state = nested_init(model, opts);
    for (const auto& y : obs) {
      const auto snap = nested_step(state, model, frozen, y, opts);
      for (std::size_t i = 0; i < n; ++i) {
        avg[y.time_index][model.nearest_index(snap.posterior.points[i])] +=
            snap.posterior.weights[i] / static_cast<double>(reps);
      }
    }
  }
  for (const auto& y : obs) {
    for (std::size_t k = 0; k < hmm.n_params(); ++k) {
      CHECK(std::abs(avg[y.time_index][k] - exact[y.time_index][k]) < 0.04);
    }
  }
}

TEST_CASE("empty observation list yields the prior record only") {
  const LinearGaussianModel model(LinearGaussianConfig{});
  const auto jit = JitterConfig::for_population(10, {0.01}, model.param_box());
  const auto trace = run_nested(model, {}, jit, {10, 5, 1, 1});
  REQUIRE(trace.records.size() == 1);
  CHECK(trace.records[0].step == 0);
  CHECK(trace.records[0].ess == doctest::Approx(10.0));
}

TEST_CASE("out-of-order observation is rejected") {
  const LinearGaussianModel model(LinearGaussianConfig{});
  const auto jit = JitterConfig::for_population(10, {0.01}, model.param_box());
  const NestedFilterOptions opts{10, 5, 1, 1};
  auto state = nested_init(model, opts);
  CHECK_THROWS_AS(nested_step(state, model, jit, Observation{{0.0}, 2}, opts), InvalidInput);
  CHECK_THROWS_AS(nested_init(model, {0, 5, 1, 1}), InvalidInput);
}

TEST_CASE("impossible observation raises a step failure") {
  // A grid HMM whose emissions never produce symbol 1 given any state would
  // fail validation, so use an observation outside the likelihood support.
  class Impossible final : public StateSpaceModel {
   public:
    std::size_t param_dim() const override { return 1; }
    std::size_t state_dim() const override { return 1; }
    std::size_t obs_dim() const override { return 1; }
    const ParameterBox& param_box() const override { return box_; }
    ParameterVector sample_param_prior(Rng& rng) const override { return {rng.uniform()}; }
    using StateSpaceModel::sample_state_prior;
    void sample_state_prior(std::span<double> x, Rng&) const override { x[0] = 0.0; }
    void sample_transition(const ParameterVector&, std::span<double>, std::size_t, Rng&) const override {}
    double log_likelihood(const ParameterVector&, std::span<const double>,
                          const Observation& y) const override {
      return y.values[0] > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
    }

   private:
    ParameterBox box_{{0.0}, {1.0}};
  } model;
  const auto jit = JitterConfig::frozen(model.param_box());
  const NestedFilterOptions opts{5, 5, 1, 1};
  auto state = nested_init(model, opts);
  nested_step(state, model, jit, Observation{{0.0}, 1}, opts);
  try {
    nested_step(state, model, jit, Observation{{1.0}, 2}, opts);
    FAIL("expected StepFailure");
  } catch (const StepFailure& e) {
    CHECK(e.step() == 2);
  }
}
