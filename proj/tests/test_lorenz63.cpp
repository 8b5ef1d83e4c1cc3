#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "npf/lorenz63.hpp"

using namespace npf;
using namespace npf::lorenz63;

namespace {

const Params kTruth{};
const State3 kZero{0.0, 0.0, 0.0};

}  // namespace

TEST_CASE("euler_step golden values") {
  CHECK(euler_step(kTruth, kZero, 1e-3, kZero) == kZero);
  const State3 out = euler_step(kTruth, {1.0, 1.0, 1.0}, 1e-3, kZero);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == doctest::Approx(1.026).epsilon(1e-15));
  CHECK(out[2] == doctest::Approx(1.0 + 1e-3 * (1.0 - 8.0 / 3.0)).epsilon(1e-15));
  CHECK(out[2] == doctest::Approx(0.9983333333333333).epsilon(1e-15));
}

TEST_CASE("euler_step is affine in the noise") {
  const State3 x{-3.0, 4.0, 22.0};
  const State3 noise{0.3, -1.2, 2.5};
  const State3 a = euler_step(kTruth, x, 1e-3, noise);
  const State3 b = euler_step(kTruth, x, 1e-3, kZero);
  for (int k = 0; k < 3; ++k) {
    CHECK(a[k] - b[k] == doctest::Approx(std::sqrt(1e-3) * noise[k]).epsilon(1e-9));
  }
}

TEST_CASE("composite transition composes Euler steps") {
  const std::vector<double> start{-5.9, -5.5, 24.6};
  {
    std::vector<double> x = start;
    Rng rng(1), rng2(1);
    composite_transition(kTruth, x, 1, 1e-3, rng);
    const State3 n{rng2.normal(), rng2.normal(), rng2.normal()};
    const State3 e = euler_step(kTruth, {start[0], start[1], start[2]}, 1e-3, n);
    for (int k = 0; k < 3; ++k) CHECK(x[k] == e[k]);
  }
  std::vector<double> x = start;
  Rng rng(2);
  composite_transition(kTruth, x, 40, 1e-3, rng, 0.0);
  State3 s{start[0], start[1], start[2]};
  for (int k = 0; k < 40; ++k) s = euler_step(kTruth, s, 1e-3, kZero);
  for (int k = 0; k < 3; ++k) CHECK(x[k] == s[k]);
}

TEST_CASE("short-time variance grows linearly with decimation") {
  const std::vector<double> start{1.0, 2.0, 20.0};
  auto variance = [&](std::size_t dec) {
    Rng rng(3 + dec);
    const int reps = 10000;
    std::vector<double> s(3, 0.0), s2(3, 0.0);
    for (int r = 0; r < reps; ++r) {
      std::vector<double> x = start;
      composite_transition(kTruth, x, dec, 1e-4, rng);
      for (int k = 0; k < 3; ++k) {
        s[k] += x[k];
        s2[k] += x[k] * x[k];
      }
    }
    std::vector<double> v(3);
    for (int k = 0; k < 3; ++k) v[k] = s2[k] / reps - (s[k] / reps) * (s[k] / reps);
    return v;
  };
  const auto v1 = variance(4);
  const auto v2 = variance(8);
  for (int k = 0; k < 3; ++k) {
    CHECK(v1[k] == doctest::Approx(4e-4).epsilon(0.1));
    CHECK(v2[k] / v1[k] == doctest::Approx(2.0).epsilon(0.1));
  }
}

TEST_CASE("observation log-likelihood") {
  const std::vector<double> x{2.0, 123.0, 25.0};
  const Observation at_mode{{0.8 * 2.0, 0.8 * 25.0}, 1};
  CHECK(observe_loglik(0.8, x, at_mode, 0.1) == doctest::Approx(-std::log(2.0 * std::numbers::pi * 0.1)));
  const double delta = 0.37;
  const Observation moved{{0.8 * 2.0 + delta, 0.8 * 25.0}, 1};
  CHECK(observe_loglik(0.8, x, moved, 0.1) - observe_loglik(0.8, x, at_mode, 0.1) ==
        doctest::Approx(-delta * delta / 0.2));
  const Observation off{{1.0, 19.0}, 1};
  std::vector<double> x2 = x;
  x2[1] = -77.0;
  CHECK(observe_loglik(0.8, x, off, 0.1) == observe_loglik(0.8, x2, off, 0.1));
  CHECK_THROWS_AS(observe_loglik(0.8, x, Observation{{1.0}, 1}, 0.1), InvalidInput);
}

TEST_CASE("synthetic data generation") {
  const Config cfg;
  Rng rng(4);
  const auto empty = generate_synthetic(kTruth, cfg, 0, rng);
  CHECK(empty.path.size() == 1);
  CHECK(empty.observations.empty());

  Rng a(5), b(5);
  const auto d1 = generate_synthetic(kTruth, cfg, 25, a);
  const auto d2 = generate_synthetic(kTruth, cfg, 25, b);
  CHECK(d1.path == d2.path);
  CHECK(d1.observations == d2.observations);
  CHECK(d1.path.size() == 25 * 40 + 1);
  CHECK(d1.observed_states(40).size() == 26);
  CHECK(d1.observed_states(40)[25] == d1.path.back());
  CHECK(d1.observations.back().time_index == 25);
}

TEST_CASE("trajectories stay on a bounded attractor") {
  const Config cfg;
  int bounded = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto d = generate_synthetic(kTruth, cfg, 625, rng);  // 25 time units
    bool ok = true;
    for (const auto& x : d.path) {
      if (std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) >= 100.0) ok = false;
    }
    bounded += ok ? 1 : 0;
  }
  CHECK(bounded == 20);
}

TEST_CASE("dataset files round-trip") {
  const Config cfg;
  Rng rng(6);
  const auto d = generate_synthetic(kTruth, cfg, 30, rng);
  const auto dir = std::filesystem::temp_directory_path() / "npf_lorenz_dataset_test";
  std::filesystem::create_directories(dir);
  DatasetHeader head{6, cfg.delta, cfg.decimation, kTruth, {"note=x"}};
  write_dataset(d, head, dir / "s.csv", dir / "o.csv");
  DatasetHeader back;
  const auto obs = read_observations(dir / "o.csv", &back);
  CHECK(obs == d.observations);
  CHECK(back.seed == 6);
  CHECK(back.decimation == 40);
  CHECK(back.true_params.b == kTruth.b);
  std::filesystem::remove_all(dir);
}

TEST_CASE("configuration checks") {
  Config cfg;
  cfg.delta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = Config{};
  cfg.decimation = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  CHECK(Config{}.observation_interval() == doctest::Approx(0.04));
  CHECK_THROWS_AS(Params::from_vector(ParameterVector{1.0, 2.0}), InvalidInput);
}
