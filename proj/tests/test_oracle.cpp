#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "npf/oracle.hpp"

using namespace npf;

namespace {

// P(y_{1:T} | theta_k) by summing over every hidden path x_{0:T}.
double brute_force_likelihood(const GridHmm& h, std::size_t k, const std::vector<Observation>& obs) {
  const std::size_t t_len = obs.size();
  std::size_t paths = 1;
  for (std::size_t t = 0; t <= t_len; ++t) paths *= h.n_states;
  double total = 0.0;
  for (std::size_t code = 0; code < paths; ++code) {
    std::size_t c = code;
    std::vector<std::size_t> x(t_len + 1);
    for (auto& s : x) {
      s = c % h.n_states;
      c /= h.n_states;
    }
    double p = h.initial[x[0]];
    for (std::size_t t = 1; t <= t_len; ++t) {
      p *= h.transition[k][x[t - 1]][x[t]];
      p *= h.emission[k][x[t]][static_cast<std::size_t>(obs[t - 1].values[0])];
    }
    total += p;
  }
  return total;
}

GridHmm random_hmm(Rng& rng, std::size_t states, std::size_t symbols, std::size_t params) {
  auto simplex = [&](std::size_t n) {
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) s += (x = 0.05 + rng.uniform());
    for (auto& x : v) x /= s;
    return v;
  };
  GridHmm h;
  h.n_states = states;
  h.n_symbols = symbols;
  h.initial = simplex(states);
  h.param_prior = simplex(params);
  for (std::size_t k = 0; k < params; ++k) {
    h.param_points.push_back({static_cast<double>(k)});
    Matrix tr, em;
    for (std::size_t i = 0; i < states; ++i) {
      tr.push_back(simplex(states));
      em.push_back(simplex(symbols));
    }
    h.transition.push_back(tr);
    h.emission.push_back(em);
  }
  return h;
}

// Joint Gaussian log-density of y_{1:T} for the scalar linear model, from
// the explicit covariance matrix and a hand-rolled Cholesky factorisation.
double joint_gaussian_logpdf(double a, const LinearGaussianConfig& c, const std::vector<double>& y) {
  const std::size_t n = y.size();
  // Var(x_t) and Cov(x_s, x_t) = a^{t-s} Var(x_s) for s <= t, with t = 1..n.
  std::vector<double> vx(n + 1);
  vx[0] = c.p0;
  for (std::size_t t = 1; t <= n; ++t) vx[t] = a * a * vx[t - 1] + c.q;
  std::vector<std::vector<double>> s(n, std::vector<double>(n));
  std::vector<double> mu(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = c.c * std::pow(a, static_cast<double>(i + 1)) * c.m0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t lo = std::min(i, j), hi = std::max(i, j);
      s[i][j] = c.c * c.c * std::pow(a, static_cast<double>(hi - lo)) * vx[lo + 1];
    }
    s[i][i] += c.r;
  }
  std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double v = s[i][j];
      for (std::size_t k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
      l[i][j] = i == j ? std::sqrt(v) : v / l[j][j];
    }
  }
  std::vector<double> z(n);
  double logdet = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = y[i] - mu[i];
    for (std::size_t k = 0; k < i; ++k) v -= l[i][k] * z[k];
    z[i] = v / l[i][i];
    quad += z[i] * z[i];
    logdet += 2.0 * std::log(l[i][i]);
  }
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

}  // namespace

TEST_CASE("exact posterior matches path enumeration") {
  Rng rng(1);
  for (std::size_t states : {2u, 3u}) {
    const GridHmm h = random_hmm(rng, states, 3, 3);
    Rng data(2 + states);
    const auto obs = simulate_grid_hmm(h, 1, 5, data);
    const auto post = exact_param_posterior(h, obs);
    REQUIRE(post.size() == 6);
    for (std::size_t t = 0; t <= obs.size(); ++t) {
      const std::vector<Observation> prefix(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(t));
      std::vector<double> joint(h.n_params());
      double z = 0.0;
      for (std::size_t k = 0; k < h.n_params(); ++k) {
        joint[k] = h.param_prior[k] * brute_force_likelihood(h, k, prefix);
        z += joint[k];
      }
      for (std::size_t k = 0; k < h.n_params(); ++k) {
        CHECK(post[t][k] == doctest::Approx(joint[k] / z).epsilon(1e-12));
      }
    }
    for (std::size_t k = 0; k < h.n_params(); ++k) {
      const auto f = exact_conditional_filter(h, k, obs);
      double prod = 1.0;
      for (double u : f.likelihoods) prod *= u;
      CHECK(prod == doctest::Approx(brute_force_likelihood(h, k, obs)).epsilon(1e-12));
    }
  }
}

TEST_CASE("uniform model keeps the filter uniform") {
  GridHmm h;
  h.n_states = 2;
  h.n_symbols = 2;
  h.initial = {0.5, 0.5};
  h.param_points = {{0.0}, {1.0}};
  h.param_prior = {0.3, 0.7};
  h.transition = {{{0.5, 0.5}, {0.5, 0.5}}, {{0.5, 0.5}, {0.5, 0.5}}};
  h.emission = {{{0.5, 0.5}, {0.5, 0.5}}, {{0.5, 0.5}, {0.5, 0.5}}};
  const std::vector<Observation> obs{{{0.0}, 1}, {{1.0}, 2}, {{1.0}, 3}};
  const auto f = exact_conditional_filter(h, 0, obs);
  for (const auto& p : f.filtered) CHECK(p[0] == doctest::Approx(0.5));
  for (double u : f.likelihoods) CHECK(u == doctest::Approx(0.5));
  // u_t is the same for both parameters, so the posterior stays at the prior.
  for (const auto& p : exact_param_posterior(h, obs)) {
    CHECK(p[0] == doctest::Approx(0.3));
    CHECK(p[1] == doctest::Approx(0.7));
  }
}

TEST_CASE("two-state filter by hand") {
  GridHmm h;
  h.n_states = 2;
  h.n_symbols = 2;
  h.initial = {0.5, 0.5};
  h.param_points = {{0.0}};
  h.param_prior = {1.0};
  h.transition = {{{0.9, 0.1}, {0.2, 0.8}}};
  h.emission = {{{0.8, 0.2}, {0.3, 0.7}}};
  const std::vector<Observation> obs{{{0.0}, 1}, {{0.0}, 2}, {{1.0}, 3}};
  const auto f = exact_conditional_filter(h, 0, obs);
  // Step 1: predict (0.55, 0.45); unnormalised (0.44, 0.135); u = 0.575.
  CHECK(f.predictive[1][0] == doctest::Approx(0.55));
  CHECK(f.likelihoods[0] == doctest::Approx(0.575));
  const double p1 = 0.44 / 0.575;
  CHECK(f.filtered[1][0] == doctest::Approx(p1));
  // Step 2.
  const double q2 = 0.9 * p1 + 0.2 * (1.0 - p1);
  const double u2 = 0.8 * q2 + 0.3 * (1.0 - q2);
  CHECK(f.likelihoods[1] == doctest::Approx(u2));
  const double p2 = 0.8 * q2 / u2;
  CHECK(f.filtered[2][0] == doctest::Approx(p2));
  // Step 3 observes symbol 1.
  const double q3 = 0.9 * p2 + 0.2 * (1.0 - p2);
  const double u3 = 0.2 * q3 + 0.7 * (1.0 - q3);
  CHECK(f.likelihoods[2] == doctest::Approx(u3));
  CHECK(f.filtered[3][0] == doctest::Approx(0.2 * q3 / u3));
}

TEST_CASE("single state filter is a point mass") {
  GridHmm h;
  h.n_states = 1;
  h.n_symbols = 2;
  h.initial = {1.0};
  h.param_points = {{0.0}};
  h.param_prior = {1.0};
  h.transition = {{{1.0}}};
  h.emission = {{{0.4, 0.6}}};
  const std::vector<Observation> obs{{{0.0}, 1}, {{1.0}, 2}};
  const auto f = exact_conditional_filter(h, 0, obs);
  for (const auto& p : f.filtered) CHECK(p[0] == 1.0);
  CHECK(f.likelihoods[0] == doctest::Approx(0.4));
  CHECK(f.likelihoods[1] == doctest::Approx(0.6));
}

TEST_CASE("one-step Bayes arithmetic") {
  // One state, emissions chosen so that u_1 = (0.2, 0.6).
  GridHmm h;
  h.n_states = 1;
  h.n_symbols = 2;
  h.initial = {1.0};
  h.param_points = {{0.0}, {1.0}};
  h.param_prior = {0.5, 0.5};
  h.transition = {{{1.0}}, {{1.0}}};
  h.emission = {{{0.2, 0.8}}, {{0.6, 0.4}}};
  const auto post = exact_param_posterior(h, std::vector<Observation>{{{0.0}, 1}});
  CHECK(post[1][0] == doctest::Approx(0.25));
  CHECK(post[1][1] == doctest::Approx(0.75));
}

TEST_CASE("identifiable grid concentrates on the true point") {
  const GridHmm h = GridHmm::identifiable_two_state();
  double early = 0.0, late = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto obs = simulate_grid_hmm(h, 1, 300, rng);
    const auto post = exact_param_posterior(h, obs);
    early += post[20][1];
    late += post[300][1];
  }
  CHECK(late > early);
  CHECK(late / 20.0 > 0.99);
}

TEST_CASE("grid HMM validation and JSON round-trip") {
  GridHmm h = GridHmm::sticky_two_state();
  CHECK_NOTHROW(h.validate());
  const GridHmm back = GridHmm::from_json(h.to_json());
  CHECK(back.param_points == h.param_points);
  CHECK(back.transition == h.transition);
  CHECK(back.emission == h.emission);
  h.transition[0][0] = {0.5, 0.6};
  CHECK_THROWS_AS(h.validate(), InvalidInput);
  h = GridHmm::sticky_two_state();
  h.emission[1][0] = {1.0, 0.0};
  CHECK_THROWS_AS(h.validate(), InvalidInput);
}

TEST_CASE("Kalman evidence equals the joint Gaussian density") {
  LinearGaussianConfig cfg;
  cfg.c = 1.3;
  cfg.q = 0.7;
  cfg.r = 0.4;
  cfg.m0 = 0.5;
  cfg.p0 = 2.0;
  Rng rng(3);
  const auto obs = simulate_linear_gaussian(0.6, cfg, 6, rng);
  std::vector<double> y;
  for (const auto& o : obs) y.push_back(o.values[0]);
  CHECK(kalman_filter(0.6, cfg, obs).log_evidence ==
        doctest::Approx(joint_gaussian_logpdf(0.6, cfg, y)).epsilon(1e-10));
  // A constant path is the same as the fixed-coefficient filter.
  const std::vector<double> path(obs.size(), 0.6);
  CHECK(kalman_filter(path, cfg, obs).filtered_mean == kalman_filter(0.6, cfg, obs).filtered_mean);
  CHECK_THROWS_AS(kalman_filter(std::vector<double>{0.6}, cfg, obs), InvalidInput);
}

TEST_CASE("quadrature posterior mean of a") {
  const LinearGaussianConfig cfg;
  const auto prior_only = linear_gaussian_posterior_means(cfg, {});
  REQUIRE(prior_only.size() == 1);
  CHECK(prior_only[0] == doctest::Approx(0.525));
  Rng rng(4);
  const auto obs = simulate_linear_gaussian(0.8, cfg, 400, rng);
  const auto means = linear_gaussian_posterior_means(cfg, obs);
  CHECK(means.size() == obs.size() + 1);
  CHECK(std::abs(means.back() - 0.8) < 0.1);
  const auto coarse = linear_gaussian_posterior_means(cfg, obs, 4001);
  CHECK(coarse.back() == doctest::Approx(means.back()).epsilon(1e-6));
}
