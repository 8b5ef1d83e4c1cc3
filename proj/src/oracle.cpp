#include "npf/oracle.hpp"

#include <cmath>
#include <numbers>

#include "npf/inner_filter.hpp"

namespace npf {

namespace {

void check_simplex(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InvalidInput(std::string(what) + ": negative probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput(std::string(what) + ": does not sum to 1");
}

std::size_t symbol_of(const Observation& y, std::size_t n_symbols) {
  if (y.values.empty()) throw InvalidInput("grid hmm: empty observation");
  const double v = y.values[0];
  if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(n_symbols)) {
    throw InvalidInput("grid hmm: observation symbol outside the alphabet");
  }
  return static_cast<std::size_t>(v);
}

std::size_t sample_categorical(std::span<const double> p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    acc += p[k];
    if (u < acc) return k;
  }
  return p.size() - 1;
}

}  // namespace

void GridHmm::validate() const {
  if (n_states == 0 || n_states > 8) throw InvalidInput("grid hmm: n_states must be in [1, 8]");
  if (n_params() == 0 || n_params() > 16) throw InvalidInput("grid hmm: n_params must be in [1, 16]");
  if (n_symbols == 0) throw InvalidInput("grid hmm: empty alphabet");
  if (param_prior.size() != n_params() || transition.size() != n_params() ||
      emission.size() != n_params()) {
    throw InvalidInput("grid hmm: per-parameter tables do not match the grid");
  }
  const std::size_t d = param_points.front().size();
  for (const auto& p : param_points) {
    if (p.size() != d || d == 0) throw InvalidInput("grid hmm: inconsistent parameter dimensions");
  }
  check_simplex(param_prior, "grid hmm param_prior");
  if (initial.size() != n_states) throw InvalidInput("grid hmm: initial distribution size");
  check_simplex(initial, "grid hmm initial");
  for (std::size_t k = 0; k < n_params(); ++k) {
    if (transition[k].size() != n_states || emission[k].size() != n_states) {
      throw InvalidInput("grid hmm: table row count");
    }
    for (std::size_t x = 0; x < n_states; ++x) {
      if (transition[k][x].size() != n_states) throw InvalidInput("grid hmm: transition shape");
      check_simplex(transition[k][x], "grid hmm transition row");
      if (emission[k][x].size() != n_symbols) throw InvalidInput("grid hmm: emission shape");
      for (double e : emission[k][x]) {
        if (!(e > 0.0)) throw InvalidInput("grid hmm: emission entries must be positive");
      }
    }
  }
}

nlohmann::json GridHmm::to_json() const {
  nlohmann::json j;
  j["n_states"] = n_states;
  j["n_symbols"] = n_symbols;
  std::vector<std::vector<double>> pts;
  for (const auto& p : param_points) pts.push_back(p.values());
  j["param_points"] = pts;
  j["param_prior"] = param_prior;
  j["initial"] = initial;
  j["transition"] = transition;
  j["emission"] = emission;
  return j;
}

GridHmm GridHmm::from_json(const nlohmann::json& j) {
  GridHmm h;
  h.n_states = j.at("n_states").get<std::size_t>();
  h.n_symbols = j.at("n_symbols").get<std::size_t>();
  for (const auto& p : j.at("param_points")) {
    h.param_points.emplace_back(p.get<std::vector<double>>());
  }
  h.param_prior = j.at("param_prior").get<std::vector<double>>();
  h.initial = j.at("initial").get<std::vector<double>>();
  h.transition = j.at("transition").get<std::vector<Matrix>>();
  h.emission = j.at("emission").get<std::vector<Matrix>>();
  h.validate();
  return h;
}

GridHmm GridHmm::sticky_two_state() {
  GridHmm h;
  h.n_states = 2;
  h.n_symbols = 2;
  h.initial = {0.5, 0.5};
  for (double stay : {0.6, 0.75, 0.9}) {
    h.param_points.push_back({stay});
    h.transition.push_back({{stay, 1.0 - stay}, {1.0 - stay, stay}});
    h.emission.push_back({{0.85, 0.15}, {0.15, 0.85}});
  }
  h.param_prior = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return h;
}

GridHmm GridHmm::identifiable_two_state() {
  GridHmm h;
  h.n_states = 2;
  h.n_symbols = 3;
  h.initial = {0.5, 0.5};
  for (double theta : {0.2, 0.5, 0.8}) {
    const double stay = theta;
    // Symbol 2 is a state-independent marker whose rate moves with theta.
    const double marker = theta - 0.1;
    const double hit = 0.85 * (1.0 - marker);
    const double miss = 0.15 * (1.0 - marker);
    h.param_points.push_back({theta});
    h.transition.push_back({{stay, 1.0 - stay}, {1.0 - stay, stay}});
    h.emission.push_back({{hit, miss, marker}, {miss, hit, marker}});
  }
  h.param_prior = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return h;
}

ConditionalFilterResult exact_conditional_filter(const GridHmm& hmm, std::size_t k,
                                                 std::span<const Observation> observations) {
  hmm.validate();
  if (k >= hmm.n_params()) throw InvalidInput("grid hmm: parameter index out of range");
  const std::size_t s = hmm.n_states;
  ConditionalFilterResult out;
  out.predictive.push_back(hmm.initial);
  out.filtered.push_back(hmm.initial);
  for (const auto& y : observations) {
    const std::size_t sym = symbol_of(y, hmm.n_symbols);
    const auto& prev = out.filtered.back();
    std::vector<double> pred(s, 0.0);
    for (std::size_t from = 0; from < s; ++from) {
      for (std::size_t to = 0; to < s; ++to) pred[to] += prev[from] * hmm.transition[k][from][to];
    }
    std::vector<double> filt(s);
    double u = 0.0;
    for (std::size_t x = 0; x < s; ++x) {
      filt[x] = pred[x] * hmm.emission[k][x][sym];
      u += filt[x];
    }
    for (auto& v : filt) v /= u;
    out.predictive.push_back(std::move(pred));
    out.filtered.push_back(std::move(filt));
    out.likelihoods.push_back(u);
  }
  return out;
}

std::vector<std::vector<double>> exact_param_posterior(const GridHmm& hmm,
                                                       std::span<const Observation> observations) {
  hmm.validate();
  std::vector<std::vector<double>> u(hmm.n_params());
  for (std::size_t k = 0; k < hmm.n_params(); ++k) {
    u[k] = exact_conditional_filter(hmm, k, observations).likelihoods;
  }
  std::vector<std::vector<double>> post;
  post.push_back(hmm.param_prior);
  for (std::size_t t = 0; t < observations.size(); ++t) {
    std::vector<double> next(hmm.n_params());
    double total = 0.0;
    for (std::size_t k = 0; k < hmm.n_params(); ++k) {
      next[k] = post.back()[k] * u[k][t];
      total += next[k];
    }
    for (auto& v : next) v /= total;
    post.push_back(std::move(next));
  }
  return post;
}

std::vector<Observation> simulate_grid_hmm(const GridHmm& hmm, std::size_t k, std::size_t length,
                                           Rng& rng, std::vector<std::size_t>* states) {
  hmm.validate();
  if (k >= hmm.n_params()) throw InvalidInput("grid hmm: parameter index out of range");
  std::vector<Observation> out;
  std::size_t x = sample_categorical(hmm.initial, rng);
  if (states != nullptr) states->assign(1, x);
  for (std::size_t t = 1; t <= length; ++t) {
    x = sample_categorical(hmm.transition[k][x], rng);
    std::vector<double> e = hmm.emission[k][x];
    double total = 0.0;
    for (double v : e) total += v;
    for (auto& v : e) v /= total;
    const std::size_t sym = sample_categorical(e, rng);
    out.push_back({{static_cast<double>(sym)}, t});
    if (states != nullptr) states->push_back(x);
  }
  return out;
}

nlohmann::json LinearGaussianConfig::to_json() const {
  return {{"c", c}, {"q", q}, {"r", r}, {"m0", m0}, {"p0", p0},
          {"a_lower", box.lower(0)}, {"a_upper", box.upper(0)}};
}

LinearGaussianConfig LinearGaussianConfig::from_json(const nlohmann::json& j) {
  LinearGaussianConfig cfg;
  cfg.c = j.value("c", cfg.c);
  cfg.q = j.value("q", cfg.q);
  cfg.r = j.value("r", cfg.r);
  cfg.m0 = j.value("m0", cfg.m0);
  cfg.p0 = j.value("p0", cfg.p0);
  cfg.box = ParameterBox({j.value("a_lower", cfg.box.lower(0))},
                         {j.value("a_upper", cfg.box.upper(0))});
  return cfg;
}

KalmanResult kalman_filter(std::span<const double> a_path, const LinearGaussianConfig& cfg,
                           std::span<const Observation> observations) {
  if (a_path.size() != observations.size()) {
    throw InvalidInput("kalman_filter: need one transition coefficient per observation");
  }
  KalmanResult out;
  double m = cfg.m0;
  double p = cfg.p0;
  for (std::size_t t = 0; t < observations.size(); ++t) {
    const double a = a_path[t];
    const double mp = a * m;
    const double pp = a * a * p + cfg.q;
    const double s = cfg.c * cfg.c * pp + cfg.r;
    const double innov = observations[t].values.at(0) - cfg.c * mp;
    const double gain = pp * cfg.c / s;
    m = mp + gain * innov;
    p = (1.0 - gain * cfg.c) * pp;
    const double inc = -0.5 * (std::log(2.0 * std::numbers::pi * s) + innov * innov / s);
    out.predictive_mean.push_back(mp);
    out.predictive_var.push_back(pp);
    out.filtered_mean.push_back(m);
    out.filtered_var.push_back(p);
    out.log_increments.push_back(inc);
    out.log_evidence += inc;
  }
  return out;
}

KalmanResult kalman_filter(double a, const LinearGaussianConfig& cfg,
                           std::span<const Observation> observations) {
  const std::vector<double> path(observations.size(), a);
  return kalman_filter(path, cfg, observations);
}

std::vector<Observation> simulate_linear_gaussian(double a, const LinearGaussianConfig& cfg,
                                                  std::size_t length, Rng& rng,
                                                  std::vector<double>* states) {
  std::vector<Observation> out;
  double x = rng.normal(cfg.m0, std::sqrt(cfg.p0));
  if (states != nullptr) states->assign(1, x);
  for (std::size_t t = 1; t <= length; ++t) {
    x = a * x + rng.normal(0.0, std::sqrt(cfg.q));
    out.push_back({{cfg.c * x + rng.normal(0.0, std::sqrt(cfg.r))}, t});
    if (states != nullptr) states->push_back(x);
  }
  return out;
}

std::vector<double> linear_gaussian_posterior_means(const LinearGaussianConfig& cfg,
                                                    std::span<const Observation> observations,
                                                    std::size_t nodes) {
  if (nodes == 0) throw InvalidInput("quadrature: need at least one node");
  const double lo = cfg.box.lower(0);
  const double hi = cfg.box.upper(0);
  std::vector<double> a(nodes), logw(nodes, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) {
    a[i] = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(nodes);
  }
  std::vector<std::vector<double>> increments(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    increments[i] = kalman_filter(a[i], cfg, observations).log_increments;
  }
  std::vector<double> means;
  means.push_back(0.5 * (lo + hi));
  for (std::size_t t = 0; t < observations.size(); ++t) {
    for (std::size_t i = 0; i < nodes; ++i) logw[i] += increments[i][t];
    double log_sum = 0.0;
    const auto w = normalize_log_weights(logw, log_sum);
    double mean = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) mean += w[i] * a[i];
    means.push_back(mean);
  }
  return means;
}

}  // namespace npf
