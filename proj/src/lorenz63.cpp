#include "npf/lorenz63.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "npf/metrics.hpp"

namespace npf::lorenz63 {

Params Params::from_vector(const ParameterVector& theta) {
  if (theta.size() != 4) throw InvalidInput("lorenz63: parameter vector must have 4 entries");
  return {theta[0], theta[1], theta[2], theta[3]};
}

ParameterBox Config::default_box() { return {{5.0, 18.0, 1.0, 0.5}, {20.0, 50.0, 8.0, 3.0}}; }

void Config::validate() const {
  if (!(delta > 0.0)) throw InvalidInput("lorenz63: delta must be positive");
  if (decimation < 1) throw InvalidInput("lorenz63: decimation must be >= 1");
  if (!(obs_noise_var > 0.0) || !(state_prior_var > 0.0)) {
    throw InvalidInput("lorenz63: variances must be positive");
  }
  if (box.dim() != 4) throw InvalidInput("lorenz63: parameter box must be 4-dimensional");
}

State3 euler_step(const Params& p, const State3& x, double delta, const State3& noise) {
  const double sd = std::sqrt(delta);
  return {
      x[0] - delta * p.s * (x[0] - x[1]) + sd * noise[0],
      x[1] + delta * (p.r * x[0] - x[1] - x[0] * x[2]) + sd * noise[1],
      x[2] + delta * (x[0] * x[1] - p.b * x[2]) + sd * noise[2],
  };
}

void composite_transition(const Params& p, std::span<double> x, std::size_t decimation,
                          double delta, Rng& rng, double noise_scale) {
  State3 s{x[0], x[1], x[2]};
  for (std::size_t k = 0; k < decimation; ++k) {
    State3 noise{0.0, 0.0, 0.0};
    if (noise_scale != 0.0) {
      noise = {noise_scale * rng.normal(), noise_scale * rng.normal(),
               noise_scale * rng.normal()};
    }
    s = euler_step(p, s, delta, noise);
  }
  x[0] = s[0];
  x[1] = s[1];
  x[2] = s[2];
}

double observe_loglik(double k_o, std::span<const double> x, const Observation& y,
                      double obs_var) {
  if (y.values.size() != 2) throw InvalidInput("lorenz63: observation must have 2 entries");
  const double r1 = y.values[0] - k_o * x[0];
  const double r3 = y.values[1] - k_o * x[2];
  return -(r1 * r1 + r3 * r3) / (2.0 * obs_var) - std::log(2.0 * std::numbers::pi * obs_var);
}

Model::Model(Config cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

ParameterVector Model::sample_param_prior(Rng& rng) const {
  ParameterVector theta(std::vector<double>(4));
  for (std::size_t k = 0; k < 4; ++k) {
    theta[k] = cfg_.box.lower(k) + (cfg_.box.upper(k) - cfg_.box.lower(k)) * rng.uniform();
  }
  return theta;
}

void Model::sample_state_prior(std::span<double> x, Rng& rng) const {
  const double sd = std::sqrt(cfg_.state_prior_var);
  for (std::size_t d = 0; d < 3; ++d) x[d] = rng.normal(cfg_.state_prior_mean[d], sd);
}

void Model::sample_transition(const ParameterVector& theta, std::span<double> x, std::size_t,
                              Rng& rng) const {
  composite_transition(Params::from_vector(theta), x, cfg_.decimation, cfg_.delta, rng);
}

double Model::log_likelihood(const ParameterVector& theta, std::span<const double> x,
                             const Observation& y) const {
  return observe_loglik(theta[3], x, y, cfg_.obs_noise_var);
}

std::vector<StateVector> SyntheticData::observed_states(std::size_t decimation) const {
  std::vector<StateVector> out;
  for (std::size_t k = 0; k < path.size(); k += decimation) out.push_back(path[k]);
  return out;
}

SyntheticData generate_synthetic(const Params& truth, const Config& cfg,
                                 std::size_t n_observations, Rng& rng) {
  cfg.validate();
  SyntheticData data;
  data.path.reserve(n_observations * cfg.decimation + 1);
  data.observations.reserve(n_observations);
  const Model model(cfg);
  StateVector x = model.sample_state_prior(rng);
  data.path.push_back(x);
  const double obs_sd = std::sqrt(cfg.obs_noise_var);
  for (std::size_t n = 1; n <= n_observations; ++n) {
    for (std::size_t k = 0; k < cfg.decimation; ++k) {
      composite_transition(truth, x.span(), 1, cfg.delta, rng);
      data.path.push_back(x);
    }
    Observation y;
    y.time_index = n;
    y.values = {truth.k_o * x[0] + rng.normal(0.0, obs_sd),
                truth.k_o * x[2] + rng.normal(0.0, obs_sd)};
    data.observations.push_back(std::move(y));
  }
  return data;
}

namespace {

std::string header_line(const DatasetHeader& h) {
  std::ostringstream os;
  os << "# lorenz63 dataset seed=" << h.seed << " delta=" << format_double(h.delta)
     << " decimation=" << h.decimation << " true_params=" << format_double(h.true_params.s)
     << ',' << format_double(h.true_params.r) << ',' << format_double(h.true_params.b) << ','
     << format_double(h.true_params.k_o);
  for (const auto& line : h.extra_lines) os << "\n# " << line;
  return os.str();
}

DatasetHeader parse_header(const std::string& line) {
  DatasetHeader h;
  std::istringstream is(line);
  std::string token;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "seed") {
      h.seed = std::stoull(value);
    } else if (key == "delta") {
      h.delta = std::stod(value);
    } else if (key == "decimation") {
      h.decimation = std::stoul(value);
    } else if (key == "true_params") {
      std::vector<double> v;
      std::istringstream vs(value);
      std::string part;
      while (std::getline(vs, part, ',')) v.push_back(std::stod(part));
      h.true_params = Params::from_vector(ParameterVector(std::move(v)));
    }
  }
  return h;
}

}  // namespace

void write_dataset(const SyntheticData& data, const DatasetHeader& header,
                   const std::filesystem::path& states_file,
                   const std::filesystem::path& observations_file) {
  std::ofstream states(states_file);
  std::ofstream obs(observations_file);
  if (!states || !obs) throw std::runtime_error("lorenz63: cannot open dataset files");
  const std::string head = header_line(header);
  states << head << "\nstep,x1,x2,x3\n";
  for (std::size_t k = 0; k < data.path.size(); ++k) {
    const auto& x = data.path[k];
    states << k << ',' << format_double(x[0]) << ',' << format_double(x[1]) << ','
           << format_double(x[2]) << '\n';
  }
  obs << head << "\nn,y1,y3\n";
  for (const auto& y : data.observations) {
    obs << y.time_index << ',' << format_double(y.values[0]) << ','
        << format_double(y.values[1]) << '\n';
  }
}

std::vector<Observation> read_observations(const std::filesystem::path& observations_file,
                                           DatasetHeader* header) {
  std::ifstream in(observations_file);
  if (!in) throw std::runtime_error("lorenz63: cannot open " + observations_file.string());
  std::vector<Observation> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (header != nullptr && line.rfind("# lorenz63 dataset", 0) == 0) *header = parse_header(line);
      continue;
    }
    if (line.rfind("n,", 0) == 0) continue;
    std::istringstream row(line);
    std::string cell;
    Observation y;
    std::getline(row, cell, ',');
    y.time_index = std::stoul(cell);
    while (std::getline(row, cell, ',')) y.values.push_back(std::stod(cell));
    if (y.values.size() != 2) throw InvalidInput("lorenz63: malformed observation row");
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace npf::lorenz63
