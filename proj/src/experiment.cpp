#include "npf/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "npf/parallel.hpp"

namespace npf {

namespace {

const std::vector<std::string> kLorenzNames{"S", "R", "B", "k_o"};

std::unique_ptr<StateSpaceModel> make_model(const ExperimentConfig& cfg) {
  switch (cfg.model) {
    case ModelKind::lorenz63:
      return std::make_unique<lorenz63::Model>(cfg.lorenz);
    case ModelKind::grid_hmm:
      return std::make_unique<GridHmmModel>(cfg.hmm, cfg.hmm_box);
    case ModelKind::linear_gaussian:
      return std::make_unique<LinearGaussianModel>(cfg.linear_gaussian);
  }
  throw InvalidInput("unknown model");
}

ParameterVector true_parameter(const ExperimentConfig& cfg) {
  switch (cfg.model) {
    case ModelKind::lorenz63:
      return cfg.lorenz_truth.to_vector();
    case ModelKind::grid_hmm:
      return cfg.hmm.param_points.at(cfg.hmm_true_index);
    case ModelKind::linear_gaussian:
      return {cfg.linear_gaussian_a};
  }
  throw InvalidInput("unknown model");
}

double time_per_step(const ExperimentConfig& cfg) {
  return cfg.model == ModelKind::lorenz63 ? cfg.lorenz.observation_interval() : 1.0;
}

std::vector<std::string> param_names(const ExperimentConfig& cfg) {
  if (cfg.model == ModelKind::lorenz63) return kLorenzNames;
  if (cfg.model == ModelKind::linear_gaussian) return {"a"};
  return {};
}

std::filesystem::path prepare_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
  write_file(file, j.dump(2) + "\n");
}

std::vector<std::string> header_lines(const ExperimentConfig& cfg, const std::string& what) {
  return {"npf " + what + " model=" + to_string(cfg.model) + " seed=" + std::to_string(cfg.seed),
          "config=" + cfg.to_json().dump()};
}

std::string csv_header_block(const ExperimentConfig& cfg, const std::string& what) {
  std::string s;
  for (const auto& line : header_lines(cfg, what)) s += "# " + line + "\n";
  return s;
}

/// Fraction of the resampled ensemble sitting on each grid point.
std::vector<double> grid_fractions(const GridHmmModel& model, const PosteriorSnapshot& snap) {
  std::vector<double> frac(model.hmm().n_params(), 0.0);
  const double w = 1.0 / static_cast<double>(snap.ancestors.size());
  for (std::size_t a : snap.ancestors) frac[model.nearest_index(snap.posterior.points[a])] += w;
  return frac;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

class GridOracleSink final : public SnapshotSink {
 public:
  GridOracleSink(const GridHmmModel& model, const std::vector<std::vector<double>>& exact)
      : model_(model), exact_(exact) {}

  void on_snapshot(const PosteriorSnapshot& snap, const TraceRecord&) override {
    const auto frac = grid_fractions(model_, snap);
    std::vector<double> row = exact_[snap.step];
    row.insert(row.end(), frac.begin(), frac.end());
    row.push_back(max_abs_diff(frac, exact_[snap.step]));
    rows.push_back(std::move(row));
  }

  std::vector<std::vector<double>> rows;

 private:
  const GridHmmModel& model_;
  const std::vector<std::vector<double>>& exact_;
};

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;
};

MeanVar mean_var(std::span<const double> xs) {
  MeanVar mv;
  for (double x : xs) mv.mean += x;
  mv.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
    mv.var /= static_cast<double>(xs.size() - 1);
  }
  return mv;
}

std::vector<double> mean_curve(const std::vector<std::vector<double>>& series) {
  std::vector<double> out(series.front().size(), 0.0);
  for (const auto& s : series) {
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += s[t];
  }
  for (auto& v : out) v /= static_cast<double>(series.size());
  return out;
}

std::string curves_csv(const StudySummary& s, double dt) {
  std::ostringstream os;
  os << "step,time";
  for (const auto& name : s.curve_names) os << ',' << name;
  os << '\n';
  const std::size_t len = s.curves.empty() ? 0 : s.curves.front().size();
  for (std::size_t t = 0; t < len; ++t) {
    os << t << ',' << format_double(static_cast<double>(t) * dt);
    for (const auto& c : s.curves) os << ',' << format_double(c[t]);
    os << '\n';
  }
  return os.str();
}

std::string per_n_csv(const StudySummary& s) {
  std::ostringstream os;
  os << "n,mean_terminal_error,var_terminal_error\n";
  for (std::size_t k = 0; k < s.n_values.size(); ++k) {
    os << s.n_values[k] << ',' << format_double(s.mean_terminal_error[k]) << ','
       << (s.var_terminal_error.empty() ? "" : format_double(s.var_terminal_error[k])) << '\n';
  }
  return os.str();
}

std::vector<std::size_t> study_n_values(const ExperimentConfig& cfg) {
  return cfg.n_list.empty() ? std::vector<std::size_t>{cfg.n} : cfg.n_list;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::lorenz63:
      return "lorenz63";
    case ModelKind::grid_hmm:
      return "grid-hmm";
    case ModelKind::linear_gaussian:
      return "linear-gaussian";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "lorenz63") return ModelKind::lorenz63;
  if (name == "grid-hmm") return ModelKind::grid_hmm;
  if (name == "linear-gaussian") return ModelKind::linear_gaussian;
  throw InvalidInput("unknown model '" + name + "' (expected lorenz63, grid-hmm or linear-gaussian)");
}

std::size_t ExperimentConfig::observation_count() const {
  if (model == ModelKind::lorenz63) {
    return static_cast<std::size_t>(std::llround(time_units / lorenz.observation_interval()));
  }
  return observations;
}

void ExperimentConfig::validate() const {
  if (n < 1) throw InvalidInput("config: N must be >= 1");
  if (replicates < 1) throw InvalidInput("config: replicates must be >= 1");
  for (std::size_t v : n_list) {
    if (v < 1) throw InvalidInput("config: every entry of n_list must be >= 1");
  }
  if (!(time_units >= 0.0)) throw InvalidInput("config: time_units must be >= 0");
  if (jitter.epsilon && !(*jitter.epsilon > 0.0 && *jitter.epsilon <= 1.0)) {
    throw InvalidInput("config: jitter epsilon must lie in (0, 1]");
  }
  lorenz.validate();
  hmm.validate();
  if (hmm_true_index >= hmm.n_params()) throw InvalidInput("config: grid_hmm true_index out of range");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["model"] = to_string(model);
  j["n"] = n;
  j["m"] = m;
  j["n_list"] = n_list;
  j["seed"] = seed;
  j["replicates"] = replicates;
  j["time_units"] = time_units;
  j["observations"] = observations;
  nlohmann::json jit;
  jit["epsilon"] = jitter.epsilon ? nlohmann::json(*jitter.epsilon) : nlohmann::json(nullptr);
  jit["p"] = jitter.p_exponent;
  jit["covariance"] = jitter.covariance ? nlohmann::json(*jitter.covariance) : nlohmann::json(nullptr);
  jit["frozen"] = jitter.frozen;
  j["jitter"] = jit;
  j["lorenz63"] = {
      {"delta", lorenz.delta},
      {"decimation", lorenz.decimation},
      {"obs_noise_var", lorenz.obs_noise_var},
      {"state_prior_mean", lorenz.state_prior_mean},
      {"state_prior_var", lorenz.state_prior_var},
      {"box_lower", lorenz.box.lower()},
      {"box_upper", lorenz.box.upper()},
      {"true_params", lorenz_truth.to_vector().values()},
  };
  nlohmann::json g = hmm.to_json();
  g["true_index"] = hmm_true_index;
  g["exclude_true_point"] = exclude_true_point;
  if (hmm_box) {
    g["box_lower"] = hmm_box->lower();
    g["box_upper"] = hmm_box->upper();
  }
  j["grid_hmm"] = g;
  nlohmann::json lg = linear_gaussian.to_json();
  lg["true_a"] = linear_gaussian_a;
  j["linear_gaussian"] = lg;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("model")) cfg.model = parse_model_kind(j["model"].get<std::string>());
  cfg.n = j.value("n", cfg.n);
  cfg.m = j.value("m", cfg.m);
  cfg.n_list = j.value("n_list", cfg.n_list);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.replicates = j.value("replicates", cfg.replicates);
  cfg.time_units = j.value("time_units", cfg.time_units);
  cfg.observations = j.value("observations", cfg.observations);
  cfg.workers = j.value("workers", cfg.workers);
  cfg.out_dir = j.value("out", cfg.out_dir);
  if (j.contains("jitter")) {
    const auto& jit = j["jitter"];
    if (jit.contains("epsilon") && !jit["epsilon"].is_null()) cfg.jitter.epsilon = jit["epsilon"].get<double>();
    cfg.jitter.p_exponent = jit.value("p", cfg.jitter.p_exponent);
    if (jit.contains("covariance") && !jit["covariance"].is_null()) {
      cfg.jitter.covariance = jit["covariance"].get<std::vector<double>>();
    }
    cfg.jitter.frozen = jit.value("frozen", cfg.jitter.frozen);
  }
  if (j.contains("lorenz63")) {
    const auto& l = j["lorenz63"];
    cfg.lorenz.delta = l.value("delta", cfg.lorenz.delta);
    cfg.lorenz.decimation = l.value("decimation", cfg.lorenz.decimation);
    cfg.lorenz.obs_noise_var = l.value("obs_noise_var", cfg.lorenz.obs_noise_var);
    cfg.lorenz.state_prior_mean = l.value("state_prior_mean", cfg.lorenz.state_prior_mean);
    cfg.lorenz.state_prior_var = l.value("state_prior_var", cfg.lorenz.state_prior_var);
    if (l.contains("box_lower") || l.contains("box_upper")) {
      cfg.lorenz.box = ParameterBox(l.value("box_lower", cfg.lorenz.box.lower()),
                                    l.value("box_upper", cfg.lorenz.box.upper()));
    }
    if (l.contains("true_params")) {
      cfg.lorenz_truth = lorenz63::Params::from_vector(
          ParameterVector(l["true_params"].get<std::vector<double>>()));
    }
  }
  if (j.contains("grid_hmm")) {
    const auto& g = j["grid_hmm"];
    if (g.contains("preset")) {
      const auto preset = g["preset"].get<std::string>();
      if (preset == "sticky") {
        cfg.hmm = GridHmm::sticky_two_state();
      } else if (preset == "identifiable") {
        cfg.hmm = GridHmm::identifiable_two_state();
      } else {
        throw InvalidInput("config: unknown grid_hmm preset '" + preset + "'");
      }
    } else if (g.contains("param_points")) {
      cfg.hmm = GridHmm::from_json(g);
    }
    cfg.hmm_true_index = g.value("true_index", cfg.hmm_true_index);
    cfg.exclude_true_point = g.value("exclude_true_point", cfg.exclude_true_point);
    if (g.contains("box_lower") && g.contains("box_upper")) {
      cfg.hmm_box = ParameterBox(g["box_lower"].get<std::vector<double>>(),
                                 g["box_upper"].get<std::vector<double>>());
    }
  }
  if (j.contains("linear_gaussian")) {
    cfg.linear_gaussian = LinearGaussianConfig::from_json(j["linear_gaussian"]);
    cfg.linear_gaussian_a = j["linear_gaussian"].value("true_a", cfg.linear_gaussian_a);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidInput("cannot open config file " + file.string());
  return from_json(nlohmann::json::parse(in));
}

std::vector<double> default_jitter_covariance(const ExperimentConfig& cfg,
                                              const StateSpaceModel& model) {
  switch (cfg.model) {
    case ModelKind::lorenz63:
      return {0.5, 0.5, 0.2, 0.05};
    case ModelKind::grid_hmm: {
      // Squared smallest grid spacing per coordinate.
      const auto& box = model.param_box();
      std::vector<double> cov(box.dim());
      for (std::size_t k = 0; k < box.dim(); ++k) {
        std::set<double> coords;
        for (const auto& p : cfg.hmm.param_points) coords.insert(p[k]);
        double gap = box.upper(k) - box.lower(k);
        for (auto it = std::next(coords.begin()); it != coords.end(); ++it) {
          gap = std::min(gap, *it - *std::prev(it));
        }
        cov[k] = gap * gap;
      }
      return cov;
    }
    case ModelKind::linear_gaussian:
      return {0.01};
  }
  return {};
}

JitterConfig make_jitter(const ExperimentConfig& cfg, const StateSpaceModel& model,
                         std::size_t n) {
  if (cfg.jitter.frozen) return JitterConfig::frozen(model.param_box());
  JitterConfig jit = JitterConfig::for_population(
      n, cfg.jitter.covariance.value_or(default_jitter_covariance(cfg, model)), model.param_box(),
      cfg.jitter.p_exponent);
  if (cfg.jitter.epsilon) jit.epsilon = *cfg.jitter.epsilon;
  jit.validate();
  return jit;
}

nlohmann::json StudySummary::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["replicates"] = replicates;
  j["n_values"] = n_values;
  j["mean_terminal_error"] = mean_terminal_error;
  j["var_terminal_error"] =
      var_terminal_error.empty() ? nlohmann::json(nullptr) : nlohmann::json(var_terminal_error);
  if (rate) {
    j["rate_slope"] = rate->slope;
    j["rate_intercept"] = rate->intercept;
  } else {
    j["rate_slope"] = nullptr;
  }
  if (!extra.is_null()) j["details"] = extra;
  return j;
}

std::vector<double> grid_posterior_error_series(const GridHmmModel& model,
                                                std::span<const Observation> observations,
                                                const std::vector<std::vector<double>>& exact,
                                                const JitterConfig& jitter,
                                                const NestedFilterOptions& opts) {
  std::vector<double> errors;
  errors.reserve(observations.size() + 1);
  NestedFilterState state = nested_init(model, opts);
  errors.push_back(max_abs_diff(grid_fractions(model, prior_snapshot(state)), exact[0]));
  for (const auto& y : observations) {
    const PosteriorSnapshot snap = nested_step(state, model, jitter, y, opts);
    errors.push_back(max_abs_diff(grid_fractions(model, snap), exact[snap.step]));
  }
  return errors;
}

std::vector<double> d_omega_series(const StateSpaceModel& model,
                                   std::span<const Observation> observations,
                                   const WeightedSample& reference, const OmegaSet& omega,
                                   const JitterConfig& jitter, const NestedFilterOptions& opts) {
  auto distance = [&](const PosteriorSnapshot& snap) {
    WeightedSample ensemble = snap.resampled();
    for (auto& p : ensemble.points) p = model.canonical_parameter(p);
    return d_omega(ensemble, reference, omega);
  };
  std::vector<double> out;
  out.reserve(observations.size() + 1);
  NestedFilterState state = nested_init(model, opts);
  out.push_back(distance(prior_snapshot(state)));
  for (const auto& y : observations) out.push_back(distance(nested_step(state, model, jitter, y, opts)));
  return out;
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t n, std::size_t r) {
  Rng rng = Rng::stream(master, StreamTag::replicate, n, r);
  return rng();
}

Dataset make_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, StreamTag::data);
  Dataset ds;
  const std::size_t t = cfg.observation_count();
  switch (cfg.model) {
    case ModelKind::lorenz63: {
      ds.lorenz = lorenz63::generate_synthetic(cfg.lorenz_truth, cfg.lorenz, t, rng);
      ds.observations = ds.lorenz->observations;
      ds.truth = ds.lorenz->observed_states(cfg.lorenz.decimation);
      break;
    }
    case ModelKind::grid_hmm: {
      std::vector<std::size_t> states;
      ds.observations = simulate_grid_hmm(cfg.hmm, cfg.hmm_true_index, t, rng, &states);
      for (std::size_t s : states) ds.truth.push_back({static_cast<double>(s)});
      break;
    }
    case ModelKind::linear_gaussian: {
      std::vector<double> states;
      ds.observations = simulate_linear_gaussian(cfg.linear_gaussian_a, cfg.linear_gaussian, t, rng,
                                                 &states);
      for (double s : states) ds.truth.push_back({s});
      break;
    }
  }
  return ds;
}

namespace {

std::string observations_csv(const ExperimentConfig& cfg, const Dataset& ds) {
  std::ostringstream os;
  os << csv_header_block(cfg, "dataset") << "n,y,state\n";
  for (const auto& y : ds.observations) {
    os << y.time_index << ',' << format_double(y.values[0]) << ','
       << format_double(ds.truth[y.time_index][0]) << '\n';
  }
  return os.str();
}

void write_dataset_files(const ExperimentConfig& cfg, const Dataset& ds,
                         const std::filesystem::path& dir) {
  if (ds.lorenz) {
    lorenz63::DatasetHeader header{cfg.seed, cfg.lorenz.delta, cfg.lorenz.decimation,
                                   cfg.lorenz_truth, {"config=" + cfg.to_json().dump()}};
    lorenz63::write_dataset(*ds.lorenz, header, dir / "dataset_states.csv",
                            dir / "dataset_observations.csv");
  } else {
    write_file(dir / "dataset_observations.csv", observations_csv(cfg, ds));
  }
}

}  // namespace

SingleRunResult run_single(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  const auto model = make_model(cfg);
  const Dataset ds = make_dataset(cfg, cfg.seed);
  const JitterConfig jitter = make_jitter(cfg, *model, cfg.n);
  NestedFilterOptions opts{cfg.n, cfg.inner_particles(cfg.n), replicate_seed(cfg.seed, cfg.n, 0),
                           cfg.workers};

  const ParameterVector truth = true_parameter(cfg);
  const OmegaSet omega = OmegaSet::default_for_box(model->param_box());
  RunContext ctx;
  ctx.true_params = truth;
  ctx.truth = ds.truth;
  ctx.time_per_step = time_per_step(cfg);
  ctx.omega = &omega;
  ctx.omega_reference = WeightedSample::point_mass(truth);

  std::vector<std::vector<double>> exact;
  std::unique_ptr<GridOracleSink> grid_sink;
  std::vector<SnapshotSink*> sinks;
  if (cfg.model == ModelKind::grid_hmm) {
    exact = exact_param_posterior(cfg.hmm, ds.observations);
    grid_sink = std::make_unique<GridOracleSink>(static_cast<const GridHmmModel&>(*model), exact);
    sinks.push_back(grid_sink.get());
  }

  SingleRunResult result;
  result.summary["model"] = to_string(cfg.model);
  result.summary["config"] = cfg.to_json();
  result.summary["observations"] = ds.observations.size();
  try {
    result.trace = run_nested(*model, ds.observations, jitter, opts, ctx, sinks);
    result.summary["status"] = "ok";
    result.summary["trace"] = result.trace.summary();
  } catch (const StepFailure& e) {
    result.exit_code = 2;
    result.summary["status"] = "failed";
    result.summary["failed_step"] = e.step();
    result.summary["error"] = e.what();
  }
  result.trace.param_names = param_names(cfg);

  if (grid_sink && result.exit_code == 0) {
    for (std::size_t k = 0; k < cfg.hmm.n_params(); ++k) {
      result.trace.extra_columns.push_back("exact_p" + std::to_string(k + 1));
    }
    for (std::size_t k = 0; k < cfg.hmm.n_params(); ++k) {
      result.trace.extra_columns.push_back("filter_p" + std::to_string(k + 1));
    }
    result.trace.extra_columns.push_back("max_abs_error");
    for (std::size_t t = 0; t < result.trace.records.size(); ++t) {
      result.trace.records[t].extra = grid_sink->rows[t];
    }
    result.summary["final_max_abs_error"] = grid_sink->rows.back().back();
  } else if (cfg.model == ModelKind::linear_gaussian && result.exit_code == 0) {
    const auto exact_means = linear_gaussian_posterior_means(cfg.linear_gaussian, ds.observations);
    result.trace.extra_columns = {"exact_mean_a"};
    for (std::size_t t = 0; t < result.trace.records.size(); ++t) {
      result.trace.records[t].extra = {exact_means[t]};
    }
  }

  if (write_files) {
    const auto dir = prepare_out_dir(cfg);
    write_dataset_files(cfg, ds, dir);
    std::ostringstream trace_text;
    const auto head = header_lines(cfg, "run");
    result.trace.write_csv(trace_text, head);
    write_file(dir / "trace.csv", trace_text.str());
    write_json(dir / "summary.json", result.summary);
  }
  return result;
}

StudySummary run_rate_study(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  if (cfg.model == ModelKind::lorenz63) {
    throw InvalidInput("rate study needs an exact oracle: use grid-hmm or linear-gaussian");
  }
  const std::set<std::size_t> distinct(cfg.n_list.begin(), cfg.n_list.end());
  if (distinct.size() < 3) throw InvalidInput("rate study needs at least three distinct values of N");

  const auto model = make_model(cfg);
  const Dataset ds = make_dataset(cfg, cfg.seed);
  const std::size_t horizon = ds.observations.size();
  std::vector<std::vector<double>> exact_grid;
  std::vector<double> exact_means;
  if (cfg.model == ModelKind::grid_hmm) {
    exact_grid = exact_param_posterior(cfg.hmm, ds.observations);
  } else {
    exact_means = linear_gaussian_posterior_means(cfg.linear_gaussian, ds.observations);
  }

  StudySummary summary;
  summary.kind = "rate-study";
  summary.replicates = cfg.replicates;
  std::vector<std::pair<double, double>> points;
  for (std::size_t n : cfg.n_list) {
    const JitterConfig jitter = make_jitter(cfg, *model, n);
    std::vector<std::vector<double>> series(cfg.replicates);
    parallel_for(cfg.replicates, cfg.workers, [&](std::size_t r) {
      NestedFilterOptions opts{n, cfg.inner_particles(n), replicate_seed(cfg.seed, n, r), 1};
      if (cfg.model == ModelKind::grid_hmm) {
        series[r] = grid_posterior_error_series(static_cast<const GridHmmModel&>(*model),
                                                ds.observations, exact_grid, jitter, opts);
      } else {
        const RunTrace trace = run_nested(*model, ds.observations, jitter, opts);
        series[r].resize(trace.records.size());
        for (std::size_t t = 0; t < trace.records.size(); ++t) {
          series[r][t] = std::abs(trace.records[t].theta_hat[0] - exact_means[t]);
        }
      }
    });
    std::vector<double> terminal(cfg.replicates);
    for (std::size_t r = 0; r < cfg.replicates; ++r) terminal[r] = series[r][horizon];
    const MeanVar mv = mean_var(terminal);
    summary.n_values.push_back(n);
    summary.mean_terminal_error.push_back(mv.mean);
    if (cfg.replicates > 1) summary.var_terminal_error.push_back(mv.var);
    summary.curve_names.push_back("mean_error_n" + std::to_string(n));
    summary.curves.push_back(mean_curve(series));
    points.emplace_back(static_cast<double>(n), mv.mean);
  }
  summary.rate = fit_rate(points);

  if (write_files) {
    const auto dir = prepare_out_dir(cfg);
    write_dataset_files(cfg, ds, dir);
    write_file(dir / "rate_study.csv", csv_header_block(cfg, "rate-study") + per_n_csv(summary));
    write_file(dir / "rate_study_curves.csv",
               csv_header_block(cfg, "rate-study") + curves_csv(summary, 1.0));
    nlohmann::json j = summary.to_json();
    j["config"] = cfg.to_json();
    write_json(dir / "summary.json", j);
  }
  return summary;
}

StudySummary run_identification_study(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  if (cfg.model != ModelKind::grid_hmm) throw InvalidInput("identification study needs grid-hmm");

  const GridHmmModel data_model(cfg.hmm, cfg.hmm_box);
  GridHmm filter_hmm = cfg.hmm;
  if (cfg.exclude_true_point) {
    if (filter_hmm.n_params() < 2) throw InvalidInput("identification: cannot exclude the only grid point");
    const auto idx = static_cast<std::ptrdiff_t>(cfg.hmm_true_index);
    filter_hmm.param_points.erase(filter_hmm.param_points.begin() + idx);
    filter_hmm.param_prior.erase(filter_hmm.param_prior.begin() + idx);
    filter_hmm.transition.erase(filter_hmm.transition.begin() + idx);
    filter_hmm.emission.erase(filter_hmm.emission.begin() + idx);
    double total = 0.0;
    for (double p : filter_hmm.param_prior) total += p;
    for (double& p : filter_hmm.param_prior) p /= total;
  }
  const GridHmmModel model(filter_hmm, data_model.param_box());
  const Dataset ds = make_dataset(cfg, cfg.seed);
  const ParameterVector theta_star = cfg.hmm.param_points[cfg.hmm_true_index];
  const WeightedSample reference = WeightedSample::point_mass(theta_star);
  const OmegaSet omega = OmegaSet::default_for_box(data_model.param_box());

  StudySummary summary;
  summary.kind = "identification-study";
  summary.replicates = cfg.replicates;

  const auto exact = exact_param_posterior(filter_hmm, ds.observations);
  std::vector<double> exact_curve;
  for (const auto& probs : exact) {
    exact_curve.push_back(d_omega(WeightedSample{filter_hmm.param_points, probs}, reference, omega));
  }
  summary.curve_names.push_back("exact_d_omega");
  summary.curves.push_back(exact_curve);

  const std::size_t horizon = ds.observations.size();
  const std::size_t window = std::max<std::size_t>(1, (horizon + 1) / 10);
  std::vector<double> plateaus;
  for (std::size_t n : study_n_values(cfg)) {
    const JitterConfig jitter = make_jitter(cfg, model, n);
    std::vector<std::vector<double>> series(cfg.replicates);
    parallel_for(cfg.replicates, cfg.workers, [&](std::size_t r) {
      NestedFilterOptions opts{n, cfg.inner_particles(n), replicate_seed(cfg.seed, n, r), 1};
      series[r] = d_omega_series(model, ds.observations, reference, omega, jitter, opts);
    });
    std::vector<double> terminal(cfg.replicates);
    for (std::size_t r = 0; r < cfg.replicates; ++r) terminal[r] = series[r][horizon];
    const MeanVar mv = mean_var(terminal);
    const auto curve = mean_curve(series);
    double plateau = 0.0;
    for (std::size_t t = curve.size() - window; t < curve.size(); ++t) plateau += curve[t];
    plateaus.push_back(plateau / static_cast<double>(window));
    summary.n_values.push_back(n);
    summary.mean_terminal_error.push_back(mv.mean);
    if (cfg.replicates > 1) summary.var_terminal_error.push_back(mv.var);
    summary.curve_names.push_back("mean_d_omega_n" + std::to_string(n));
    summary.curves.push_back(curve);
  }
  summary.extra["plateau_window"] = window;
  summary.extra["plateau"] = plateaus;
  summary.extra["exact_terminal_d_omega"] = exact_curve.back();
  summary.extra["exclude_true_point"] = cfg.exclude_true_point;
  if (summary.n_values.size() >= 3) {
    std::vector<std::pair<double, double>> points;
    for (std::size_t k = 0; k < summary.n_values.size(); ++k) {
      if (summary.mean_terminal_error[k] > 0.0) {
        points.emplace_back(static_cast<double>(summary.n_values[k]), summary.mean_terminal_error[k]);
      }
    }
    if (points.size() >= 3) summary.rate = fit_rate(points);
  }

  if (write_files) {
    const auto dir = prepare_out_dir(cfg);
    write_dataset_files(cfg, ds, dir);
    write_file(dir / "identification.csv",
               csv_header_block(cfg, "identify") + curves_csv(summary, 1.0));
    nlohmann::json j = summary.to_json();
    j["config"] = cfg.to_json();
    write_json(dir / "summary.json", j);
  }
  return summary;
}

StudySummary run_mean_error_study(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  if (cfg.model != ModelKind::lorenz63) throw InvalidInput("mean-error study needs lorenz63");
  const auto model = make_model(cfg);
  const JitterConfig jitter = make_jitter(cfg, *model, cfg.n);
  const ParameterVector truth = cfg.lorenz_truth.to_vector();
  const std::size_t d = truth.size();

  // abs_err[r][k][t]
  std::vector<std::vector<std::vector<double>>> abs_err(cfg.replicates);
  parallel_for(cfg.replicates, cfg.workers, [&](std::size_t r) {
    const Dataset ds = make_dataset(cfg, replicate_seed(cfg.seed, 0, r));
    NestedFilterOptions opts{cfg.n, cfg.inner_particles(cfg.n), replicate_seed(cfg.seed, cfg.n, r), 1};
    const RunTrace trace = run_nested(*model, ds.observations, jitter, opts);
    abs_err[r].assign(d, std::vector<double>(trace.records.size()));
    for (std::size_t t = 0; t < trace.records.size(); ++t) {
      for (std::size_t k = 0; k < d; ++k) {
        abs_err[r][k][t] = std::abs(trace.records[t].theta_hat[k] - truth[k]);
      }
    }
  });

  StudySummary summary;
  summary.kind = "mean-error-study";
  summary.replicates = cfg.replicates;
  summary.n_values = {cfg.n};
  const std::size_t len = abs_err.front().front().size();
  std::vector<std::vector<double>> var_curves;
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> mean(len), var(len);
    for (std::size_t t = 0; t < len; ++t) {
      std::vector<double> xs(cfg.replicates);
      for (std::size_t r = 0; r < cfg.replicates; ++r) xs[r] = abs_err[r][k][t];
      const MeanVar mv = mean_var(xs);
      mean[t] = mv.mean;
      var[t] = mv.var;
    }
    summary.curve_names.push_back("mae_" + kLorenzNames[k]);
    summary.curves.push_back(std::move(mean));
    var_curves.push_back(std::move(var));
  }
  for (std::size_t k = 0; k < d; ++k) {
    summary.curve_names.push_back("var_" + kLorenzNames[k]);
    summary.curves.push_back(var_curves[k]);
  }
  for (std::size_t k = 0; k < d; ++k) {
    summary.mean_terminal_error.push_back(summary.curves[k].back());
    if (cfg.replicates > 1) summary.var_terminal_error.push_back(var_curves[k].back());
  }
  // Quartile averages of each MAE curve (steps 1..T).
  nlohmann::json quartiles = nlohmann::json::array();
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> q(4, 0.0);
    const std::size_t steps = len - 1;
    for (std::size_t qi = 0; qi < 4 && steps >= 4; ++qi) {
      const std::size_t lo = 1 + qi * steps / 4;
      const std::size_t hi = 1 + (qi + 1) * steps / 4;
      for (std::size_t t = lo; t < hi; ++t) q[qi] += summary.curves[k][t];
      q[qi] /= static_cast<double>(hi - lo);
    }
    quartiles.push_back({{"param", kLorenzNames[k]}, {"quartile_mae", q}});
  }
  summary.extra["quartiles"] = quartiles;

  if (write_files) {
    const auto dir = prepare_out_dir(cfg);
    write_file(dir / "mean_error.csv", csv_header_block(cfg, "mean-error") +
                                           curves_csv(summary, cfg.lorenz.observation_interval()));
    nlohmann::json j = summary.to_json();
    j["config"] = cfg.to_json();
    write_json(dir / "summary.json", j);
  }
  return summary;
}

void run_gen_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset ds = make_dataset(cfg, cfg.seed);
  write_dataset_files(cfg, ds, prepare_out_dir(cfg));
}

}  // namespace npf
