#ifndef NPF_EXPERIMENT_HPP
#define NPF_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "npf/benchmark_models.hpp"
#include "npf/lorenz63.hpp"
#include "npf/metrics.hpp"
#include "npf/nested_filter.hpp"
#include "npf/oracle.hpp"

namespace npf {

enum class ModelKind { lorenz63, grid_hmm, linear_gaussian };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct JitterSettings {
  /// Defaults to n^(-p/2).
  std::optional<double> epsilon;
  double p_exponent = 1.0;
  /// Defaults per model, see default_jitter_covariance().
  std::optional<std::vector<double>> covariance;
  /// Never rejuvenate (used for exact grid comparisons).
  bool frozen = false;
};

/// Everything needed to reproduce a run or study. Loaded from a JSON file;
/// missing keys keep the defaults below, which reproduce the Lorenz 63
/// experiment at desk scale.
struct ExperimentConfig {
  ModelKind model = ModelKind::lorenz63;
  std::size_t n = 100;
  /// Inner particles; 0 means "same as N".
  std::size_t m = 100;
  std::vector<std::size_t> n_list;
  JitterSettings jitter;
  /// Lorenz 63 horizon in continuous time units.
  double time_units = 50.0;
  /// Number of observations for the grid HMM and linear-Gaussian models.
  std::size_t observations = 50;
  std::uint64_t seed = 1;
  std::size_t replicates = 10;
  std::size_t workers = 1;
  std::string out_dir = "out";

  lorenz63::Config lorenz;
  lorenz63::Params lorenz_truth;

  GridHmm hmm = GridHmm::sticky_two_state();
  std::size_t hmm_true_index = 2;
  std::optional<ParameterBox> hmm_box;
  /// Identification study: drop the data-generating point from the filter grid.
  bool exclude_true_point = false;

  LinearGaussianConfig linear_gaussian;
  double linear_gaussian_a = 0.8;

  std::size_t observation_count() const;
  std::size_t inner_particles(std::size_t n_outer) const { return m == 0 ? n_outer : m; }
  void validate() const;

  /// Full configuration except run-time knobs (workers, out_dir) that do not
  /// affect results.
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& file);
};

std::vector<double> default_jitter_covariance(const ExperimentConfig& cfg,
                                              const StateSpaceModel& model);
JitterConfig make_jitter(const ExperimentConfig& cfg, const StateSpaceModel& model,
                         std::size_t n);

/// Per-N aggregates of a replicated study.
struct StudySummary {
  std::string kind;
  std::size_t replicates = 0;
  std::vector<std::size_t> n_values;
  std::vector<double> mean_terminal_error;
  /// Empty when replicates == 1.
  std::vector<double> var_terminal_error;
  std::optional<RateFit> rate;
  std::vector<std::string> curve_names;
  /// curves[c][t], one per curve name.
  std::vector<std::vector<double>> curves;
  nlohmann::json extra;

  nlohmann::json to_json() const;
};

struct SingleRunResult {
  RunTrace trace;
  nlohmann::json summary;
  int exit_code = 0;
};

/// Per step t = 0..T, max_k |mu^N_t(theta_k) - mu_t(theta_k)| where mu^N_t is
/// the resampled ensemble binned to grid points.
std::vector<double> grid_posterior_error_series(const GridHmmModel& model,
                                                std::span<const Observation> observations,
                                                const std::vector<std::vector<double>>& exact,
                                                const JitterConfig& jitter,
                                                const NestedFilterOptions& opts);

/// Per step t = 0..T, d_omega(mu^N_t, reference).
std::vector<double> d_omega_series(const StateSpaceModel& model,
                                   std::span<const Observation> observations,
                                   const WeightedSample& reference, const OmegaSet& omega,
                                   const JitterConfig& jitter, const NestedFilterOptions& opts);

/// Seed of replicate r in the group keyed by n.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t n, std::size_t r);

/// Observations (and the true states where available) of the configured model.
struct Dataset {
  std::vector<Observation> observations;
  std::vector<StateVector> truth;
  std::optional<lorenz63::SyntheticData> lorenz;
};
Dataset make_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

SingleRunResult run_single(const ExperimentConfig& cfg, bool write_files = true);
StudySummary run_rate_study(const ExperimentConfig& cfg, bool write_files = true);
StudySummary run_identification_study(const ExperimentConfig& cfg, bool write_files = true);
StudySummary run_mean_error_study(const ExperimentConfig& cfg, bool write_files = true);
/// Writes the dataset of the configured model to out_dir.
void run_gen_data(const ExperimentConfig& cfg);

}  // namespace npf

#endif
