#pragma once

#include "symk/dataset.hpp"
#include "symk/greedy.hpp"
#include "symk/hamiltonians.hpp"
#include "symk/integrators.hpp"
#include "symk/plots.hpp"
#include "symk/predictor.hpp"
#include "symk/symplectic_mor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace symk {

enum class Scale { Desk, Paper };

Scale scale_from_string(const std::string& name);

/// Test initial conditions: q0 uniform in [q_lower, q_upper], p0 = 0. For the
/// wave system the draws are reduced states from the reduced box instead.
struct TestSpec {
  Eigen::Index count = 10;
  Vector q_lower;
  Vector q_upper;
  double horizon = 6.0;
  std::uint64_t seed = 0;
};

/// Wave-only reduction settings.
struct MorSpec {
  Eigen::Index modes = 2;
  Eigen::Index reduced_n = 2;
};

struct SelectionSpec {
  std::vector<KernelFamily> families{kAllKernelFamilies.begin(), kAllKernelFamilies.end()};
  std::vector<double> epsilons{0.1, 0.2, 0.3, 0.5, 1.0, 2.0};
  /// Centers per candidate; 0 selects at the greedy center budget.
  Eigen::Index m_star = 0;
  double validation_fraction = 0.2;
  /// Fixed kernel instead of a grid search when set.
  std::optional<KernelSpec> fixed;
};

struct ExperimentConfig {
  std::string system = "pendulum";
  PendulumParams pendulum;
  ChainParams chain;
  WaveParams wave;
  SamplerSpec sampler;
  std::vector<double> delta_ts{0.1};
  double micro_dt = 1e-3;
  GreedyConfig greedy;
  SelectionSpec selection;
  TestSpec test;
  MorSpec mor;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";

  /// Checks the divisibility and positivity invariants; ConfigError on failure.
  void validate() const;
};

/// Built-in configuration for "pendulum", "chain" or "wave" at the given scale.
ExperimentConfig default_config(const std::string& system, Scale scale);

/// Applies a JSON document on top of `base`. Unknown keys, wrong types and
/// invalid values raise ConfigError.
ExperimentConfig apply_config_json(ExperimentConfig base, const std::string& json_text);

/// Reads a config file; the "system" key picks the defaults it overrides.
ExperimentConfig load_config(const std::filesystem::path& path, Scale scale,
                             const std::optional<std::string>& system_override = std::nullopt);

/// Re-derives every sub-seed from a new global seed.
void reseed(ExperimentConfig& cfg, std::uint64_t seed);

/// The system the learned model acts on (the reduced system for the wave).
struct ExperimentSystem {
  HamiltonianSystem full;
  HamiltonianSystem model_space;
  std::optional<ReducedBasis> basis;
};

ExperimentSystem make_system(const ExperimentConfig& cfg);

struct SelectionRow {
  KernelFamily family = KernelFamily::Gaussian;
  double epsilon = 1.0;
  double validation_error = 0.0;
  bool failed = false;
  std::string message;
};

struct Selection {
  KernelSpec kernel{KernelFamily::Gaussian, 1.0};
  Surrogate surrogate{KernelSpec(KernelFamily::Gaussian, 1.0), 1};
  /// Greedy trace of the selected candidate, validation set attached.
  GreedyTrace trace;
  std::vector<SelectionRow> table;
  std::size_t selected_row = 0;
};

/// Trains f-greedy to m* centers for each (family, eps) and keeps the
/// smallest validation error; ties go to the earlier family, then smaller eps.
/// A candidate fails when training throws or when its predictor cannot solve
/// the step from a validation state.
Selection select_model(const SelectionSpec& spec, const GreedyConfig& greedy, const HBDataset& train,
                       const HBDataset& validation);

/// Output of the training half of the pipeline for one dT.
struct TrainedModel {
  HBDataset train;
  HBDataset validation;
  Selection selection;
  Surrogate surrogate{KernelSpec(KernelFamily::Gaussian, 1.0), 1};
  GreedyTrace trace;
};

/// Training states of the configured sampler, in the model space.
std::vector<Vector> training_states(const ExperimentConfig& cfg, const ExperimentSystem& sys);

/// Dataset, split, kernel selection and greedy training to the center budget.
TrainedModel train_model(const ExperimentConfig& cfg, const ExperimentSystem& sys,
                         const std::vector<Vector>& states, double delta_t);

/// Error series against a reference trajectory at the macro times.
struct TrajectoryMetrics {
  Series kernel_rel;
  Series baseline_rel;
  Series kernel_energy;
  Series baseline_energy;
  Series reference_energy;
};

/// `pred` and `baseline` share the macro grid; `reference` is on a micro grid
/// that contains every macro time. GridMismatch otherwise.
TrajectoryMetrics compute_metrics(const Trajectory& pred, const Trajectory& baseline,
                                  const Trajectory& reference, const HamiltonianSystem& sys);

/// Per-step summary of one experiment, for callers that assert on results.
struct StepResult {
  double delta_t = 0.0;
  KernelSpec kernel{KernelFamily::Gaussian, 1.0};
  Eigen::Index centers = 0;
  std::vector<double> train_curve;
  std::vector<double> validation_curve;
  /// Mean over test ICs of e_rel at each macro time (index 0 is t = 0).
  std::vector<double> kernel_mean_rel;
  std::vector<double> baseline_mean_rel;
  double contraction_margin = 0.0;
};

struct ExperimentResult {
  std::vector<StepResult> steps;
  std::vector<std::filesystem::path> files;
};

/// Runs sample -> dataset -> split -> selection -> greedy -> rollouts and
/// writes every artifact below cfg.out_dir. A MANIFEST records the files and
/// whether the run completed.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Test initial states in the model space.
std::vector<Vector> test_initial_states(const ExperimentConfig& cfg, const ExperimentSystem& sys);

/// Model file (JSON): kernel, dimension, dT and every functional with its
/// coefficient at round-trip precision.
void write_model_json(const PredictorModel& model, std::ostream& out);
PredictorModel read_model_json(const std::string& text);

}  // namespace symk
