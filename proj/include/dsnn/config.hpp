#pragma once

// Experiment configuration, read from and written to versioned JSON.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsnn/learning.hpp"
#include "dsnn/ops_env.hpp"
#include "dsnn/snn.hpp"

namespace dsnn {

enum class Mode { pretrain, open_loop, closed_loop, sweep, synth, report };
enum class LearnerKind { none, banditron, agrel };

std::string to_string(Mode m);
std::string to_string(LearnerKind k);
Mode mode_from_string(const std::string &s);
LearnerKind learner_from_string(const std::string &s);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::none;
  double epsilon = 0.1;
  // Online step sizes used during closed-loop experiment trials.
  double banditron_rate = 0.01;
  double agrel_alpha = 0.01;
  // Step sizes for open-loop streaming.
  double open_loop_epsilon = 0.5;
  double open_loop_banditron_rate = 0.1;
  double open_loop_agrel_alpha = 0.002;
};

struct Stage2Config {
  std::size_t trials = 100;
  double lr_start = 5e-8;
  double lr_end = 5e-10;
};

struct SynthConfig {
  std::size_t n_channels = 96;
  std::size_t n_sessions = 5;
  std::size_t bins_per_session = 30000;
  double bin_width = 0.004;
  double drift_strength = 0.8;
  double velocity_tau = 0.5;   // seconds, OU time constant
  double velocity_scale = 1.0; // stationary std of each velocity axis
  double drive_clip = 2.5;     // velocity (in std units) that maps to unit drive
};

struct SweepConfig {
  std::vector<double> ratios{0.0, 0.3, 0.6, 0.9};
  std::vector<PerturbationKind> kinds{PerturbationKind::loss_of_neurons,
                                      PerturbationKind::electrode_shift,
                                      PerturbationKind::rate_drift};
  std::vector<LearnerKind> learners{LearnerKind::none, LearnerKind::banditron,
                                    LearnerKind::agrel};
};

struct PathsConfig {
  std::string dataset;
  std::string checkpoint;
  std::string output = "out";
};

struct ExperimentConfig {
  int version = 1;
  Mode mode = Mode::closed_loop;
  NetworkConfig network = NetworkConfig::closed_loop_default();
  std::size_t n_bins = 4; // classes per axis
  PretrainConfig pretrain;
  std::size_t stage1_trials = 300;
  double train_fraction = 0.8;
  LearnerConfig learner;
  Stage2Config stage2;
  OpsParams ops;
  EnvParams env;
  PerturbationSpec perturbation;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t trials = 100;
  std::size_t adapt_window = 25; // trailing trials that form the post-adaptation mean
  SynthConfig synth;
  SweepConfig sweep;
  PathsConfig paths;
  bool log_trajectories = false;

  /// Defaults for closed-loop experiments (46-neuron brain, [46,65,40,8]).
  static ExperimentConfig closed_loop_defaults();
  /// Defaults for open-loop streaming ([96,30,30,8], 4 ms bins).
  static ExperimentConfig open_loop_defaults();

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig &cfg);
/// Missing keys keep the defaults of `base`.
ExperimentConfig from_json(const nlohmann::json &j, ExperimentConfig base);
ExperimentConfig load_config(const std::filesystem::path &path);
void save_config(const std::filesystem::path &path, const ExperimentConfig &cfg);

} // namespace dsnn
