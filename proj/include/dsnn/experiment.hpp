#pragma once

// Experiment orchestration: pretraining, open-loop streaming evaluation, the
// closed-loop trial loop with perturbations, and ratio sweeps.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "dsnn/codec.hpp"
#include "dsnn/config.hpp"
#include "dsnn/dataset.hpp"
#include "dsnn/ledger.hpp"
#include "dsnn/learning.hpp"
#include "dsnn/ops_env.hpp"
#include "dsnn/snn.hpp"

namespace dsnn {

// ---------------------------------------------------------------------------
// Open loop

struct Checkpoint {
  Network net;
  std::array<AxisQuantizer, 2> quantizers;
  double validation_r2 = 0.0; // streaming R^2 on the held-out tail of session 1
  std::size_t train_bins = 0; // bins of session 1 used for training
  PretrainResult training;
};

/// First `train_fraction` of session 1 as a labelled stream for `quantizers`.
TrainingStream training_stream(const Session &s, std::size_t n_bins,
                               const std::array<AxisQuantizer, 2> &q);

/// Fits quantizers and trains a fresh network on the head of session 1.
Checkpoint pretrain_open_loop(const SpikeDataset &ds, const ExperimentConfig &cfg,
                              std::uint64_t seed);

/// Sidecar metadata (quantizer edges, validation R^2) next to the weight file.
void save_checkpoint(const std::filesystem::path &weights, const Checkpoint &ck);
Checkpoint load_checkpoint(const std::filesystem::path &weights);

struct SessionResult {
  std::size_t session = 0;
  std::size_t bins = 0;
  std::optional<double> r2; // empty when undefined (single bin or constant target)
};

struct OpenLoopResult {
  std::vector<SessionResult> sessions;
  ResourceLedger ledger;
};

/// Streams every session bin by bin (session 1 from its held-out tail),
/// resetting membranes at session boundaries, optionally learning online.
OpenLoopResult run_open_loop(Network net, const std::array<AxisQuantizer, 2> &q,
                             const SpikeDataset &ds, std::size_t first_session_start,
                             LearnerKind learner, const LearnerConfig &lcfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Closed loop

/// Uniform per-axis quantizer over [-v_max, v_max].
AxisQuantizer closed_loop_quantizer(const ExperimentConfig &cfg);

/// Labelled stream from center-out reaches driven by the ideal decoder.
TrainingStream simulate_reaches(OpsBrain &brain, const ExperimentConfig &cfg, std::size_t trials,
                                std::mt19937_64 &target_rng);

/// Per-seed state after stage-1 pretraining, shared by every learner.
struct SeedContext {
  std::uint64_t seed = 0;
  OpsBrain brain;
  Network net;
  PretrainResult stage1;
};

SeedContext prepare_seed(const ExperimentConfig &cfg, std::uint64_t seed,
                         const Network *pretrained = nullptr);

/// Online learner bound to one network.
class OnlineLearner {
public:
  OnlineLearner(LearnerKind kind, const LearnerConfig &cfg, std::size_t n_classes,
                std::uint64_t seed);

  LearnerKind kind() const { return kind_; }
  /// Scales the step size (Banditron rate or AGREL alpha).
  void set_rate(double rate);
  double rate() const { return rate_; }
  /// Disabled learners act greedily and never update.
  void set_enabled(bool on) { enabled_ = on; }

  /// Classes to act on, given the greedy per-axis predictions.
  ClassLabelPair act(const ClassLabelPair &greedy);
  /// Learns from per-axis rewards for the last act().
  void learn(Network &net, std::span<const std::uint8_t> input, const ForwardResult &fwd,
             const ClassLabelPair &greedy, const ClassLabelPair &played,
             const std::array<int, 2> &reward, ResourceLedger *ledger);

private:
  LearnerKind kind_;
  std::size_t n_classes_;
  double rate_ = 0.0;
  bool enabled_ = true;
  std::optional<BanditronLearner> bandit_;
  std::optional<AgrelLearner> agrel_;
  std::array<Exploration, 2> explored_{};
};

struct TrialContext {
  OpsBrain &brain;
  Network &net;
  OnlineLearner &learner;
  CenterOutEnv &env;
  ResourceLedger *ledger = nullptr;
  bool keep_trajectory = false;
};

/// One center-out trial until success or timeout.
TrialRecord run_trial(TrialContext &ctx, std::mt19937_64 &target_rng);

/// Stage 2: online trials with the learning rate decayed geometrically from
/// lr_start to lr_end. Returns the per-trial records.
std::vector<TrialRecord> closed_loop_stage2(OpsBrain &brain, Network &net, OnlineLearner &learner,
                                            CenterOutEnv &env, const Stage2Config &schedule,
                                            std::mt19937_64 &target_rng);

struct ClosedLoopRun {
  std::uint64_t seed = 0;
  LearnerKind learner = LearnerKind::none;
  PerturbationSpec perturbation;
  std::vector<TrialRecord> records;
  ResourceLedger ledger;
  std::vector<std::size_t> perturbed_neurons;
};

/// Stage 2 followed by `cfg.trials` experiment trials with the perturbation
/// applied just before trial `onset_trial`.
ClosedLoopRun run_closed_loop_seed(const SeedContext &ctx, const ExperimentConfig &cfg,
                                   LearnerKind learner, const PerturbationSpec &perturbation);

/// All seeds in cfg.seeds (OpenMP over seeds), merged by seed order.
std::vector<ClosedLoopRun> run_closed_loop(const ExperimentConfig &cfg);

struct RunSummary {
  double pre_mean = 0.0;        // trials [0, onset)
  double post_mean = 0.0;       // trials [onset, trials)
  double post_adapt_mean = 0.0; // last adapt_window trials
};

RunSummary summarize(std::span<const ClosedLoopRun> runs, const ExperimentConfig &cfg);

struct SweepCell {
  PerturbationKind kind;
  double ratio;
  LearnerKind learner;
  RunSummary summary;
};

/// kinds x ratios x learners, row-major in that order.
std::vector<SweepCell> run_sweep(const ExperimentConfig &cfg);

// ---------------------------------------------------------------------------
// Output

void write_trial_jsonl(std::ostream &os, const ClosedLoopRun &run);
void write_trajectory_csv(std::ostream &os, const TrialRecord &rec);
void write_sweep_csv(std::ostream &os, std::span<const SweepCell> cells);

} // namespace dsnn
