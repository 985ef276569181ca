#pragma once

// Simulated closed-loop world: a cosine-tuned population that turns intended
// motion into spike bins, the center-out cursor task, and perturbations of
// the simulated population.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dsnn/codec.hpp"
#include "dsnn/learning.hpp"
#include "dsnn/matrix.hpp"

namespace dsnn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double operator[](std::size_t axis) const { return axis == 0 ? x : y; }
  bool operator==(const Vec2 &) const = default;
};

struct OpsParams {
  std::size_t n_neurons = 46;
  double lambda_min_lo = 0.0; // spikes/s
  double lambda_min_hi = 5.0;
  double lambda_max_lo = 40.0;
  double lambda_max_hi = 100.0;
  double noise_sigma = 0.3;   // added to the normalised drive
  double bin_seconds = 0.01;

  void validate() const;
};

class OpsBrain {
public:
  OpsBrain(const OpsParams &params, std::uint64_t seed);

  /// One bin of binary activity for intended motion `intent` (|intent| <= 1).
  SpikeVector generate(Vec2 intent);

  /// Noise-free clamped firing rate of neuron k (spikes/s).
  double expected_rate(std::size_t k, Vec2 intent) const;
  /// Rate for an explicit drive value c_k . x + noise, clamped to [0, lambda_max].
  double rate_for_drive(std::size_t k, double drive) const;

  std::size_t size() const { return dirs_.size(); }
  const OpsParams &params() const { return params_; }
  Vec2 preferred_direction(std::size_t k) const { return dirs_.at(k); }
  double lambda_min(std::size_t k) const { return lambda_min_.at(k); }
  double lambda_max(std::size_t k) const { return lambda_max_.at(k); }
  bool removed(std::size_t k) const { return removed_.at(k) != 0; }
  std::size_t removed_count() const;

  void set_noise_sigma(double sigma) { params_.noise_sigma = sigma; }
  void set_preferred_direction(std::size_t k, Vec2 d) { dirs_.at(k) = d; }
  void set_lambda_max(std::size_t k, double v) { lambda_max_.at(k) = v; }
  void set_lambda_min(std::size_t k, double v) { lambda_min_.at(k) = v; }
  void set_removed(std::size_t k, bool r) { removed_.at(k) = r ? 1 : 0; }

  /// Tuning state only (directions, rates, removals); ignores the RNG.
  bool same_tuning(const OpsBrain &o) const;

private:
  OpsParams params_;
  std::vector<Vec2> dirs_;
  std::vector<double> lambda_min_;
  std::vector<double> lambda_max_;
  std::vector<std::uint8_t> removed_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Uniformly random unit vector.
Vec2 random_unit_vector(std::mt19937_64 &rng);

// ---------------------------------------------------------------------------

enum class PerturbationKind { none, loss_of_neurons, electrode_shift, rate_drift };

std::string to_string(PerturbationKind k);
PerturbationKind perturbation_kind_from_string(const std::string &s);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::none;
  double ratio = 0.0;
  std::size_t onset_trial = 50;
  std::uint64_t seed = 0;
  double drift_max_lo = 0.0; // new lambda_max range for rate drift, spikes/s
  double drift_max_hi = 30.0;
};

/// Number of neurons a spec touches: round(ratio * n).
std::size_t perturbed_count(const PerturbationSpec &spec, std::size_t n_neurons);

/// Applies the perturbation and returns the (sorted) affected neurons. The
/// selection and resampling draw from a fresh generator seeded by spec.seed,
/// so re-applying the same spec yields the same brain.
std::vector<std::size_t> apply_perturbation(OpsBrain &brain, const PerturbationSpec &spec);

// ---------------------------------------------------------------------------

/// What the simulated participant pushes toward once inside the acceptance window.
enum class HoldMode {
  zero, // no drive inside the window
  home  // keep pointing at the target center
};

struct EnvParams {
  double target_distance = 40.0;
  double accept_radius = 4.0;
  double hold_required = 0.5;
  double max_duration = 3.0;
  double grace = 0.5;
  double dt = 0.01;
  double v_max = 60.0; // units/s; intended velocity = v_max * intended direction
  double damping = 0.0; // kappa in direction - kappa * vel / v_max
  HoldMode hold_mode = HoldMode::home;
  double slow_radius = 10.0; // intent shrinks linearly inside this distance; 0 disables

  void validate() const;
};

enum class TrialStatus { ongoing, success, timeout };

struct StepFeedback {
  std::array<int, 2> reward{0, 0};
  ClassLabelPair label;
  TrialStatus status = TrialStatus::ongoing;
};

class CenterOutEnv {
public:
  CenterOutEnv(const EnvParams &params, AxisQuantizer qx, AxisQuantizer qy);

  /// Cursor back to the center, target on the circle at a uniform angle, timers zeroed.
  void new_trial(std::mt19937_64 &rng);
  /// Starts a trial toward an explicit target.
  void start_trial(Vec2 target);

  Vec2 intended_direction() const;
  Vec2 intended_velocity() const { return intended_direction() * params_.v_max; }
  /// Per-axis class of the intended velocity.
  ClassLabelPair intended_label() const;

  /// Moves the cursor by decoded_vel * dt and scores the decoded classes.
  StepFeedback step(Vec2 decoded_vel, ClassLabelPair decoded_cls);

  Vec2 cursor() const { return cursor_; }
  Vec2 cursor_velocity() const { return velocity_; }
  Vec2 target() const { return target_; }
  double elapsed() const { return static_cast<double>(steps_) * params_.dt; }
  double hold_elapsed() const { return static_cast<double>(hold_steps_) * params_.dt; }
  TrialStatus status() const { return status_; }
  std::optional<double> time_to_target() const { return time_to_target_; }
  bool inside_window() const;
  const EnvParams &params() const { return params_; }
  const AxisQuantizer &quantizer(std::size_t axis) const { return axis == 0 ? qx_ : qy_; }

private:
  EnvParams params_;
  AxisQuantizer qx_, qy_;
  Vec2 cursor_, velocity_, target_;
  std::size_t steps_ = 0;
  std::size_t hold_steps_ = 0;
  std::size_t entry_step_ = 0;
  TrialStatus status_ = TrialStatus::timeout; // no trial active until started
  std::optional<double> time_to_target_;
};

struct TrajectoryPoint {
  double t = 0.0;
  Vec2 pos, vel;
  ClassLabelPair predicted;
  std::array<int, 2> reward{0, 0};
  bool operator==(const TrajectoryPoint &) const = default;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  std::size_t index = 0;
  bool perturbed = false;
  std::vector<TrajectoryPoint> trajectory;
  std::optional<double> time_to_target;
  bool success = false;
  double duration = 0.0;
};

} // namespace dsnn
