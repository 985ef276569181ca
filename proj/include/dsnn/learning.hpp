#pragma once

// Weight-change machinery: supervised surrogate-gradient pretraining and the
// two online reward-driven rules (Banditron on the last layer, AGREL on all
// layers).

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsnn/ledger.hpp"
#include "dsnn/matrix.hpp"
#include "dsnn/snn.hpp"

namespace dsnn {

/// Per-axis class labels (x, y).
struct ClassLabelPair {
  std::size_t cls_x = 0;
  std::size_t cls_y = 0;

  std::size_t operator[](std::size_t axis) const { return axis == 0 ? cls_x : cls_y; }
  bool operator==(const ClassLabelPair &) const = default;
};

/// Argmax with ties going to the lowest index.
std::size_t predict_class(std::span<const double> out_membrane);

/// Multiclass hinge loss with a unit straight-through factor; diagnostic only.
double hinge_loss(std::span<const double> out, std::size_t label);

/// Probability of playing class c under epsilon-uniform exploration around `predicted`.
double exploration_probability(double epsilon, std::size_t n_classes, std::size_t predicted,
                               std::size_t c);

struct Exploration {
  std::size_t sampled = 0;
  double probability = 1.0;
};

/// Raw Banditron step for one axis: C x N matrix of
/// s_j * (1[y == sampled] 1[sampled == c] / P(sampled) - 1[predicted == c]).
Matrix banditron_delta(std::size_t n_classes, std::span<const std::uint8_t> s2,
                       std::size_t predicted, const Exploration &explored, std::size_t label);

class BanditronLearner {
public:
  BanditronLearner(double epsilon, std::size_t n_classes, std::uint64_t seed,
                   double learning_rate = 1.0);

  Exploration explore(std::size_t predicted);

  /// Applies the update to rows [row_offset, row_offset + C) of `w`, touching only
  /// columns where s2 is active. `correct` is the bandit feedback 1[label == sampled].
  void update(Matrix &w, std::size_t row_offset, std::span<const std::uint8_t> s2,
              std::size_t predicted, const Exploration &explored, bool correct,
              ResourceLedger *ledger = nullptr) const;

  /// Full-information convenience wrapper around update().
  void update_with_label(Matrix &w, std::size_t row_offset, std::span<const std::uint8_t> s2,
                         std::size_t predicted, const Exploration &explored, std::size_t label,
                         ResourceLedger *ledger = nullptr) const {
    update(w, row_offset, s2, predicted, explored, label == explored.sampled, ledger);
  }

  double epsilon() const { return epsilon_; }
  std::size_t n_classes() const { return n_classes_; }
  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr) { learning_rate_ = lr; }

private:
  double epsilon_;
  std::size_t n_classes_;
  double learning_rate_;
  std::mt19937_64 rng_;
};

class AgrelLearner {
public:
  explicit AgrelLearner(double alpha);

  /// Weight changes for every layer, computed from the pre-update weights.
  /// `winners` holds the selected unit per output block (block size = N_out / winners.size())
  /// and `rewards` the matching 0/1 reward.
  std::vector<Matrix> deltas(const Network &net, std::span<const std::uint8_t> input,
                             const ForwardResult &fwd, std::span<const std::size_t> winners,
                             std::span<const int> rewards, ResourceLedger *ledger = nullptr) const;

  /// Computes deltas() and adds them to the network. Zero feedback leaves
  /// weights bitwise untouched.
  void update(Network &net, std::span<const std::uint8_t> input, const ForwardResult &fwd,
              std::span<const std::size_t> winners, std::span<const int> rewards,
              ResourceLedger *ledger = nullptr) const;

  double alpha() const { return alpha_; }
  void set_alpha(double a) { alpha_ = a; }

private:
  double alpha_;
};

// ---------------------------------------------------------------------------
// Pretraining

enum class Surrogate { arctan, straight_through };

struct PretrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 0.01;
  std::size_t batch_size = 512;
  Surrogate surrogate = Surrogate::arctan;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.01;
  double dropout = 0.0;
  std::uint64_t seed = 0;
  bool shuffle_batches = true;

  void validate() const;
};

/// Ordered labelled stream; membranes reset at every entry of `sequence_starts`.
struct TrainingStream {
  std::vector<SpikeVector> inputs;
  std::vector<ClassLabelPair> labels;
  std::vector<std::size_t> sequence_starts{0};

  std::size_t size() const { return inputs.size(); }
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct PretrainResult {
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  std::vector<EpochLog> log;
};

class TrainingDivergence : public std::runtime_error {
public:
  TrainingDivergence(std::size_t epoch, std::size_t step)
      : std::runtime_error("training diverged (non-finite loss) at epoch " +
                           std::to_string(epoch) + ", step " + std::to_string(step)),
        epoch_(epoch), step_(step) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t step() const { return step_; }

private:
  std::size_t epoch_;
  std::size_t step_;
};

/// Surrogate derivative dS/dU evaluated at (membrane - threshold).
double surrogate_grad(Surrogate s, double x);

/// Adam with decoupled weight decay over a list of matrices.
class AdamW {
public:
  AdamW(double lr, double beta1, double beta2, double epsilon, double weight_decay);
  void step(std::vector<Matrix *> params, const std::vector<Matrix> &grads);
  void set_learning_rate(double lr) { lr_ = lr; }

private:
  double lr_, beta1_, beta2_, eps_, wd_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

/// Minimises summed per-axis cross-entropy on the output membranes with
/// single-step surrogate-gradient backpropagation. The output layer holds two
/// equal class blocks (x then y).
PretrainResult pretrain(Network &net, const TrainingStream &data, const PretrainConfig &cfg,
                        const std::function<void(const EpochLog &)> &on_epoch = {});

/// Per-axis accuracy of the inference path over the stream (membranes reset at
/// sequence starts).
double stream_accuracy(Network &net, const TrainingStream &data);

} // namespace dsnn
