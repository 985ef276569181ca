#pragma once

// Fully connected leaky integrate-and-fire network with subtractive reset,
// stepped one streaming time bin at a time.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "dsnn/ledger.hpp"
#include "dsnn/matrix.hpp"

namespace dsnn {

struct LifParams {
  double beta = 0.9;      // membrane decay per step, exp(-dt/tau)
  double threshold = 1.0; // also the reset magnitude

  void validate() const;
  bool operator==(const LifParams &) const = default;
};

struct LayerStep {
  SpikeVector spikes;
  std::vector<double> membrane;
};

class LifLayer {
public:
  LifLayer(std::size_t n_in, std::size_t n_out, LifParams params = {});
  LifLayer(Matrix weights, LifParams params = {});

  /// One update with a binary input; only active columns are fetched.
  LayerStep step(std::span<const std::uint8_t> input, ResourceLedger *ledger = nullptr);
  /// One update with a real-valued input.
  LayerStep step(std::span<const double> input, ResourceLedger *ledger = nullptr);

  void reset();

  std::size_t n_in() const { return weights_.cols(); }
  std::size_t n_out() const { return weights_.rows(); }
  Matrix &weights() { return weights_; }
  const Matrix &weights() const { return weights_; }
  std::span<const double> membrane() const { return membrane_; }
  std::span<const std::uint8_t> last_spikes() const { return last_spikes_; }
  const LifParams &params() const { return params_; }

  /// Overwrites the dynamic state; used by tests and the training loop.
  void set_state(std::span<const double> membrane, std::span<const std::uint8_t> last_spikes);

private:
  Matrix weights_;
  std::vector<double> membrane_;
  SpikeVector last_spikes_;
  LifParams params_;
};

struct NetworkConfig {
  std::vector<std::size_t> layer_sizes; // N0 (inputs), N1, ..., Nk (outputs)
  std::vector<LifParams> lif;           // one per weight layer; empty means defaults
  double dropout = 0.0;                 // training only
  double bin_window = 0.01;             // seconds
  double stride = 0.01;                 // seconds

  std::size_t depth() const { return layer_sizes.empty() ? 0 : layer_sizes.size() - 1; }
  LifParams lif_for(std::size_t layer) const;
  void validate() const;

  static NetworkConfig open_loop_default();   // [96, 30, 30, 8], d = 0.1, 4 ms bins
  static NetworkConfig closed_loop_default(); // [46, 65, 40, 8], d = 0.3, 10 ms bins
};

struct ForwardResult {
  SpikeVector out_spikes;
  std::vector<double> out_membrane;
  std::vector<SpikeVector> hidden_spikes; // S_1 .. S_{k-1}
};

class Network {
public:
  Network() = default;
  explicit Network(const NetworkConfig &config);

  /// PyTorch-style uniform(-1/sqrt(n_in), 1/sqrt(n_in)) initialisation.
  void init_weights(std::uint64_t seed);

  /// Inference pass; no dropout, no randomness.
  ForwardResult forward(std::span<const std::uint8_t> input, ResourceLedger *ledger = nullptr);

  void reset_states();

  std::size_t depth() const { return layers_.size(); }
  std::size_t input_size() const { return layers_.empty() ? 0 : layers_.front().n_in(); }
  std::size_t output_size() const { return layers_.empty() ? 0 : layers_.back().n_out(); }
  std::vector<std::size_t> layer_sizes() const;

  LifLayer &layer(std::size_t i) { return layers_.at(i); }
  const LifLayer &layer(std::size_t i) const { return layers_.at(i); }
  std::vector<LifLayer> &layers() { return layers_; }
  const std::vector<LifLayer> &layers() const { return layers_; }

  /// Rounds every weight to the nearest float32, matching the on-disk container.
  void round_to_float32();

  /// FNV-1a over the raw weight bytes of layers [first, last).
  std::uint64_t weight_checksum(std::size_t first, std::size_t last) const;

private:
  std::vector<LifLayer> layers_;
};

/// Scalar LIF recurrence for a single neuron; the independent oracle for tests.
struct ScalarLif {
  double beta;
  double threshold;
  double membrane = 0.0;
  bool spiked = false;

  bool step(double drive) {
    membrane = beta * membrane + drive - (spiked ? threshold : 0.0);
    spiked = membrane > threshold;
    return spiked;
  }
};

// Weight container: "DSNW", u32 version, u32 count, u32 sizes[count],
// f32 row-major weights per layer, then f64 (beta, threshold) per layer.
void write_network(std::ostream &os, const Network &net);
Network read_network(std::istream &is);
void save_network(const std::filesystem::path &path, const Network &net);
Network load_network(const std::filesystem::path &path);

} // namespace dsnn
