#pragma once

// Accuracy metrics and the analytic compute / memory cost model.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dsnn/ops_env.hpp"

namespace dsnn {

/// 1 - SS_res / SS_tot. Throws std::domain_error when `actual` is constant.
double r_squared(std::span<const double> pred, std::span<const double> actual);

/// Mean of the per-axis coefficients of determination.
double r_squared_2d(std::span<const double> pred_x, std::span<const double> actual_x,
                    std::span<const double> pred_y, std::span<const double> actual_y);

// ---------------------------------------------------------------------------
// Cost model. `sizes` is always [N0, N1, ..., Nk].

enum class LayerKind { snn, ann };

struct ForwardCost {
  double macs = 0.0;
  double acs = 0.0;
  double mem_access = 0.0;
};

struct BackwardCost {
  double macs = 0.0;
  double mem_access = 0.0;
};

/// Parameter storage in bits at 32 bits per value. SNN layers store weights
/// plus two per-neuron state values; ANN layers store weights plus a bias
/// (omitted when ann_bias is false).
std::uint64_t footprint_bits(std::span<const std::size_t> sizes, LayerKind kind = LayerKind::snn,
                             bool ann_bias = true);
inline double bits_to_kB(std::uint64_t bits) { return static_cast<double>(bits) / 8.0 / 1000.0; }
inline double bits_to_KiB(std::uint64_t bits) { return static_cast<double>(bits) / 8.0 / 1024.0; }

/// input_sparsity[i] is the fraction of zero activations feeding weight layer i
/// (so it has one entry per weight layer). time_steps is T_s.
ForwardCost forward_cost(std::span<const std::size_t> sizes, std::span<const double> input_sparsity,
                         LayerKind kind = LayerKind::snn, double time_steps = 1.0);
ForwardCost forward_cost_uniform(std::span<const std::size_t> sizes, double sparsity,
                                 LayerKind kind = LayerKind::snn, double time_steps = 1.0);

/// Last-layer update for two independent axes.
BackwardCost banditron_backward_cost(std::size_t n_in, double input_sparsity);

/// Sparsities for the AGREL estimate, indexed by layer 0..k (entry 0 unused
/// for feedback and error).
struct SparsityProfile {
  std::vector<double> activity; // s_i, fraction of silent units of layer i
  std::vector<double> feedback; // s_fb_i
  std::vector<double> error;    // s_e_i

  /// s = 0.6 on every layer, s_fb = 0.94 on hidden layers, one winning unit on
  /// the output layer (s_fb_k = 1 - 1/N_k), s_e = 0.6.
  static SparsityProfile reference(std::span<const std::size_t> sizes);
  static SparsityProfile uniform(std::size_t depth, double s, double s_fb, double s_e);
  void validate(std::size_t depth) const;
};

BackwardCost agrel_backward_cost(std::span<const std::size_t> sizes, const SparsityProfile &sp);

/// Dense eligibility-trace update: 2 MACs and 1 access per weight.
BackwardCost clsnn_backward_estimate(std::span<const std::size_t> sizes);

/// MACs = 2 * changed, accesses = changed.
BackwardCost changed_parameter_estimate(double changed_params);

struct EgruCost {
  double fwd_macs = 0.0;
  double bwd_macs = 0.0;
  double bwd_mem_access = 0.0;
};
EgruCost egru_cost_estimate(std::size_t n_hidden, std::size_t n_in, double changed_params);

// ---------------------------------------------------------------------------

/// Trial window [first, last) by trial index.
struct TrialWindow {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Mean time-to-target over records whose index falls in the window; failed
/// trials count as `failure_time`.
double aggregate_time_to_target(std::span<const TrialRecord> records, TrialWindow window,
                                double failure_time = 3.0);

} // namespace dsnn
