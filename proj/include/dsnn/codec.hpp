#pragma once

// Regression <-> classification conversion for velocity decoding, and
// binning of raw spike event times into binary input vectors.

#include <cstddef>
#include <span>
#include <vector>

#include "dsnn/matrix.hpp"

namespace dsnn {

/// Uniform quantizer for one velocity axis.
class AxisQuantizer {
public:
  AxisQuantizer() = default;
  AxisQuantizer(std::size_t n_bins, double v_min, double v_max);
  /// Rebuild from explicit edges (e.g. read back from a config file).
  static AxisQuantizer from_edges(std::vector<double> edges);

  /// Bin index of v. Values outside the range clamp to the end bins; an edge
  /// value belongs to the bin above it, except the final edge.
  std::size_t quantize(double v) const;
  /// Bin center; held by the caller until the next prediction.
  double reconstruct(std::size_t cls) const;

  std::size_t n_bins() const { return centers_.size(); }
  double v_min() const { return edges_.front(); }
  double v_max() const { return edges_.back(); }
  double width() const { return (v_max() - v_min()) / static_cast<double>(n_bins()); }
  const std::vector<double> &edges() const { return edges_; }
  const std::vector<double> &centers() const { return centers_; }

  bool operator==(const AxisQuantizer &) const = default;

private:
  std::vector<double> edges_{-1.0, 1.0};
  std::vector<double> centers_{0.0};
};

struct QuantizerFit {
  AxisQuantizer quantizer;
  bool degenerate = false; // range collapsed and was widened to +-1e-6
};

/// Symmetric range from the 1st/99th percentiles of the training velocities.
QuantizerFit fit_quantizer(std::span<const double> training_velocities, std::size_t n_bins);

/// Value at fraction q of the sorted sample, linear interpolation between ranks.
double percentile(std::vector<double> values, double q);

/// Bit j is set iff channel j has an event in [t0, t0 + window).
SpikeVector bin_spikes(const std::vector<std::vector<double>> &spike_times, double t0,
                       double window);

} // namespace dsnn
