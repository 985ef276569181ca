#include "dsnn/codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsnn {

AxisQuantizer::AxisQuantizer(std::size_t n_bins, double v_min, double v_max) {
  if (n_bins < 1) throw std::invalid_argument("quantizer needs at least one bin");
  if (!(v_max > v_min)) throw std::invalid_argument("quantizer range must be increasing");
  edges_.resize(n_bins + 1);
  const double w = (v_max - v_min) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i <= n_bins; ++i) edges_[i] = v_min + w * static_cast<double>(i);
  edges_.back() = v_max;
  centers_.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) centers_[i] = 0.5 * (edges_[i] + edges_[i + 1]);
}

AxisQuantizer AxisQuantizer::from_edges(std::vector<double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("need at least two quantizer edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]))
      throw std::invalid_argument("quantizer edges must be strictly ascending");
  AxisQuantizer q;
  q.edges_ = std::move(edges);
  q.centers_.resize(q.edges_.size() - 1);
  for (std::size_t i = 0; i + 1 < q.edges_.size(); ++i)
    q.centers_[i] = 0.5 * (q.edges_[i] + q.edges_[i + 1]);
  return q;
}

std::size_t AxisQuantizer::quantize(double v) const {
  // First edge strictly greater than v; the bin is the one just below it.
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), v);
  if (it == edges_.begin()) return 0;
  const auto idx = static_cast<std::size_t>(it - edges_.begin()) - 1;
  return std::min(idx, n_bins() - 1);
}

double AxisQuantizer::reconstruct(std::size_t cls) const {
  if (cls >= n_bins())
    throw std::invalid_argument("class " + std::to_string(cls) + " out of range");
  return centers_[cls];
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

QuantizerFit fit_quantizer(std::span<const double> training_velocities, std::size_t n_bins) {
  if (training_velocities.empty())
    throw std::invalid_argument("cannot fit a quantizer to an empty sequence");
  std::vector<double> v(training_velocities.begin(), training_velocities.end());
  const double p1 = percentile(v, 0.01);
  const double p99 = percentile(std::move(v), 0.99);
  double half = std::max(std::abs(p1), std::abs(p99));
  QuantizerFit fit;
  constexpr double kMinHalfRange = 1e-6;
  if (!(half > kMinHalfRange)) {
    half = kMinHalfRange;
    fit.degenerate = true;
  }
  fit.quantizer = AxisQuantizer(n_bins, -half, half);
  return fit;
}

SpikeVector bin_spikes(const std::vector<std::vector<double>> &spike_times, double t0,
                       double window) {
  if (!(window > 0.0)) throw std::invalid_argument("bin window must be positive");
  SpikeVector bits(spike_times.size(), 0);
  const double t1 = t0 + window;
  for (std::size_t ch = 0; ch < spike_times.size(); ++ch)
    for (double t : spike_times[ch])
      if (t >= t0 && t < t1) {
        bits[ch] = 1;
        break;
      }
  return bits;
}

} // namespace dsnn
