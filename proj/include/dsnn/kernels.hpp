#pragma once

// LIF layer update kernels. The reference kernel is a plain serial loop over
// a dense input and is kept as the ground truth for tests and benchmarks; the
// production kernels are event-driven and split output rows across OpenMP
// threads once a layer is wide enough to amortise the fork.

#include <cstddef>
#include <cstdint>
#include <span>

#include "dsnn/matrix.hpp"

namespace dsnn::kernels {

// Rows below this count run serially even when OpenMP is enabled.
inline constexpr std::size_t kParallelRows = 256;

// membrane <- beta*membrane + W*input - last_spikes*reset; spikes where
// membrane > threshold are written back into last_spikes.
void lif_step_reference(const Matrix &weights, std::span<const double> input, double beta,
                        double threshold, std::span<double> membrane,
                        std::span<std::uint8_t> last_spikes);

// Same update for a binary input given as the ascending list of active columns.
// Only the active columns are read.
void lif_step_events(const Matrix &weights, std::span<const std::size_t> active, double beta,
                     double threshold, std::span<double> membrane,
                     std::span<std::uint8_t> last_spikes);

// Dense real-valued input, parallel over rows.
void lif_step_dense(const Matrix &weights, std::span<const double> input, double beta,
                    double threshold, std::span<double> membrane,
                    std::span<std::uint8_t> last_spikes);

int max_threads();

} // namespace dsnn::kernels
