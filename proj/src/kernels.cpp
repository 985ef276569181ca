#include "dsnn/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dsnn::kernels {

void lif_step_reference(const Matrix &weights, std::span<const double> input, double beta,
                        double threshold, std::span<double> membrane,
                        std::span<std::uint8_t> last_spikes) {
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    double drive = 0.0;
    for (std::size_t j = 0; j < weights.cols(); ++j)
      drive += weights(i, j) * input[j];
    double u = beta * membrane[i] + drive;
    if (last_spikes[i]) u -= threshold;
    membrane[i] = u;
    last_spikes[i] = u > threshold ? 1 : 0;
  }
}

void lif_step_events(const Matrix &weights, std::span<const std::size_t> active, double beta,
                     double threshold, std::span<double> membrane,
                     std::span<std::uint8_t> last_spikes) {
  const auto rows = static_cast<std::ptrdiff_t>(weights.rows());
#pragma omp parallel for schedule(static) if (weights.rows() >= kParallelRows)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto w = weights.row(static_cast<std::size_t>(i));
    double drive = 0.0;
    for (auto j : active) drive += w[j];
    double u = beta * membrane[i] + drive;
    if (last_spikes[i]) u -= threshold;
    membrane[i] = u;
    last_spikes[i] = u > threshold ? 1 : 0;
  }
}

void lif_step_dense(const Matrix &weights, std::span<const double> input, double beta,
                    double threshold, std::span<double> membrane,
                    std::span<std::uint8_t> last_spikes) {
  const auto rows = static_cast<std::ptrdiff_t>(weights.rows());
  const std::size_t cols = weights.cols();
#pragma omp parallel for schedule(static) if (weights.rows() >= kParallelRows)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto w = weights.row(static_cast<std::size_t>(i));
    double drive = 0.0;
    for (std::size_t j = 0; j < cols; ++j) drive += w[j] * input[j];
    double u = beta * membrane[i] + drive;
    if (last_spikes[i]) u -= threshold;
    membrane[i] = u;
    last_spikes[i] = u > threshold ? 1 : 0;
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

} // namespace dsnn::kernels
