#include "dsnn/metrics.hpp"

#include <cmath>
#include <numeric>

namespace dsnn {

double r_squared(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size() || actual.empty())
    throw std::invalid_argument("r_squared needs equal, nonempty sequences");
  const double mean =
      std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - pred[i]) * (actual[i] - pred[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) throw std::domain_error("r_squared undefined for constant targets");
  return 1.0 - ss_res / ss_tot;
}

double r_squared_2d(std::span<const double> pred_x, std::span<const double> actual_x,
                    std::span<const double> pred_y, std::span<const double> actual_y) {
  return 0.5 * (r_squared(pred_x, actual_x) + r_squared(pred_y, actual_y));
}

std::uint64_t footprint_bits(std::span<const std::size_t> sizes, LayerKind kind, bool ann_bias) {
  std::uint64_t params = 0;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    params += static_cast<std::uint64_t>(sizes[i]) * sizes[i - 1];
    if (kind == LayerKind::snn) params += 2ull * sizes[i];
    else if (ann_bias) params += sizes[i];
  }
  return params * 32ull;
}

ForwardCost forward_cost(std::span<const std::size_t> sizes, std::span<const double> input_sparsity,
                         LayerKind kind, double time_steps) {
  if (sizes.size() < 2 || input_sparsity.size() != sizes.size() - 1)
    throw std::invalid_argument("forward_cost: one input sparsity per weight layer");
  ForwardCost c;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    const double s = input_sparsity[i - 1];
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("sparsity must lie in [0, 1]");
    const double n = static_cast<double>(sizes[i]);
    const double fetch = (1.0 - s) * n * static_cast<double>(sizes[i - 1]);
    if (kind == LayerKind::snn) {
      const double ma = fetch + 2.0 * n;
      c.mem_access += ma;
      c.acs += ma * time_steps;
      c.macs += n * time_steps;
    } else {
      c.mem_access += fetch + n;
      c.acs += fetch + n;
      c.macs += fetch;
    }
  }
  return c;
}

ForwardCost forward_cost_uniform(std::span<const std::size_t> sizes, double sparsity,
                                 LayerKind kind, double time_steps) {
  std::vector<double> s(sizes.empty() ? 0 : sizes.size() - 1, sparsity);
  return forward_cost(sizes, s, kind, time_steps);
}

BackwardCost banditron_backward_cost(std::size_t n_in, double input_sparsity) {
  const double v = (1.0 - input_sparsity) * static_cast<double>(n_in) * 2.0;
  return {v, v};
}

SparsityProfile SparsityProfile::reference(std::span<const std::size_t> sizes) {
  const std::size_t k = sizes.size() - 1;
  auto sp = uniform(k, 0.6, 0.94, 0.6);
  sp.feedback[k] = 1.0 - 1.0 / static_cast<double>(sizes[k]);
  return sp;
}

SparsityProfile SparsityProfile::uniform(std::size_t depth, double s, double s_fb, double s_e) {
  SparsityProfile sp;
  sp.activity.assign(depth + 1, s);
  sp.feedback.assign(depth + 1, s_fb);
  sp.error.assign(depth + 1, s_e);
  return sp;
}

void SparsityProfile::validate(std::size_t depth) const {
  if (activity.size() != depth + 1 || feedback.size() != depth + 1 || error.size() != depth + 1)
    throw std::invalid_argument("sparsity profile needs one entry per layer 0..k");
  for (const auto *v : {&activity, &feedback, &error})
    for (double s : *v)
      if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("sparsity must lie in [0, 1]");
}

BackwardCost agrel_backward_cost(std::span<const std::size_t> sizes, const SparsityProfile &sp) {
  if (sizes.size() < 2) throw std::invalid_argument("agrel_backward_cost: need a weight layer");
  const std::size_t k = sizes.size() - 1;
  sp.validate(k);
  auto N = [&](std::size_t i) { return static_cast<double>(sizes[i]); };
  BackwardCost c;
  for (std::size_t i = 1; i <= k; ++i) {
    const double upd = (1.0 - sp.activity[i - 1]) * (1.0 - sp.feedback[i]) * N(i - 1) * N(i);
    c.macs += upd;
    c.mem_access += upd;
    c.mem_access += (1.0 - sp.activity[i]) * (1.0 - sp.error[i]) * N(i);
    if (i < k) {
      const double err = (1.0 - sp.feedback[i + 1]) * N(i + 1) * N(i);
      c.macs += err;
      c.mem_access += err;
    }
  }
  return c;
}

BackwardCost clsnn_backward_estimate(std::span<const std::size_t> sizes) {
  double weights = 0.0;
  for (std::size_t i = 1; i < sizes.size(); ++i)
    weights += static_cast<double>(sizes[i]) * static_cast<double>(sizes[i - 1]);
  return changed_parameter_estimate(weights);
}

BackwardCost changed_parameter_estimate(double changed_params) {
  return {2.0 * changed_params, changed_params};
}

EgruCost egru_cost_estimate(std::size_t n_hidden, std::size_t n_in, double changed_params) {
  const double h = static_cast<double>(n_hidden);
  const double x = static_cast<double>(n_in);
  return {3.0 * (h * (h + x) + 2.0 * h), 4.0 * changed_params, 2.0 * changed_params};
}

double aggregate_time_to_target(std::span<const TrialRecord> records, TrialWindow window,
                                double failure_time) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto &r : records) {
    if (r.index < window.first || r.index >= window.last) continue;
    sum += (r.success && r.time_to_target) ? *r.time_to_target : failure_time;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("no trials in the aggregation window");
  return sum / static_cast<double>(n);
}

} // namespace dsnn
