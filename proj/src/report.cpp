#include "dsnn/report.hpp"

#include <ostream>

#include "dsnn/metrics.hpp"

namespace dsnn {

namespace {

// Reference sizes for the comparison methods.
constexpr std::size_t kClsnnOutputs = 2;
constexpr double kClsnnChangedParams = 2510.0;
constexpr std::size_t kEgruHidden = 8;
constexpr std::size_t kEgruInputs = 2;
constexpr double kEgruChangedParams = 313.0;

} // namespace

std::vector<ReportRow> cost_table(const ExperimentConfig &cfg, double sparsity,
                                  const std::map<std::string, MeasuredTimes> &times) {
  const auto &sizes = cfg.network.layer_sizes;
  const std::size_t n_in = sizes.front();
  const std::size_t n_out = sizes.back();
  std::vector<ReportRow> rows;

  const auto fwd = forward_cost_uniform(sizes, sparsity);
  const double snn_kB = bits_to_kB(footprint_bits(sizes));
  auto dsnn_row = [&](std::string name, BackwardCost bwd) {
    rows.push_back({std::move(name), {}, {}, fwd.macs, fwd.acs, fwd.mem_access, bwd.macs,
                    bwd.mem_access, snn_kB});
  };
  dsnn_row("DSNN_Banditron", banditron_backward_cost(sizes[sizes.size() - 2], sparsity));
  auto profile = SparsityProfile::reference(sizes);
  for (auto &s : profile.activity) s = sparsity;
  dsnn_row("DSNN_AGREL", agrel_backward_cost(sizes, profile));
  dsnn_row("DSNN", {});

  const std::vector<std::size_t> single{n_in, n_out};
  const auto ann = forward_cost_uniform(single, sparsity, LayerKind::ann);
  const auto ann_bwd = banditron_backward_cost(n_in, sparsity);
  rows.push_back({"Banditron", {}, {}, ann.macs, ann.acs, ann.mem_access, ann_bwd.macs,
                  ann_bwd.mem_access, bits_to_KiB(footprint_bits(single, LayerKind::ann, false))});

  auto cl_sizes = sizes;
  cl_sizes.back() = kClsnnOutputs;
  const auto cl = forward_cost_uniform(cl_sizes, sparsity);
  const auto cl_bwd = changed_parameter_estimate(kClsnnChangedParams);
  rows.push_back({"CLSNN", {}, {}, cl.macs, cl.acs, cl.mem_access, cl_bwd.macs, cl_bwd.mem_access,
                  bits_to_kB(footprint_bits(cl_sizes))});

  const auto eg = egru_cost_estimate(kEgruHidden, kEgruInputs, kEgruChangedParams);
  rows.push_back({"EGRU", {}, {}, eg.fwd_macs, 0.0, 0.0, eg.bwd_macs, eg.bwd_mem_access, 0.0});

  for (auto &r : rows) {
    const auto it = times.find(r.method);
    if (it == times.end()) continue;
    r.avg_time = it->second.pre;
    r.avg_time_perturb = it->second.post;
  }
  return rows;
}

void write_report_csv(std::ostream &os, const std::vector<ReportRow> &rows) {
  os << "method,avg_time,avg_time_perturb,fwd_macs,fwd_acs,fwd_mem_access,bwd_macs,"
        "bwd_mem_access,footprint_kB\n";
  auto opt = [&](const std::optional<double> &v) {
    if (v) os << *v;
  };
  for (const auto &r : rows) {
    os << r.method << ',';
    opt(r.avg_time);
    os << ',';
    opt(r.avg_time_perturb);
    os << ',' << r.fwd_macs << ',' << r.fwd_acs << ',' << r.fwd_mem_access << ',' << r.bwd_macs
       << ',' << r.bwd_mem_access << ',' << r.footprint_kB << '\n';
  }
}

} // namespace dsnn
