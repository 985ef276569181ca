#pragma once

// Cost/performance comparison table.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dsnn/config.hpp"

namespace dsnn {

struct ReportRow {
  std::string method;
  std::optional<double> avg_time;         // trials before the perturbation
  std::optional<double> avg_time_perturb; // trials after it
  double fwd_macs = 0.0;
  double fwd_acs = 0.0;
  double fwd_mem_access = 0.0;
  double bwd_macs = 0.0;
  double bwd_mem_access = 0.0;
  double footprint_kB = 0.0;
};

struct MeasuredTimes {
  double pre = 0.0;
  double post = 0.0;
};

/// Analytic cost rows at a uniform activity sparsity. `times` fills in the
/// time columns for methods that were run (keyed by method name).
std::vector<ReportRow> cost_table(const ExperimentConfig &cfg, double sparsity = 0.6,
                                  const std::map<std::string, MeasuredTimes> &times = {});

void write_report_csv(std::ostream &os, const std::vector<ReportRow> &rows);

} // namespace dsnn
