#pragma once

#include <cstdint>

namespace dsnn {

/// Accumulated operation and memory-access counts for one run.
struct ResourceLedger {
  double fwd_macs = 0.0;
  double fwd_acs = 0.0;
  double fwd_mem_access = 0.0;
  double bwd_macs = 0.0;
  double bwd_mem_access = 0.0;
  std::uint64_t footprint_bits = 0;
  std::uint64_t forward_calls = 0;
  std::uint64_t backward_calls = 0;

  ResourceLedger &operator+=(const ResourceLedger &o) {
    fwd_macs += o.fwd_macs;
    fwd_acs += o.fwd_acs;
    fwd_mem_access += o.fwd_mem_access;
    bwd_macs += o.bwd_macs;
    bwd_mem_access += o.bwd_mem_access;
    forward_calls += o.forward_calls;
    backward_calls += o.backward_calls;
    if (footprint_bits == 0) footprint_bits = o.footprint_bits;
    return *this;
  }
};

} // namespace dsnn
