#pragma once

// Binned spike recordings with per-bin velocity labels, the SPKD container,
// and a synthetic multi-session generator with cross-session drift.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "dsnn/config.hpp"
#include "dsnn/matrix.hpp"

namespace dsnn {

/// Payload disagrees with the header (sizes, counts, trailing bytes).
class DataValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Session {
  std::vector<SpikeVector> bins;
  std::vector<std::array<float, 2>> velocity; // (vx, vy) sampled at bin end

  std::size_t size() const { return bins.size(); }
  bool operator==(const Session &) const = default;
};

struct SpikeDataset {
  std::size_t n_channels = 0;
  std::uint32_t bin_width_us = 0;
  std::vector<Session> sessions;

  double bin_width() const { return static_cast<double>(bin_width_us) * 1e-6; }
  std::size_t total_bins() const;
  void validate() const;
  bool operator==(const SpikeDataset &) const = default;
};

// SPKD layout (little-endian):
//   "SPKD" u32 version u32 n_channels u32 bin_width_us u64 n_bins u32 n_sessions
//   u64 session_offset[n_sessions]   (first bin index of each session)
//   per bin: ceil(n_channels / 8) bytes of channel bits (LSB first), f32 vx, f32 vy
void write_dataset(std::ostream &os, const SpikeDataset &ds);
SpikeDataset read_dataset(std::istream &is);
void save_dataset(const std::filesystem::path &path, const SpikeDataset &ds);
SpikeDataset ingest_dataset(const std::filesystem::path &path);

/// Smooth random-walk velocities encoded by a cosine-tuned population. From the
/// second session on, all preferred directions are rotated away from day one by
/// a shared angle of roughly drift_strength * pi, drift_strength/8 of the
/// channels get a fresh random direction and drift_strength/4 have their peak
/// rate drift down (cumulative).
SpikeDataset synth_dataset(std::uint64_t seed, std::size_t n_sessions, double drift_strength,
                           const SynthConfig &cfg, const OpsParams &ops);

} // namespace dsnn
