#include "dsnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "dsnn/binary_io.hpp"
#include "dsnn/ops_env.hpp"

namespace dsnn {

namespace {
constexpr char kMagic[4] = {'S', 'P', 'K', 'D'};
constexpr std::uint32_t kVersion = 1;
} // namespace

std::size_t SpikeDataset::total_bins() const {
  std::size_t n = 0;
  for (const auto &s : sessions) n += s.size();
  return n;
}

void SpikeDataset::validate() const {
  if (n_channels == 0) throw DataValidationError("dataset has no channels");
  if (bin_width_us == 0) throw DataValidationError("dataset bin width is zero");
  for (const auto &s : sessions) {
    if (s.bins.size() != s.velocity.size())
      throw DataValidationError("spike and velocity streams differ in length");
    for (const auto &b : s.bins)
      if (b.size() != n_channels) throw DataValidationError("bin width differs from n_channels");
  }
}

void write_dataset(std::ostream &os, const SpikeDataset &ds) {
  ds.validate();
  os.write(kMagic, 4);
  io::put_le<std::uint32_t>(os, kVersion);
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.n_channels));
  io::put_le<std::uint32_t>(os, ds.bin_width_us);
  io::put_le<std::uint64_t>(os, ds.total_bins());
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ds.sessions.size()));
  std::uint64_t offset = 0;
  for (const auto &s : ds.sessions) {
    io::put_le<std::uint64_t>(os, offset);
    offset += s.size();
  }
  const std::size_t mask_bytes = (ds.n_channels + 7) / 8;
  std::vector<char> mask(mask_bytes);
  for (const auto &s : ds.sessions) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      std::fill(mask.begin(), mask.end(), 0);
      for (std::size_t ch = 0; ch < ds.n_channels; ++ch)
        if (s.bins[t][ch]) mask[ch / 8] = static_cast<char>(mask[ch / 8] | (1 << (ch % 8)));
      os.write(mask.data(), static_cast<std::streamsize>(mask_bytes));
      io::put_f32(os, s.velocity[t][0]);
      io::put_f32(os, s.velocity[t][1]);
    }
  }
}

SpikeDataset read_dataset(std::istream &is) {
  io::Reader rd(is);
  char magic[4];
  rd.bytes(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw io::ParseError("bad dataset magic", 0);
  const auto version = rd.le<std::uint32_t>("version");
  if (version != kVersion)
    throw io::ParseError("unsupported dataset version " + std::to_string(version), 4);
  SpikeDataset ds;
  ds.n_channels = rd.le<std::uint32_t>("n_channels");
  ds.bin_width_us = rd.le<std::uint32_t>("bin_width_us");
  const auto n_bins = rd.le<std::uint64_t>("n_bins");
  const auto n_sessions = rd.le<std::uint32_t>("n_sessions");
  if (ds.n_channels == 0 || ds.n_channels > (1u << 20))
    throw DataValidationError("implausible channel count " + std::to_string(ds.n_channels));
  std::vector<std::uint64_t> offsets(n_sessions);
  for (auto &o : offsets) o = rd.le<std::uint64_t>("session offset");
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const bool ordered = i == 0 ? offsets[i] == 0 : offsets[i] >= offsets[i - 1];
    if (!ordered || offsets[i] > n_bins)
      throw DataValidationError("session offsets are not ascending within n_bins");
  }
  if (n_sessions == 0 && n_bins != 0) throw DataValidationError("bins present but no sessions");

  const std::size_t mask_bytes = (ds.n_channels + 7) / 8;
  std::vector<char> mask(mask_bytes);
  ds.sessions.resize(n_sessions);
  for (std::uint32_t s = 0; s < n_sessions; ++s) {
    const auto end = s + 1 < n_sessions ? offsets[s + 1] : n_bins;
    auto &sess = ds.sessions[s];
    for (auto t = offsets[s]; t < end; ++t) {
      rd.bytes(mask.data(), mask_bytes, "channel mask");
      SpikeVector bits(ds.n_channels, 0);
      for (std::size_t ch = 0; ch < ds.n_channels; ++ch)
        bits[ch] = (static_cast<unsigned char>(mask[ch / 8]) >> (ch % 8)) & 1u;
      for (std::size_t ch = ds.n_channels; ch < mask_bytes * 8; ++ch)
        if ((static_cast<unsigned char>(mask[ch / 8]) >> (ch % 8)) & 1u)
          throw DataValidationError("padding bits set beyond n_channels at bin " +
                                    std::to_string(t));
      sess.bins.push_back(std::move(bits));
      const float vx = rd.f32("velocity");
      const float vy = rd.f32("velocity");
      sess.velocity.push_back({vx, vy});
    }
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw DataValidationError("trailing bytes after " + std::to_string(n_bins) +
                              " bins; header and payload disagree (offset " +
                              std::to_string(rd.offset()) + ")");
  ds.validate();
  return ds;
}

void save_dataset(const std::filesystem::path &path, const SpikeDataset &ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_dataset(os, ds);
}

SpikeDataset ingest_dataset(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open dataset " + path.string());
  return read_dataset(is);
}

SpikeDataset synth_dataset(std::uint64_t seed, std::size_t n_sessions, double drift_strength,
                           const SynthConfig &cfg, const OpsParams &ops_in) {
  if (n_sessions < 1) throw std::invalid_argument("need at least one session");
  if (!(drift_strength >= 0.0 && drift_strength < 1.0))
    throw std::invalid_argument("drift_strength must lie in [0, 1)");
  OpsParams ops = ops_in;
  ops.n_neurons = cfg.n_channels;
  ops.bin_seconds = cfg.bin_width;
  OpsBrain brain(ops, seed);
  std::mt19937_64 motion(seed * 7919 + 17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Day-to-day drift: the whole population's tuning rotates by a shared angle
  // relative to day one, a few channels are reassigned outright and some rates drift.
  std::mt19937_64 day(seed * 6007 + 5);
  std::uniform_real_distribution<double> spread(0.625, 1.25);
  std::vector<Vec2> day_one(brain.size());
  for (std::size_t k = 0; k < brain.size(); ++k) day_one[k] = brain.preferred_direction(k);

  SpikeDataset ds;
  ds.n_channels = cfg.n_channels;
  ds.bin_width_us = static_cast<std::uint32_t>(std::llround(cfg.bin_width * 1e6));
  const double dt = cfg.bin_width;
  const double decay = std::exp(-dt / cfg.velocity_tau);
  const double kick = cfg.velocity_scale * std::sqrt(1.0 - decay * decay);
  const double clip = cfg.drive_clip * cfg.velocity_scale;

  for (std::size_t s = 0; s < n_sessions; ++s) {
    if (s > 0 && drift_strength > 0.0) {
      double angle = std::min(std::numbers::pi, std::numbers::pi * drift_strength * spread(day));
      if (day() & 1) angle = -angle;
      const double c = std::cos(angle), sn = std::sin(angle);
      for (std::size_t k = 0; k < brain.size(); ++k) {
        const Vec2 d = day_one[k];
        brain.set_preferred_direction(k, {c * d.x - sn * d.y, sn * d.x + c * d.y});
      }
      PerturbationSpec shift{PerturbationKind::electrode_shift, drift_strength * 0.125, 0,
                             seed * 1000003 + s * 2 + 1};
      if (perturbed_count(shift, brain.size()) > 0) apply_perturbation(brain, shift);
      PerturbationSpec drift{PerturbationKind::rate_drift, drift_strength * 0.25, 0,
                             seed * 1000003 + s * 2 + 2};
      drift.drift_max_lo = ops.lambda_max_lo * 0.5;
      drift.drift_max_hi = ops.lambda_max_hi;
      if (perturbed_count(drift, brain.size()) > 0) apply_perturbation(brain, drift);
    }
    Session sess;
    sess.bins.reserve(cfg.bins_per_session);
    sess.velocity.reserve(cfg.bins_per_session);
    Vec2 v{cfg.velocity_scale * gauss(motion), cfg.velocity_scale * gauss(motion)};
    for (std::size_t t = 0; t < cfg.bins_per_session; ++t) {
      v = {decay * v.x + kick * gauss(motion), decay * v.y + kick * gauss(motion)};
      const auto vx = static_cast<float>(v.x);
      const auto vy = static_cast<float>(v.y);
      Vec2 drive{vx / clip, vy / clip};
      const double n = drive.norm();
      if (n > 1.0) drive = drive * (1.0 / n);
      sess.bins.push_back(brain.generate(drive));
      sess.velocity.push_back({vx, vy});
    }
    ds.sessions.push_back(std::move(sess));
  }
  return ds;
}

} // namespace dsnn
