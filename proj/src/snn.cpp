#include "dsnn/snn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "dsnn/binary_io.hpp"
#include "dsnn/kernels.hpp"

namespace dsnn {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;

// Event-driven forward cost of one layer: one fetch per (active input, output)
// pair plus a read and a write of each membrane.
void meter(ResourceLedger *ledger, std::size_t active, std::size_t n_out) {
  if (!ledger) return;
  const double fetches = static_cast<double>(active) * static_cast<double>(n_out);
  const double state = 2.0 * static_cast<double>(n_out);
  ledger->fwd_mem_access += fetches + state;
  ledger->fwd_acs += fetches + state;
  ledger->fwd_macs += static_cast<double>(n_out);
}

} // namespace

void LifParams::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("LIF beta must lie in (0, 1]");
  if (!(threshold > 0.0)) throw ConfigError("LIF threshold must be positive");
}

LifLayer::LifLayer(std::size_t n_in, std::size_t n_out, LifParams params)
    : LifLayer(Matrix(n_out, n_in), params) {}

LifLayer::LifLayer(Matrix weights, LifParams params)
    : weights_(std::move(weights)), membrane_(weights_.rows(), 0.0),
      last_spikes_(weights_.rows(), 0), params_(params) {
  params_.validate();
  if (weights_.rows() == 0 || weights_.cols() == 0)
    throw ConfigError("LIF layer needs at least one input and one output");
}

LayerStep LifLayer::step(std::span<const std::uint8_t> input, ResourceLedger *ledger) {
  if (input.size() != n_in())
    throw ConfigError("LIF input length " + std::to_string(input.size()) + " != " +
                      std::to_string(n_in()));
  const auto active = active_indices(input);
  kernels::lif_step_events(weights_, active, params_.beta, params_.threshold, membrane_,
                           last_spikes_);
  meter(ledger, active.size(), n_out());
  return {last_spikes_, membrane_};
}

LayerStep LifLayer::step(std::span<const double> input, ResourceLedger *ledger) {
  if (input.size() != n_in())
    throw ConfigError("LIF input length " + std::to_string(input.size()) + " != " +
                      std::to_string(n_in()));
  kernels::lif_step_dense(weights_, input, params_.beta, params_.threshold, membrane_,
                          last_spikes_);
  std::size_t nonzero = 0;
  for (double x : input) nonzero += x != 0.0 ? 1 : 0;
  meter(ledger, nonzero, n_out());
  return {last_spikes_, membrane_};
}

void LifLayer::reset() {
  std::fill(membrane_.begin(), membrane_.end(), 0.0);
  std::fill(last_spikes_.begin(), last_spikes_.end(), 0);
}

void LifLayer::set_state(std::span<const double> membrane, std::span<const std::uint8_t> spikes) {
  if (membrane.size() != n_out() || spikes.size() != n_out())
    throw ConfigError("LIF state size mismatch");
  membrane_.assign(membrane.begin(), membrane.end());
  last_spikes_.assign(spikes.begin(), spikes.end());
}

LifParams NetworkConfig::lif_for(std::size_t layer) const {
  if (lif.empty()) return {};
  if (lif.size() == 1) return lif.front();
  return lif.at(layer);
}

void NetworkConfig::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("network needs at least one weight layer");
  for (auto n : layer_sizes)
    if (n == 0) throw ConfigError("layer sizes must be >= 1");
  if (!lif.empty() && lif.size() != 1 && lif.size() != depth())
    throw ConfigError("need one LIF parameter set per layer");
  for (const auto &p : lif) p.validate();
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(bin_window > 0.0)) throw ConfigError("bin window must be positive");
  if (bin_window != stride) throw ConfigError("streaming requires bin window == stride");
}

NetworkConfig NetworkConfig::open_loop_default() {
  NetworkConfig c;
  c.layer_sizes = {96, 30, 30, 8};
  c.dropout = 0.1;
  c.bin_window = c.stride = 0.004;
  return c;
}

NetworkConfig NetworkConfig::closed_loop_default() {
  NetworkConfig c;
  c.layer_sizes = {46, 65, 40, 8};
  c.dropout = 0.3;
  c.bin_window = c.stride = 0.01;
  return c;
}

Network::Network(const NetworkConfig &config) {
  config.validate();
  for (std::size_t i = 0; i < config.depth(); ++i)
    layers_.emplace_back(config.layer_sizes[i], config.layer_sizes[i + 1], config.lif_for(i));
}

void Network::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto &layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.n_in()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto &w : layer.weights().data()) w = dist(rng);
  }
}

ForwardResult Network::forward(std::span<const std::uint8_t> input, ResourceLedger *ledger) {
  if (layers_.empty()) throw ConfigError("empty network");
  if (input.size() != input_size())
    throw ConfigError("network input length " + std::to_string(input.size()) + " != " +
                      std::to_string(input_size()));
  ForwardResult out;
  out.hidden_spikes.reserve(layers_.size() - 1);
  std::span<const std::uint8_t> x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto r = layers_[i].step(x, ledger);
    if (i + 1 < layers_.size()) {
      out.hidden_spikes.push_back(std::move(r.spikes));
      x = out.hidden_spikes.back();
    } else {
      out.out_spikes = std::move(r.spikes);
      out.out_membrane = std::move(r.membrane);
    }
  }
  if (ledger) ++ledger->forward_calls;
  return out;
}

void Network::reset_states() {
  for (auto &l : layers_) l.reset();
}

std::vector<std::size_t> Network::layer_sizes() const {
  std::vector<std::size_t> s;
  if (layers_.empty()) return s;
  s.push_back(layers_.front().n_in());
  for (const auto &l : layers_) s.push_back(l.n_out());
  return s;
}

void Network::round_to_float32() {
  for (auto &l : layers_)
    for (auto &w : l.weights().data()) w = static_cast<double>(static_cast<float>(w));
}

std::uint64_t Network::weight_checksum(std::size_t first, std::size_t last) const {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = first; i < last && i < layers_.size(); ++i) {
    for (double w : layers_[i].weights().data()) {
      const auto bits = std::bit_cast<std::uint64_t>(w);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

void write_network(std::ostream &os, const Network &net) {
  os.write(kMagic, 4);
  io::put_le<std::uint32_t>(os, kVersion);
  const auto sizes = net.layer_sizes();
  io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(sizes.size()));
  for (auto n : sizes) io::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(n));
  for (const auto &l : net.layers())
    for (double w : l.weights().data()) io::put_f32(os, static_cast<float>(w));
  for (const auto &l : net.layers()) {
    io::put_f64(os, l.params().beta);
    io::put_f64(os, l.params().threshold);
  }
}

Network read_network(std::istream &is) {
  io::Reader rd(is);
  char magic[4];
  rd.bytes(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) throw io::ParseError("bad weight-file magic", 0);
  const auto version = rd.le<std::uint32_t>("version");
  if (version != kVersion)
    throw io::ParseError("unsupported weight-file version " + std::to_string(version), 4);
  const auto count = rd.le<std::uint32_t>("layer count");
  if (count < 2 || count > 64) throw io::ParseError("implausible layer count", 8);
  NetworkConfig cfg;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto n = rd.le<std::uint32_t>("layer size");
    if (n == 0 || n > (1u << 20)) throw io::ParseError("implausible layer size", rd.offset() - 4);
    cfg.layer_sizes.push_back(n);
  }
  std::vector<Matrix> weights;
  for (std::size_t i = 0; i + 1 < cfg.layer_sizes.size(); ++i) {
    Matrix w(cfg.layer_sizes[i + 1], cfg.layer_sizes[i]);
    for (auto &v : w.data()) v = rd.f32("weights");
    weights.push_back(std::move(w));
  }
  Network net;
  for (auto &w : weights) {
    LifParams p;
    p.beta = rd.f64("beta");
    p.threshold = rd.f64("threshold");
    try {
      net.layers().emplace_back(std::move(w), p);
    } catch (const ConfigError &e) {
      throw io::ParseError(e.what(), rd.offset());
    }
  }
  return net;
}

void save_network(const std::filesystem::path &path, const Network &net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_network(os, net);
}

Network load_network(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_network(is);
}

} // namespace dsnn
