#include "dsnn/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace dsnn {

std::size_t predict_class(std::span<const double> out_membrane) {
  if (out_membrane.empty()) throw std::invalid_argument("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t c = 1; c < out_membrane.size(); ++c)
    if (out_membrane[c] > out_membrane[best]) best = c;
  return best;
}

double hinge_loss(std::span<const double> out, std::size_t label) {
  if (label >= out.size()) throw std::invalid_argument("label out of range");
  double worst = 0.0;
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (c == label) continue;
    worst = std::max(worst, 1.0 - out[label] + out[c]);
  }
  return worst;
}

double exploration_probability(double epsilon, std::size_t n_classes, std::size_t predicted,
                               std::size_t c) {
  return (c == predicted ? 1.0 - epsilon : 0.0) + epsilon / static_cast<double>(n_classes);
}

Matrix banditron_delta(std::size_t n_classes, std::span<const std::uint8_t> s2,
                       std::size_t predicted, const Exploration &explored, std::size_t label) {
  if (explored.probability <= 0.0) throw std::logic_error("Banditron: zero sampling probability");
  Matrix d(n_classes, s2.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double gain =
        (label == explored.sampled && explored.sampled == c) ? 1.0 / explored.probability : 0.0;
    const double coef = gain - (predicted == c ? 1.0 : 0.0);
    for (std::size_t j = 0; j < s2.size(); ++j) d(c, j) = s2[j] ? coef : 0.0;
  }
  return d;
}

BanditronLearner::BanditronLearner(double epsilon, std::size_t n_classes, std::uint64_t seed,
                                   double learning_rate)
    : epsilon_(epsilon), n_classes_(n_classes), learning_rate_(learning_rate), rng_(seed) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (n_classes < 2) throw ConfigError("Banditron needs at least two classes");
}

Exploration BanditronLearner::explore(std::size_t predicted) {
  if (predicted >= n_classes_) throw std::invalid_argument("predicted class out of range");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t sampled = predicted;
  if (unit(rng_) < epsilon_) {
    std::uniform_int_distribution<std::size_t> pick(0, n_classes_ - 1);
    sampled = pick(rng_);
  }
  return {sampled, exploration_probability(epsilon_, n_classes_, predicted, sampled)};
}

void BanditronLearner::update(Matrix &w, std::size_t row_offset, std::span<const std::uint8_t> s2,
                              std::size_t predicted, const Exploration &explored, bool correct,
                              ResourceLedger *ledger) const {
  if (row_offset + n_classes_ > w.rows() || s2.size() != w.cols())
    throw ConfigError("Banditron update: dimension mismatch");
  if (explored.probability <= 0.0) throw std::logic_error("Banditron: zero sampling probability");
  const auto active = active_indices(s2);
  for (std::size_t c = 0; c < n_classes_; ++c) {
    const double gain = (correct && explored.sampled == c) ? 1.0 / explored.probability : 0.0;
    const double coef = learning_rate_ * (gain - (predicted == c ? 1.0 : 0.0));
    if (coef == 0.0) continue;
    auto row = w.row(row_offset + c);
    for (auto j : active) row[j] += coef;
  }
  if (ledger) {
    ledger->bwd_macs += static_cast<double>(active.size());
    ledger->bwd_mem_access += static_cast<double>(active.size());
    ++ledger->backward_calls;
  }
}

AgrelLearner::AgrelLearner(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0)) throw ConfigError("AGREL learning rate must be positive");
}

std::vector<Matrix> AgrelLearner::deltas(const Network &net, std::span<const std::uint8_t> input,
                                         const ForwardResult &fwd,
                                         std::span<const std::size_t> winners,
                                         std::span<const int> rewards,
                                         ResourceLedger *ledger) const {
  const std::size_t k = net.depth();
  if (k == 0) throw ConfigError("AGREL: empty network");
  if (input.size() != net.input_size() || fwd.hidden_spikes.size() + 1 != k)
    throw ConfigError("AGREL: forward result does not match network");
  if (winners.empty() || winners.size() != rewards.size() ||
      net.output_size() % winners.size() != 0)
    throw ConfigError("AGREL: one winner and reward per output block required");
  const std::size_t block = net.output_size() / winners.size();

  // Presynaptic activity of weight layer i.
  auto pre = [&](std::size_t i) -> std::span<const std::uint8_t> {
    return i == 0 ? input : std::span<const std::uint8_t>(fwd.hidden_spikes[i - 1]);
  };

  // Output feedback: delta = r - z_winner = r - 1 at the winning unit of each block.
  std::vector<double> fb(net.output_size(), 0.0);
  for (std::size_t b = 0; b < winners.size(); ++b) {
    if (winners[b] >= block) throw ConfigError("AGREL: winner index out of block range");
    if (rewards[b] != 0 && rewards[b] != 1) throw std::invalid_argument("AGREL: reward must be 0/1");
    fb[b * block + winners[b]] = static_cast<double>(rewards[b]) - 1.0;
  }

  std::vector<Matrix> out(k);
  for (std::size_t li = k; li-- > 0;) {
    const auto &layer = net.layer(li);
    const auto presyn = pre(li);
    const auto active = active_indices(presyn);
    Matrix d(layer.n_out(), layer.n_in());
    std::size_t fb_nonzero = 0;
    for (std::size_t r = 0; r < layer.n_out(); ++r) {
      if (fb[r] == 0.0) continue;
      ++fb_nonzero;
      const double g = alpha_ * fb[r];
      for (auto j : active) d(r, j) = g;
    }
    if (ledger) {
      const double upd = static_cast<double>(active.size()) * static_cast<double>(fb_nonzero);
      ledger->bwd_macs += upd;
      ledger->bwd_mem_access += upd;
    }
    out[li] = std::move(d);
    if (li == 0) break;

    // e = fb * W (row vector times matrix), gated by the presynaptic spikes.
    std::vector<double> next(layer.n_in(), 0.0);
    std::size_t gated = 0;
    for (std::size_t r = 0; r < layer.n_out(); ++r) {
      if (fb[r] == 0.0) continue;
      const auto w = layer.weights().row(r);
      for (std::size_t j = 0; j < layer.n_in(); ++j) next[j] += fb[r] * w[j];
    }
    for (std::size_t j = 0; j < layer.n_in(); ++j) {
      if (!presyn[j]) next[j] = 0.0;
      else if (next[j] != 0.0) ++gated;
    }
    if (ledger) {
      const double err = static_cast<double>(fb_nonzero) * static_cast<double>(layer.n_in());
      ledger->bwd_macs += err;
      ledger->bwd_mem_access += err + static_cast<double>(gated);
    }
    fb = std::move(next);
  }
  if (ledger) ++ledger->backward_calls;
  return out;
}

void AgrelLearner::update(Network &net, std::span<const std::uint8_t> input,
                          const ForwardResult &fwd, std::span<const std::size_t> winners,
                          std::span<const int> rewards, ResourceLedger *ledger) const {
  const auto d = deltas(net, input, fwd, winners, rewards, ledger);
  for (std::size_t li = 0; li < d.size(); ++li) {
    auto &w = net.layer(li).weights();
    for (std::size_t r = 0; r < w.rows(); ++r) {
      auto dst = w.row(r);
      const auto src = d[li].row(r);
      for (std::size_t j = 0; j < dst.size(); ++j)
        if (src[j] != 0.0) dst[j] += src[j];
    }
  }
}

// ---------------------------------------------------------------------------

void PretrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("pretraining needs at least one epoch");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

double surrogate_grad(Surrogate s, double x) {
  if (s == Surrogate::straight_through) return 1.0;
  // snnTorch atan with alpha = 2: d/dx [atan(pi/2 * alpha * x) / pi].
  constexpr double alpha = 2.0;
  const double z = std::numbers::pi / 2.0 * alpha * x;
  return (alpha / 2.0) / (1.0 + z * z);
}

AdamW::AdamW(double lr, double beta1, double beta2, double epsilon, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(epsilon), wd_(weight_decay) {}

void AdamW::step(std::vector<Matrix *> params, const std::vector<Matrix> &grads) {
  if (m_.empty()) {
    for (const auto *p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  ++t_;
  if (lr_ == 0.0) return;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto &w = params[p]->data();
    const auto &g = grads[p].data();
    auto &m = m_[p].data();
    auto &v = v_[p].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr_ * wd_ * w[i];
      w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

namespace {

struct Chunk {
  std::size_t begin;
  std::size_t end;
};

std::vector<Chunk> make_chunks(const TrainingStream &data, std::size_t batch) {
  std::vector<std::size_t> starts = data.sequence_starts;
  starts.push_back(data.size());
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  std::vector<Chunk> chunks;
  for (std::size_t s = 0; s + 1 < starts.size(); ++s)
    for (std::size_t b = starts[s]; b < starts[s + 1]; b += batch)
      chunks.push_back({b, std::min(b + batch, starts[s + 1])});
  return chunks;
}

// Softmax cross-entropy over one class block; writes d(loss)/d(logit) into grad.
double block_cross_entropy(std::span<const double> logits, std::size_t label,
                           std::span<double> grad) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  for (std::size_t c = 0; c < logits.size(); ++c)
    grad[c] = std::exp(logits[c] - mx) / z - (c == label ? 1.0 : 0.0);
  return -(logits[label] - mx - std::log(z));
}

} // namespace

PretrainResult pretrain(Network &net, const TrainingStream &data, const PretrainConfig &cfg,
                        const std::function<void(const EpochLog &)> &on_epoch) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("pretraining dataset is empty");
  if (data.labels.size() != data.size()) throw ConfigError("labels and inputs differ in length");
  const std::size_t k = net.depth();
  const std::size_t n_out = net.output_size();
  if (n_out % 2 != 0) throw ConfigError("output layer must hold two equal class blocks");
  const std::size_t n_classes = n_out / 2;
  for (const auto &l : data.labels)
    if (l.cls_x >= n_classes || l.cls_y >= n_classes) throw ConfigError("label out of range");

  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution keep(1.0 - cfg.dropout);
  const double keep_scale = 1.0 / (1.0 - cfg.dropout);

  AdamW opt(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon,
            cfg.weight_decay);
  std::vector<Matrix *> params;
  std::vector<Matrix> grads;
  for (auto &l : net.layers()) {
    params.push_back(&l.weights());
    grads.emplace_back(l.n_out(), l.n_in());
  }

  // Per-layer scratch: real-valued inputs, membranes, spikes, previous spikes.
  std::vector<std::vector<double>> x(k), u(k), gu(k);
  std::vector<std::vector<double>> mem(k), drop(k);
  std::vector<SpikeVector> prev(k);
  for (std::size_t i = 0; i < k; ++i) {
    x[i].resize(net.layer(i).n_in());
    u[i].resize(net.layer(i).n_out());
    gu[i].resize(net.layer(i).n_out());
    mem[i].resize(net.layer(i).n_out());
    drop[i].assign(net.layer(i).n_out(), 1.0);
    prev[i].resize(net.layer(i).n_out());
  }

  auto chunks = make_chunks(data, cfg.batch_size);
  PretrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_batches) std::shuffle(chunks.begin(), chunks.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t step_index = 0;
    for (const auto &chunk : chunks) {
      for (std::size_t i = 0; i < k; ++i) {
        std::fill(mem[i].begin(), mem[i].end(), 0.0);
        std::fill(prev[i].begin(), prev[i].end(), 0);
      }
      for (auto &g : grads) std::fill(g.data().begin(), g.data().end(), 0.0);

      for (std::size_t t = chunk.begin; t < chunk.end; ++t, ++step_index) {
        const auto &in = data.inputs[t];
        for (std::size_t j = 0; j < in.size(); ++j) x[0][j] = in[j] ? 1.0 : 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          const auto &layer = net.layer(i);
          const auto &p = layer.params();
          const auto &w = layer.weights();
          for (std::size_t r = 0; r < layer.n_out(); ++r) {
            const auto row = w.row(r);
            double drive = 0.0;
            for (std::size_t j = 0; j < layer.n_in(); ++j)
              if (x[i][j] != 0.0) drive += row[j] * x[i][j];
            double v = p.beta * mem[i][r] + drive;
            if (prev[i][r]) v -= p.threshold;
            mem[i][r] = v;
            u[i][r] = v;
            prev[i][r] = v > p.threshold ? 1 : 0;
          }
          if (i + 1 < k) {
            for (std::size_t r = 0; r < layer.n_out(); ++r) {
              if (cfg.dropout > 0.0) drop[i][r] = keep(rng) ? keep_scale : 0.0;
              x[i + 1][r] = prev[i][r] ? drop[i][r] : 0.0;
            }
          }
        }

        // Loss on the output membranes, one softmax per axis block.
        const auto &logits = u[k - 1];
        const auto &label = data.labels[t];
        double loss = 0.0;
        for (std::size_t axis = 0; axis < 2; ++axis) {
          std::span<const double> blk(logits.data() + axis * n_classes, n_classes);
          std::span<double> g(gu[k - 1].data() + axis * n_classes, n_classes);
          loss += block_cross_entropy(blk, label[axis], g);
          correct += predict_class(blk) == label[axis] ? 1 : 0;
        }
        if (!std::isfinite(loss)) throw TrainingDivergence(epoch, step_index);
        loss_sum += loss;

        // Single-step backward through W and the surrogate spike derivative.
        for (std::size_t i = k; i-- > 0;) {
          const auto &layer = net.layer(i);
          auto &g = grads[i];
          for (std::size_t r = 0; r < layer.n_out(); ++r) {
            const double gr = gu[i][r];
            if (gr == 0.0) continue;
            auto grow = g.row(r);
            for (std::size_t j = 0; j < layer.n_in(); ++j)
              if (x[i][j] != 0.0) grow[j] += gr * x[i][j];
          }
          if (i == 0) break;
          const auto &below = net.layer(i - 1);
          const double thr = below.params().threshold;
          std::fill(gu[i - 1].begin(), gu[i - 1].end(), 0.0);
          for (std::size_t r = 0; r < layer.n_out(); ++r) {
            const double gr = gu[i][r];
            if (gr == 0.0) continue;
            const auto w = layer.weights().row(r);
            for (std::size_t j = 0; j < layer.n_in(); ++j) gu[i - 1][j] += gr * w[j];
          }
          for (std::size_t j = 0; j < below.n_out(); ++j) {
            gu[i - 1][j] *= drop[i - 1][j] * surrogate_grad(cfg.surrogate, u[i - 1][j] - thr);
          }
        }
      }

      const double inv = 1.0 / static_cast<double>(chunk.end - chunk.begin);
      for (auto &g : grads)
        for (auto &v : g.data()) v *= inv;
      opt.step(params, grads);
    }
    EpochLog entry{epoch + 1, loss_sum / static_cast<double>(data.size()),
                   static_cast<double>(correct) / (2.0 * static_cast<double>(data.size()))};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.final_loss = result.log.back().loss;
  result.final_accuracy = result.log.back().accuracy;
  net.reset_states();
  return result;
}

double stream_accuracy(Network &net, const TrainingStream &data) {
  if (data.size() == 0) return 0.0;
  const std::size_t n_classes = net.output_size() / 2;
  std::vector<std::size_t> starts = data.sequence_starts;
  std::sort(starts.begin(), starts.end());
  std::size_t next = 0;
  std::size_t correct = 0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    while (next < starts.size() && starts[next] <= t) {
      if (starts[next] == t) net.reset_states();
      ++next;
    }
    const auto fwd = net.forward(data.inputs[t]);
    for (std::size_t axis = 0; axis < 2; ++axis) {
      std::span<const double> blk(fwd.out_membrane.data() + axis * n_classes, n_classes);
      correct += predict_class(blk) == data.labels[t][axis] ? 1 : 0;
    }
  }
  net.reset_states();
  return static_cast<double>(correct) / (2.0 * static_cast<double>(data.size()));
}

} // namespace dsnn
