#include "dsnn/experiment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "dsnn/metrics.hpp"

namespace dsnn {

using nlohmann::json;

namespace {

// Independent streams derived from one experiment seed.
std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

enum Salt : std::uint64_t {
  kStage1Targets = 1,
  kStage2Targets,
  kTrialTargets,
  kLearner,
  kPerturb,
  kPretrain,
  kWeights,
};

ClassLabelPair greedy_classes(const ForwardResult &fwd, std::size_t n_classes) {
  const std::span<const double> m(fwd.out_membrane);
  return {predict_class(m.subspan(0, n_classes)), predict_class(m.subspan(n_classes, n_classes))};
}

} // namespace

// ---------------------------------------------------------------------------
// Open loop

TrainingStream training_stream(const Session &s, std::size_t n_bins,
                               const std::array<AxisQuantizer, 2> &q) {
  TrainingStream ts;
  for (std::size_t t = 0; t < n_bins && t < s.size(); ++t) {
    ts.inputs.push_back(s.bins[t]);
    ts.labels.push_back({q[0].quantize(s.velocity[t][0]), q[1].quantize(s.velocity[t][1])});
  }
  return ts;
}

Checkpoint pretrain_open_loop(const SpikeDataset &ds, const ExperimentConfig &cfg,
                              std::uint64_t seed) {
  if (ds.sessions.empty() || ds.sessions.front().size() < 2)
    throw DataValidationError("pretraining needs a nonempty first session");
  if (ds.n_channels != cfg.network.layer_sizes.front())
    throw ConfigError("dataset has " + std::to_string(ds.n_channels) +
                      " channels but the network expects " +
                      std::to_string(cfg.network.layer_sizes.front()));
  const auto &s0 = ds.sessions.front();
  Checkpoint ck;
  ck.train_bins = static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(s0.size())));
  std::array<std::vector<double>, 2> vel;
  for (std::size_t t = 0; t < ck.train_bins; ++t)
    for (std::size_t a = 0; a < 2; ++a) vel[a].push_back(s0.velocity[t][a]);
  for (std::size_t a = 0; a < 2; ++a) ck.quantizers[a] = fit_quantizer(vel[a], cfg.n_bins).quantizer;

  const auto stream = training_stream(s0, ck.train_bins, ck.quantizers);
  ck.net = Network(cfg.network);
  ck.net.init_weights(derive(seed, kWeights));
  auto pc = cfg.pretrain;
  pc.dropout = cfg.network.dropout;
  pc.seed = derive(seed, kPretrain);
  ck.training = pretrain(ck.net, stream, pc);
  ck.net.round_to_float32();

  SpikeDataset first;
  first.n_channels = ds.n_channels;
  first.bin_width_us = ds.bin_width_us;
  first.sessions = {s0};
  const auto val = run_open_loop(ck.net, ck.quantizers, first, ck.train_bins, LearnerKind::none,
                                 cfg.learner, seed);
  ck.validation_r2 = val.sessions.front().r2.value_or(std::nan(""));
  return ck;
}

void save_checkpoint(const std::filesystem::path &weights, const Checkpoint &ck) {
  save_network(weights, ck.net);
  json meta = {
      {"quantizers", {ck.quantizers[0].edges(), ck.quantizers[1].edges()}},
      {"validation_r2", ck.validation_r2},
      {"train_bins", ck.train_bins},
      {"final_loss", ck.training.final_loss},
      {"final_accuracy", ck.training.final_accuracy},
  };
  std::ofstream os(weights.string() + ".json");
  if (!os) throw std::runtime_error("cannot write checkpoint metadata");
  os << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path &weights) {
  Checkpoint ck;
  ck.net = load_network(weights);
  std::ifstream is(weights.string() + ".json");
  if (!is) throw ConfigError("missing checkpoint metadata " + weights.string() + ".json");
  try {
    const auto meta = json::parse(is);
    for (std::size_t a = 0; a < 2; ++a)
      ck.quantizers[a] =
          AxisQuantizer::from_edges(meta.at("quantizers").at(a).get<std::vector<double>>());
    ck.validation_r2 = meta.at("validation_r2").get<double>();
    ck.train_bins = meta.at("train_bins").get<std::size_t>();
    ck.training.final_loss = meta.value("final_loss", 0.0);
    ck.training.final_accuracy = meta.value("final_accuracy", 0.0);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("checkpoint metadata: ") + e.what());
  }
  return ck;
}

OpenLoopResult run_open_loop(Network net, const std::array<AxisQuantizer, 2> &q,
                             const SpikeDataset &ds, std::size_t first_session_start,
                             LearnerKind learner, const LearnerConfig &lcfg, std::uint64_t seed) {
  if (ds.n_channels != net.input_size())
    throw ConfigError("dataset has " + std::to_string(ds.n_channels) +
                      " channels but the checkpoint expects " + std::to_string(net.input_size()));
  const std::size_t n_classes = q[0].n_bins();
  if (net.output_size() != 2 * n_classes) throw ConfigError("quantizers do not match output layer");
  LearnerConfig streaming = lcfg;
  streaming.epsilon = lcfg.open_loop_epsilon;
  OnlineLearner online(learner, streaming, n_classes, derive(seed, kLearner));
  online.set_rate(learner == LearnerKind::agrel ? lcfg.open_loop_agrel_alpha
                                                : lcfg.open_loop_banditron_rate);
  OpenLoopResult result;
  for (std::size_t s = 0; s < ds.sessions.size(); ++s) {
    const auto &sess = ds.sessions[s];
    const std::size_t start = s == 0 ? std::min(first_session_start, sess.size()) : 0;
    net.reset_states();
    std::array<std::vector<double>, 2> pred, actual;
    for (std::size_t t = start; t < sess.size(); ++t) {
      const auto &x = sess.bins[t];
      const auto fwd = net.forward(x, &result.ledger);
      const auto greedy = greedy_classes(fwd, n_classes);
      for (std::size_t a = 0; a < 2; ++a) {
        pred[a].push_back(q[a].reconstruct(greedy[a]));
        actual[a].push_back(sess.velocity[t][a]);
      }
      if (learner == LearnerKind::none) continue;
      const auto played = online.act(greedy);
      const ClassLabelPair label{q[0].quantize(sess.velocity[t][0]),
                                 q[1].quantize(sess.velocity[t][1])};
      const std::array<int, 2> reward{played.cls_x == label.cls_x ? 1 : 0,
                                      played.cls_y == label.cls_y ? 1 : 0};
      online.learn(net, x, fwd, greedy, played, reward, &result.ledger);
    }
    SessionResult sr;
    sr.session = s;
    sr.bins = pred[0].size();
    if (sr.bins >= 2) {
      try {
        sr.r2 = r_squared_2d(pred[0], actual[0], pred[1], actual[1]);
      } catch (const std::domain_error &) {
      }
    }
    result.sessions.push_back(sr);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Closed loop

AxisQuantizer closed_loop_quantizer(const ExperimentConfig &cfg) {
  return AxisQuantizer(cfg.n_bins, -cfg.env.v_max, cfg.env.v_max);
}

TrainingStream simulate_reaches(OpsBrain &brain, const ExperimentConfig &cfg, std::size_t trials,
                                std::mt19937_64 &target_rng) {
  const auto q = closed_loop_quantizer(cfg);
  CenterOutEnv env(cfg.env, q, q);
  TrainingStream ts;
  ts.sequence_starts.clear();
  for (std::size_t i = 0; i < trials; ++i) {
    env.new_trial(target_rng);
    ts.sequence_starts.push_back(ts.size());
    while (env.status() == TrialStatus::ongoing) {
      const Vec2 intent = env.intended_direction();
      ts.inputs.push_back(brain.generate(intent));
      const auto label = env.intended_label();
      ts.labels.push_back(label);
      env.step({q.reconstruct(label.cls_x), q.reconstruct(label.cls_y)}, label);
    }
  }
  return ts;
}

SeedContext prepare_seed(const ExperimentConfig &cfg, std::uint64_t seed, const Network *pretrained) {
  SeedContext ctx{seed, OpsBrain(cfg.ops, seed), Network(cfg.network), {}};
  if (pretrained) {
    if (pretrained->layer_sizes() != cfg.network.layer_sizes)
      throw ConfigError("checkpoint layer sizes do not match the configured network");
    ctx.net = *pretrained;
    return ctx;
  }
  std::mt19937_64 targets(derive(seed, kStage1Targets));
  const auto stream = simulate_reaches(ctx.brain, cfg, cfg.stage1_trials, targets);
  ctx.net.init_weights(derive(seed, kWeights));
  auto pc = cfg.pretrain;
  pc.dropout = cfg.network.dropout;
  pc.seed = derive(seed, kPretrain);
  ctx.stage1 = pretrain(ctx.net, stream, pc);
  return ctx;
}

OnlineLearner::OnlineLearner(LearnerKind kind, const LearnerConfig &cfg, std::size_t n_classes,
                             std::uint64_t seed)
    : kind_(kind), n_classes_(n_classes) {
  if (kind == LearnerKind::banditron) {
    bandit_.emplace(cfg.epsilon, n_classes, seed, cfg.banditron_rate);
    rate_ = cfg.banditron_rate;
  } else if (kind == LearnerKind::agrel) {
    agrel_.emplace(cfg.agrel_alpha);
    rate_ = cfg.agrel_alpha;
  }
}

void OnlineLearner::set_rate(double rate) {
  rate_ = rate;
  if (bandit_) bandit_->set_learning_rate(rate);
  if (agrel_ && rate > 0.0) agrel_->set_alpha(rate);
}

ClassLabelPair OnlineLearner::act(const ClassLabelPair &greedy) {
  if (!bandit_ || !enabled_) return greedy;
  for (std::size_t a = 0; a < 2; ++a) explored_[a] = bandit_->explore(greedy[a]);
  return {explored_[0].sampled, explored_[1].sampled};
}

void OnlineLearner::learn(Network &net, std::span<const std::uint8_t> input,
                          const ForwardResult &fwd, const ClassLabelPair &greedy,
                          const ClassLabelPair &played, const std::array<int, 2> &reward,
                          ResourceLedger *ledger) {
  if (!enabled_ || rate_ == 0.0) return;
  if (bandit_) {
    const auto &s2 = fwd.hidden_spikes.empty() ? SpikeVector(input.begin(), input.end())
                                               : fwd.hidden_spikes.back();
    auto &w = net.layers().back().weights();
    for (std::size_t a = 0; a < 2; ++a)
      bandit_->update(w, a * n_classes_, s2, greedy[a], explored_[a], reward[a] != 0, ledger);
  } else if (agrel_) {
    const std::array<std::size_t, 2> winners{played.cls_x, played.cls_y};
    agrel_->update(net, input, fwd, winners, reward, ledger);
  }
}

TrialRecord run_trial(TrialContext &ctx, std::mt19937_64 &target_rng) {
  TrialRecord rec;
  ctx.env.new_trial(target_rng);
  ctx.net.reset_states();
  const std::size_t n_classes = ctx.net.output_size() / 2;
  const auto &qx = ctx.env.quantizer(0);
  const auto &qy = ctx.env.quantizer(1);
  while (ctx.env.status() == TrialStatus::ongoing) {
    const Vec2 intent = ctx.env.intended_direction();
    const auto spikes = ctx.brain.generate(intent);
    const auto fwd = ctx.net.forward(spikes, ctx.ledger);
    const auto greedy = greedy_classes(fwd, n_classes);
    const auto played = ctx.learner.act(greedy);
    const Vec2 vel{qx.reconstruct(played.cls_x), qy.reconstruct(played.cls_y)};
    const auto fb = ctx.env.step(vel, played);
    ctx.learner.learn(ctx.net, spikes, fwd, greedy, played, fb.reward, ctx.ledger);
    if (ctx.keep_trajectory)
      rec.trajectory.push_back({ctx.env.elapsed(), ctx.env.cursor(), vel, played, fb.reward});
  }
  rec.success = ctx.env.status() == TrialStatus::success;
  rec.time_to_target = ctx.env.time_to_target();
  rec.duration = ctx.env.elapsed();
  return rec;
}

std::vector<TrialRecord> closed_loop_stage2(OpsBrain &brain, Network &net, OnlineLearner &learner,
                                            CenterOutEnv &env, const Stage2Config &schedule,
                                            std::mt19937_64 &target_rng) {
  std::vector<TrialRecord> out;
  TrialContext ctx{brain, net, learner, env};
  for (std::size_t i = 0; i < schedule.trials; ++i) {
    const double frac =
        schedule.trials > 1 ? static_cast<double>(i) / static_cast<double>(schedule.trials - 1) : 0.0;
    learner.set_rate(schedule.lr_start * std::pow(schedule.lr_end / schedule.lr_start, frac));
    auto rec = run_trial(ctx, target_rng);
    rec.index = i;
    out.push_back(std::move(rec));
  }
  return out;
}

ClosedLoopRun run_closed_loop_seed(const SeedContext &sc, const ExperimentConfig &cfg,
                                   LearnerKind learner, const PerturbationSpec &perturbation) {
  ClosedLoopRun run;
  run.seed = sc.seed;
  run.learner = learner;
  run.perturbation = perturbation;
  run.perturbation.seed = derive(sc.seed, kPerturb);
  run.ledger.footprint_bits = 0;

  OpsBrain brain = sc.brain;
  Network net = sc.net;
  const auto q = closed_loop_quantizer(cfg);
  CenterOutEnv env(cfg.env, q, q);
  OnlineLearner online(learner, cfg.learner, cfg.n_bins, derive(sc.seed, kLearner));

  std::mt19937_64 stage2_targets(derive(sc.seed, kStage2Targets));
  closed_loop_stage2(brain, net, online, env, cfg.stage2, stage2_targets);

  online.set_rate(learner == LearnerKind::agrel ? cfg.learner.agrel_alpha : cfg.learner.banditron_rate);
  std::mt19937_64 targets(derive(sc.seed, kTrialTargets));
  TrialContext ctx{brain, net, online, env, &run.ledger, cfg.log_trajectories};
  const bool perturbs = perturbation.kind != PerturbationKind::none && perturbation.ratio > 0.0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    if (perturbs && t == perturbation.onset_trial)
      run.perturbed_neurons = apply_perturbation(brain, run.perturbation);
    auto rec = run_trial(ctx, targets);
    rec.seed = sc.seed;
    rec.index = t;
    rec.perturbed = perturbs && t >= perturbation.onset_trial;
    run.records.push_back(std::move(rec));
  }
  return run;
}

std::vector<ClosedLoopRun> run_closed_loop(const ExperimentConfig &cfg) {
  cfg.validate();
  std::optional<Network> pretrained;
  if (!cfg.paths.checkpoint.empty()) pretrained = load_network(cfg.paths.checkpoint);
  std::vector<ClosedLoopRun> runs(cfg.seeds.size());
  const auto n = static_cast<std::ptrdiff_t>(cfg.seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ctx = prepare_seed(cfg, cfg.seeds[i], pretrained ? &*pretrained : nullptr);
    runs[i] = run_closed_loop_seed(ctx, cfg, cfg.learner.kind, cfg.perturbation);
  }
  return runs;
}

RunSummary summarize(std::span<const ClosedLoopRun> runs, const ExperimentConfig &cfg) {
  std::vector<TrialRecord> all;
  for (const auto &r : runs) all.insert(all.end(), r.records.begin(), r.records.end());
  const std::size_t onset = std::min(cfg.perturbation.onset_trial, cfg.trials);
  RunSummary s;
  const double fail = cfg.env.max_duration;
  if (onset > 0) s.pre_mean = aggregate_time_to_target(all, {0, onset}, fail);
  if (onset < cfg.trials) s.post_mean = aggregate_time_to_target(all, {onset, cfg.trials}, fail);
  s.post_adapt_mean =
      aggregate_time_to_target(all, {cfg.trials - cfg.adapt_window, cfg.trials}, fail);
  return s;
}

std::vector<SweepCell> run_sweep(const ExperimentConfig &cfg) {
  cfg.validate();
  const auto &sw = cfg.sweep;
  const std::size_t cells = sw.kinds.size() * sw.ratios.size() * sw.learners.size();
  // runs[cell][seed]
  std::vector<std::vector<ClosedLoopRun>> runs(cells, std::vector<ClosedLoopRun>(cfg.seeds.size()));
  const auto n = static_cast<std::ptrdiff_t>(cfg.seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t si = 0; si < n; ++si) {
    const auto ctx = prepare_seed(cfg, cfg.seeds[si]);
    // An unperturbed run is identical for every kind; compute it once per learner.
    std::map<LearnerKind, ClosedLoopRun> unperturbed;
    std::size_t cell = 0;
    for (auto kind : sw.kinds)
      for (double ratio : sw.ratios)
        for (auto learner : sw.learners) {
          PerturbationSpec spec = cfg.perturbation;
          spec.kind = kind;
          spec.ratio = ratio;
          if (ratio == 0.0) {
            auto it = unperturbed.find(learner);
            if (it == unperturbed.end())
              it = unperturbed.emplace(learner, run_closed_loop_seed(ctx, cfg, learner, spec)).first;
            runs[cell][si] = it->second;
            runs[cell][si].perturbation.kind = kind;
          } else {
            runs[cell][si] = run_closed_loop_seed(ctx, cfg, learner, spec);
          }
          ++cell;
        }
  }
  std::vector<SweepCell> out;
  std::size_t cell = 0;
  for (auto kind : sw.kinds)
    for (double ratio : sw.ratios)
      for (auto learner : sw.learners) {
        out.push_back({kind, ratio, learner, summarize(runs[cell], cfg)});
        ++cell;
      }
  return out;
}

// ---------------------------------------------------------------------------

void write_trial_jsonl(std::ostream &os, const ClosedLoopRun &run) {
  for (const auto &r : run.records) {
    json j = {
        {"seed", r.seed},
        {"trial", r.index},
        {"learner", to_string(run.learner)},
        {"perturbation", to_string(run.perturbation.kind)},
        {"ratio", run.perturbation.ratio},
        {"onset_trial", run.perturbation.onset_trial},
        {"perturbed", r.perturbed},
        {"time_to_target", r.time_to_target ? json(*r.time_to_target) : json(nullptr)},
        {"success", r.success},
        {"duration", r.duration},
    };
    os << j.dump() << '\n';
  }
}

void write_trajectory_csv(std::ostream &os, const TrialRecord &rec) {
  os << "t,x,y,vx,vy,reward_x,reward_y\n";
  for (const auto &p : rec.trajectory)
    os << p.t << ',' << p.pos.x << ',' << p.pos.y << ',' << p.vel.x << ',' << p.vel.y << ','
       << p.reward[0] << ',' << p.reward[1] << '\n';
}

void write_sweep_csv(std::ostream &os, std::span<const SweepCell> cells) {
  os << "kind,ratio,learner,pre_mean,post_mean,post_adapt_mean\n";
  for (const auto &c : cells)
    os << to_string(c.kind) << ',' << c.ratio << ',' << to_string(c.learner) << ','
       << c.summary.pre_mean << ',' << c.summary.post_mean << ',' << c.summary.post_adapt_mean
       << '\n';
}

} // namespace dsnn
