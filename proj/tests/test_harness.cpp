#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "dsnn/binary_io.hpp"
#include "dsnn/config.hpp"
#include "dsnn/dataset.hpp"
#include "dsnn/experiment.hpp"

using namespace dsnn;
namespace fs = std::filesystem;

namespace {

SynthConfig small_synth() {
  SynthConfig s;
  s.n_channels = 16;
  s.n_sessions = 3;
  s.bins_per_session = 600;
  return s;
}

ExperimentConfig small_open_loop() {
  auto cfg = ExperimentConfig::open_loop_defaults();
  cfg.synth = small_synth();
  cfg.network.layer_sizes = {16, 10, 10, 8};
  cfg.pretrain.epochs = 3;
  cfg.pretrain.batch_size = 64;
  return cfg;
}

SpikeDataset small_dataset(std::uint64_t seed, double drift = 0.5) {
  const auto cfg = small_open_loop();
  return synth_dataset(seed, cfg.synth.n_sessions, drift, cfg.synth, cfg.ops);
}

ExperimentConfig small_closed_loop() {
  auto cfg = ExperimentConfig::closed_loop_defaults();
  cfg.stage1_trials = 20;
  cfg.pretrain.epochs = 2;
  cfg.stage2.trials = 2;
  cfg.trials = 6;
  cfg.perturbation = {PerturbationKind::loss_of_neurons, 0.65, 3, 0};
  cfg.seeds = {0};
  return cfg;
}

std::string jsonl(const ClosedLoopRun &run) {
  std::ostringstream os;
  write_trial_jsonl(os, run);
  return os.str();
}

fs::path scratch(const std::string &name) {
  auto p = fs::temp_directory_path() / ("dsnn_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

} // namespace

TEST_CASE("dataset container round trip") {
  const auto ds = small_dataset(3);
  std::stringstream ss;
  write_dataset(ss, ds);
  CHECK(read_dataset(ss) == ds);

  const auto path = scratch("spkd") / "d.spkd";
  save_dataset(path, ds);
  CHECK(ingest_dataset(path) == ds);
}

TEST_CASE("dataset container rejects damaged files") {
  const auto ds = small_dataset(3);
  std::stringstream ss;
  write_dataset(ss, ds);
  const auto bytes = ss.str();
  for (std::size_t cut : {std::size_t{2}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::istringstream is(bytes.substr(0, cut));
    CHECK_THROWS_AS(read_dataset(is), io::ParseError);
  }
  std::istringstream trailing(bytes + "x");
  CHECK_THROWS_AS(read_dataset(trailing), DataValidationError);

  // Declared channel count disagrees with the payload size.
  auto bad = bytes;
  bad[8] = static_cast<char>(bad[8] + 9);
  std::istringstream is(bad);
  CHECK_THROWS_AS(read_dataset(is), DataValidationError);
}

TEST_CASE("synthetic datasets") {
  CHECK(small_dataset(5) == small_dataset(5));
  CHECK_FALSE(small_dataset(5) == small_dataset(6));

  SUBCASE("no drift keeps session statistics") {
    const auto ds = small_dataset(1, 0.0);
    std::vector<double> rate;
    for (const auto &s : ds.sessions) {
      double n = 0;
      for (const auto &b : s.bins) n += static_cast<double>(count_active(b));
      rate.push_back(n / static_cast<double>(s.size() * ds.n_channels));
    }
    for (double r : rate) CHECK(r == doctest::Approx(rate[0]).epsilon(0.1));
  }
  CHECK_THROWS_AS(small_dataset(1, 1.0), std::invalid_argument);
}

TEST_CASE("configuration round trip and reference configs") {
  auto cfg = ExperimentConfig::closed_loop_defaults();
  cfg.seeds = {4, 9};
  cfg.learner.kind = LearnerKind::agrel;
  cfg.perturbation.ratio = 0.3;
  const auto back = from_json(to_json(cfg), ExperimentConfig{});
  CHECK(to_json(back) == to_json(cfg));

  const fs::path dir = fs::path(DSNN_SOURCE_DIR) / "configs";
  CHECK(to_json(load_config(dir / "closed_loop.json")) ==
        to_json(ExperimentConfig::closed_loop_defaults()));
  auto sweep = ExperimentConfig::closed_loop_defaults();
  sweep.mode = Mode::sweep;
  CHECK(to_json(load_config(dir / "sweep.json")) == to_json(sweep));
  CHECK(to_json(load_config(dir / "open_loop.json")) ==
        to_json(ExperimentConfig::open_loop_defaults()));

  auto broken = to_json(cfg);
  broken["learner"]["epsilon"] = 2.0;
  CHECK_THROWS_AS(from_json(broken, ExperimentConfig{}).validate(), ConfigError);
}

TEST_CASE("open-loop streaming") {
  const auto ds = small_dataset(2);
  const auto cfg = small_open_loop();
  const auto ck = pretrain_open_loop(ds, cfg, 0);

  SUBCASE("fixed decoder reproduces the checkpoint validation figure") {
    const auto r = run_open_loop(ck.net, ck.quantizers, ds, ck.train_bins, LearnerKind::none,
                                 cfg.learner, 0);
    REQUIRE(r.sessions[0].r2.has_value());
    CHECK(std::abs(*r.sessions[0].r2 - ck.validation_r2) <= 1e-6);
    CHECK(r.ledger.bwd_macs == 0.0);
    CHECK(r.ledger.bwd_mem_access == 0.0);
    CHECK(r.ledger.forward_calls == ds.total_bins() - ck.train_bins);
  }
  SUBCASE("checkpoint files round trip") {
    const auto path = scratch("ck") / "w.dsnw";
    save_checkpoint(path, ck);
    const auto back = load_checkpoint(path);
    CHECK(back.validation_r2 == ck.validation_r2);
    CHECK(back.train_bins == ck.train_bins);
    CHECK(back.net.weight_checksum(0, back.net.depth()) == ck.net.weight_checksum(0, ck.net.depth()));
    for (std::size_t a = 0; a < 2; ++a) CHECK(back.quantizers[a].edges() == ck.quantizers[a].edges());
  }
  SUBCASE("removing future bins leaves earlier results unchanged") {
    for (auto learner : {LearnerKind::none, LearnerKind::banditron, LearnerKind::agrel}) {
      const auto full = run_open_loop(ck.net, ck.quantizers, ds, ck.train_bins, learner, cfg.learner, 1);
      auto cut = ds;
      cut.sessions.back().bins.resize(100);
      cut.sessions.back().velocity.resize(100);
      const auto part = run_open_loop(ck.net, ck.quantizers, cut, ck.train_bins, learner, cfg.learner, 1);
      for (std::size_t s = 0; s + 1 < ds.sessions.size(); ++s)
        CHECK(part.sessions[s].r2 == full.sessions[s].r2);
    }
  }
  SUBCASE("single-bin session has no R squared") {
    auto tiny = ds;
    tiny.sessions.back().bins.resize(1);
    tiny.sessions.back().velocity.resize(1);
    const auto r = run_open_loop(ck.net, ck.quantizers, tiny, ck.train_bins, LearnerKind::banditron,
                                 cfg.learner, 0);
    CHECK_FALSE(r.sessions.back().r2.has_value());
    CHECK(r.sessions.back().bins == 1);
  }
  SUBCASE("channel mismatch is a configuration error") {
    auto other = small_dataset(2);
    other.n_channels = 12;
    for (auto &s : other.sessions)
      for (auto &b : s.bins) b.resize(12);
    CHECK_THROWS_AS(run_open_loop(ck.net, ck.quantizers, other, 0, LearnerKind::none, cfg.learner, 0),
                    ConfigError);
  }
}

TEST_CASE("closed-loop runs") {
  const auto cfg = small_closed_loop();
  const auto ctx = prepare_seed(cfg, 0);

  SUBCASE("trial logs are byte-identical per seed") {
    for (auto learner : {LearnerKind::none, LearnerKind::banditron, LearnerKind::agrel}) {
      const auto a = run_closed_loop_seed(ctx, cfg, learner, cfg.perturbation);
      const auto b = run_closed_loop_seed(prepare_seed(cfg, 0), cfg, learner, cfg.perturbation);
      CHECK(jsonl(a) == jsonl(b));
      CHECK(a.records.size() == cfg.trials);
    }
  }
  SUBCASE("fixed decoder never updates") {
    const auto run = run_closed_loop_seed(ctx, cfg, LearnerKind::none, cfg.perturbation);
    CHECK(run.ledger.bwd_macs == 0.0);
    CHECK(run.ledger.backward_calls == 0);
    CHECK(run.ledger.forward_calls > 0);
  }
  SUBCASE("perturbation starts exactly at the onset trial") {
    auto keep = cfg;
    keep.log_trajectories = true;
    const auto none = run_closed_loop_seed(ctx, keep, LearnerKind::none, PerturbationSpec{});
    const auto hit = run_closed_loop_seed(ctx, keep, LearnerKind::none, keep.perturbation);
    const std::size_t onset = keep.perturbation.onset_trial;
    for (std::size_t t = 0; t < onset; ++t) {
      CHECK_FALSE(hit.records[t].perturbed);
      CHECK(hit.records[t].trajectory == none.records[t].trajectory);
    }
    CHECK(hit.records[onset].perturbed);
    CHECK_FALSE(hit.records[onset].trajectory == none.records[onset].trajectory);
    CHECK(hit.perturbed_neurons.size() == perturbed_count(keep.perturbation, cfg.ops.n_neurons));
  }
}

TEST_CASE("stage-2 adaptation identities") {
  const auto cfg = small_closed_loop();
  auto ctx = prepare_seed(cfg, 1);
  const auto q = closed_loop_quantizer(cfg);

  SUBCASE("zero trials leave the network unchanged") {
    Network net = ctx.net;
    OpsBrain brain = ctx.brain;
    OnlineLearner learner(LearnerKind::agrel, cfg.learner, cfg.n_bins, 1);
    CenterOutEnv env(cfg.env, q, q);
    std::mt19937_64 rng(1);
    Stage2Config none = cfg.stage2;
    none.trials = 0;
    CHECK(closed_loop_stage2(brain, net, learner, env, none, rng).empty());
    CHECK(net.weight_checksum(0, net.depth()) == ctx.net.weight_checksum(0, ctx.net.depth()));
  }
  SUBCASE("disabled learning equals plain evaluation") {
    Network a = ctx.net, b = ctx.net;
    OpsBrain brain_a = ctx.brain, brain_b = ctx.brain;
    OnlineLearner off(LearnerKind::banditron, cfg.learner, cfg.n_bins, 2);
    off.set_enabled(false);
    OnlineLearner plain(LearnerKind::none, cfg.learner, cfg.n_bins, 2);
    CenterOutEnv env_a(cfg.env, q, q), env_b(cfg.env, q, q);
    std::mt19937_64 ra(5), rb(5);
    const auto with = closed_loop_stage2(brain_a, a, off, env_a, cfg.stage2, ra);
    Stage2Config s = cfg.stage2;
    const auto without = closed_loop_stage2(brain_b, b, plain, env_b, s, rb);
    REQUIRE(with.size() == without.size());
    for (std::size_t i = 0; i < with.size(); ++i) {
      CHECK(with[i].time_to_target == without[i].time_to_target);
      CHECK(with[i].duration == without[i].duration);
    }
    CHECK(a.weight_checksum(0, a.depth()) == b.weight_checksum(0, b.depth()));
  }
  SUBCASE("stage 2 does not make reaching slower") {
    auto eval = [&](Network net) {
      OpsBrain brain = ctx.brain;
      OnlineLearner plain(LearnerKind::none, cfg.learner, cfg.n_bins, 0);
      CenterOutEnv env(cfg.env, q, q);
      std::mt19937_64 rng(77);
      double sum = 0.0;
      const int n = 10;
      for (int i = 0; i < n; ++i) {
        TrialContext tc{brain, net, plain, env};
        const auto r = run_trial(tc, rng);
        sum += r.success ? *r.time_to_target : cfg.env.max_duration;
      }
      return sum / n;
    };
    Network adapted = ctx.net;
    OpsBrain brain = ctx.brain;
    OnlineLearner learner(LearnerKind::banditron, cfg.learner, cfg.n_bins, 3);
    CenterOutEnv env(cfg.env, q, q);
    std::mt19937_64 rng(9);
    Stage2Config s = cfg.stage2;
    s.trials = 10;
    closed_loop_stage2(brain, adapted, learner, env, s, rng);
    CHECK(eval(adapted) <= 1.1 * eval(ctx.net));
  }
}

TEST_CASE("sweep output shape") {
  auto cfg = small_closed_loop();
  cfg.trials = 4;
  cfg.perturbation.onset_trial = 2;
  cfg.sweep.ratios = {0.0, 0.6};
  cfg.sweep.kinds = {PerturbationKind::loss_of_neurons, PerturbationKind::rate_drift};
  cfg.adapt_window = 2;
  const auto cells = run_sweep(cfg);
  REQUIRE(cells.size() == 2 * 2 * 3);
  std::size_t i = 0;
  for (auto kind : cfg.sweep.kinds)
    for (double ratio : cfg.sweep.ratios)
      for (auto learner : cfg.sweep.learners) {
        CHECK(cells[i].kind == kind);
        CHECK(cells[i].ratio == ratio);
        CHECK(cells[i].learner == learner);
        ++i;
      }
  std::ostringstream os;
  write_sweep_csv(os, cells);
  const auto text = os.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);
}

TEST_CASE("command-line exit codes") {
  const std::string cli = DSNN_CLI_PATH;
  const auto dir = scratch("cli");
  auto run = [&](const std::string &args) {
    const int status = std::system((cli + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  CHECK(run("--help") == 0);
  CHECK(run("no-such-command") == 2);
  CHECK(run("closed-loop --learner sideways --out " + dir.string()) == 2);

  std::ofstream(dir / "bad.json") << "{\"learner\": {\"epsilon\": 3}}";
  CHECK(run("closed-loop --config " + (dir / "bad.json").string() + " --out " + dir.string()) == 2);

  std::ofstream(dir / "junk.spkd") << "SPKD";
  CHECK(run("open-loop --dataset " + (dir / "junk.spkd").string() + " --checkpoint x --out " +
            dir.string()) == 3);

  auto cfg = small_open_loop();
  cfg.mode = Mode::synth;
  save_config(dir / "synth.json", cfg);
  CHECK(run("synth --config " + (dir / "synth.json").string() + " --seed 4 --out " + dir.string()) == 0);
  CHECK(ingest_dataset(dir / "dataset.spkd") ==
        synth_dataset(4, cfg.synth.n_sessions, cfg.synth.drift_strength, cfg.synth, cfg.ops));
}
