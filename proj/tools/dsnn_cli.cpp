// Command-line driver for the decoder experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsnn/binary_io.hpp"
#include "dsnn/experiment.hpp"
#include "dsnn/metrics.hpp"
#include "dsnn/report.hpp"

namespace fs = std::filesystem;
using namespace dsnn;

namespace {

constexpr int kConfigError = 2;
constexpr int kDataError = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string learner;
  std::string perturb_kind;
  std::optional<double> perturb_ratio;
  std::optional<std::size_t> trials;
  std::string dataset;
  std::string checkpoint;
  bool run_experiments = false;
};

ExperimentConfig resolve(const Options &o, Mode mode) {
  ExperimentConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
  } else {
    const bool open = mode == Mode::pretrain || mode == Mode::open_loop || mode == Mode::synth;
    cfg = open ? ExperimentConfig::open_loop_defaults() : ExperimentConfig::closed_loop_defaults();
  }
  cfg.mode = mode;
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.out.empty()) cfg.paths.output = o.out;
  if (!o.learner.empty()) cfg.learner.kind = learner_from_string(o.learner);
  if (!o.perturb_kind.empty()) cfg.perturbation.kind = perturbation_kind_from_string(o.perturb_kind);
  if (o.perturb_ratio) cfg.perturbation.ratio = *o.perturb_ratio;
  if (o.trials) cfg.trials = *o.trials;
  if (!o.dataset.empty()) cfg.paths.dataset = o.dataset;
  if (!o.checkpoint.empty()) cfg.paths.checkpoint = o.checkpoint;
  cfg.validate();
  return cfg;
}

fs::path output_dir(const ExperimentConfig &cfg) {
  fs::path dir = cfg.paths.output;
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path &p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

nlohmann::json ledger_json(const ResourceLedger &l) {
  return {{"forward_calls", l.forward_calls}, {"fwd_macs", l.fwd_macs},
          {"fwd_acs", l.fwd_acs},             {"fwd_mem_access", l.fwd_mem_access},
          {"backward_calls", l.backward_calls}, {"bwd_macs", l.bwd_macs},
          {"bwd_mem_access", l.bwd_mem_access}};
}

SpikeDataset need_dataset(const ExperimentConfig &cfg) {
  if (cfg.paths.dataset.empty()) throw ConfigError("no dataset given (--dataset or paths.dataset)");
  return ingest_dataset(cfg.paths.dataset);
}

int cmd_synth(const ExperimentConfig &cfg) {
  const auto dir = output_dir(cfg);
  const auto ds = synth_dataset(cfg.seeds.front(), cfg.synth.n_sessions, cfg.synth.drift_strength,
                                cfg.synth, cfg.ops);
  const auto path = dir / "dataset.spkd";
  save_dataset(path, ds);
  std::cout << "wrote " << path.string() << " (" << ds.sessions.size() << " sessions, "
            << ds.total_bins() << " bins)\n";
  return 0;
}

int cmd_pretrain(const ExperimentConfig &cfg) {
  const auto dir = output_dir(cfg);
  const auto ds = need_dataset(cfg);
  const auto ck = pretrain_open_loop(ds, cfg, cfg.seeds.front());
  const auto weights = dir / "checkpoint.dsnw";
  save_checkpoint(weights, ck);
  auto log = open_out(dir / "training_log.jsonl");
  for (const auto &e : ck.training.log)
    log << nlohmann::json{{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}}.dump()
        << '\n';
  save_config(dir / "config.json", cfg);
  std::cout << "validation R2 " << ck.validation_r2 << ", wrote " << weights.string() << '\n';
  return 0;
}

int cmd_open_loop(const ExperimentConfig &cfg) {
  const auto dir = output_dir(cfg);
  const auto ds = need_dataset(cfg);
  if (cfg.paths.checkpoint.empty()) throw ConfigError("open-loop needs a checkpoint");
  const auto ck = load_checkpoint(cfg.paths.checkpoint);
  const auto res = run_open_loop(ck.net, ck.quantizers, ds, ck.train_bins, cfg.learner.kind,
                                 cfg.learner, cfg.seeds.front());
  auto os = open_out(dir / "open_loop.csv");
  os << "session,bins,r2\n";
  for (const auto &s : res.sessions) {
    os << s.session + 1 << ',' << s.bins << ',';
    if (s.r2) os << *s.r2;
    os << '\n';
    std::cout << "session " << s.session + 1 << ": ";
    if (s.r2)
      std::cout << "R2 " << *s.r2 << '\n';
    else
      std::cerr << "R2 undefined (" << s.bins << " bins), skipped\n";
  }
  auto led = open_out(dir / "ledger.json");
  led << ledger_json(res.ledger).dump(2) << '\n';
  return 0;
}

int cmd_closed_loop(const ExperimentConfig &cfg) {
  const auto dir = output_dir(cfg);
  const auto runs = run_closed_loop(cfg);
  auto trials = open_out(dir / "trials.jsonl");
  ResourceLedger total;
  for (const auto &r : runs) {
    write_trial_jsonl(trials, r);
    total += r.ledger;
    if (!cfg.log_trajectories) continue;
    const auto tdir = dir / "trajectories";
    fs::create_directories(tdir);
    for (const auto &rec : r.records) {
      auto os = open_out(tdir / ("seed" + std::to_string(r.seed) + "_trial" +
                                 std::to_string(rec.index) + ".csv"));
      write_trajectory_csv(os, rec);
    }
  }
  const auto s = summarize(runs, cfg);
  nlohmann::json summary = {{"learner", to_string(cfg.learner.kind)},
                            {"perturbation", to_string(cfg.perturbation.kind)},
                            {"ratio", cfg.perturbation.ratio},
                            {"pre_mean", s.pre_mean},
                            {"post_mean", s.post_mean},
                            {"post_adapt_mean", s.post_adapt_mean},
                            {"ledger", ledger_json(total)}};
  auto os = open_out(dir / "summary.json");
  os << summary.dump(2) << '\n';
  std::cout << "pre " << s.pre_mean << " s, post " << s.post_mean << " s, post-adaptation "
            << s.post_adapt_mean << " s\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig &cfg) {
  const auto dir = output_dir(cfg);
  const auto cells = run_sweep(cfg);
  auto os = open_out(dir / "sweep.csv");
  write_sweep_csv(os, cells);
  write_sweep_csv(std::cout, cells);
  return 0;
}

int cmd_report(ExperimentConfig cfg, bool run) {
  const auto dir = output_dir(cfg);
  std::map<std::string, MeasuredTimes> times;
  if (run) {
    const std::pair<LearnerKind, const char *> methods[] = {
        {LearnerKind::banditron, "DSNN_Banditron"},
        {LearnerKind::agrel, "DSNN_AGREL"},
        {LearnerKind::none, "DSNN"}};
    for (const auto &[kind, name] : methods) {
      cfg.learner.kind = kind;
      const auto runs = run_closed_loop(cfg);
      const auto s = summarize(runs, cfg);
      times[name] = {s.pre_mean, s.post_mean};
    }
  }
  const auto rows = cost_table(cfg, 0.6, times);
  auto os = open_out(dir / "report.csv");
  write_report_csv(os, rows);
  write_report_csv(std::cout, rows);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Spiking neural decoder with online learning"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App *sub) {
    sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "single seed, overrides the config list");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--learner", o.learner, "none, banditron or agrel");
    sub->add_option("--perturb-kind", o.perturb_kind,
                    "none, loss_of_neurons, electrode_shift or rate_drift");
    sub->add_option("--perturb-ratio", o.perturb_ratio, "fraction of perturbed neurons");
    sub->add_option("--trials", o.trials, "experiment trials per seed");
    sub->add_option("--dataset", o.dataset, "SPKD dataset");
    sub->add_option("--checkpoint", o.checkpoint, "network weights");
  };
  auto *synth = app.add_subcommand("synth", "generate a synthetic multi-session dataset");
  auto *pre = app.add_subcommand("pretrain", "train a decoder on the head of session 1");
  auto *open = app.add_subcommand("open-loop", "stream recorded sessions through a checkpoint");
  auto *closed = app.add_subcommand("closed-loop", "center-out trials with a simulated brain");
  auto *sweep = app.add_subcommand("sweep", "perturbation ratio sweep");
  auto *report = app.add_subcommand("report", "cost comparison table");
  for (auto *s : {synth, pre, open, closed, sweep, report}) common(s);
  report->add_flag("--run", o.run_experiments, "also run closed-loop trials for the time columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (synth->parsed()) return cmd_synth(resolve(o, Mode::synth));
    if (pre->parsed()) return cmd_pretrain(resolve(o, Mode::pretrain));
    if (open->parsed()) return cmd_open_loop(resolve(o, Mode::open_loop));
    if (closed->parsed()) return cmd_closed_loop(resolve(o, Mode::closed_loop));
    if (sweep->parsed()) return cmd_sweep(resolve(o, Mode::sweep));
    if (report->parsed()) return cmd_report(resolve(o, Mode::report), o.run_experiments);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const io::ParseError &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const DataValidationError &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
