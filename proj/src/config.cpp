#include "dsnn/config.hpp"

#include <fstream>

namespace dsnn {

using nlohmann::json;

std::string to_string(Mode m) {
  switch (m) {
  case Mode::pretrain: return "pretrain";
  case Mode::open_loop: return "open_loop";
  case Mode::closed_loop: return "closed_loop";
  case Mode::sweep: return "sweep";
  case Mode::synth: return "synth";
  case Mode::report: return "report";
  }
  return "closed_loop";
}

std::string to_string(LearnerKind k) {
  switch (k) {
  case LearnerKind::none: return "none";
  case LearnerKind::banditron: return "banditron";
  case LearnerKind::agrel: return "agrel";
  }
  return "none";
}

Mode mode_from_string(const std::string &s) {
  for (auto m : {Mode::pretrain, Mode::open_loop, Mode::closed_loop, Mode::sweep, Mode::synth,
                 Mode::report})
    if (to_string(m) == s) return m;
  if (s == "open-loop") return Mode::open_loop;
  if (s == "closed-loop") return Mode::closed_loop;
  throw ConfigError("unknown mode '" + s + "'");
}

LearnerKind learner_from_string(const std::string &s) {
  for (auto k : {LearnerKind::none, LearnerKind::banditron, LearnerKind::agrel})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown learner '" + s + "'");
}

ExperimentConfig ExperimentConfig::closed_loop_defaults() {
  ExperimentConfig c;
  c.mode = Mode::closed_loop;
  c.network = NetworkConfig::closed_loop_default();
  c.pretrain.epochs = 5;
  c.pretrain.learning_rate = 0.005;
  c.pretrain.batch_size = 512;
  c.pretrain.dropout = c.network.dropout;
  c.perturbation.kind = PerturbationKind::loss_of_neurons;
  c.perturbation.ratio = 30.0 / 46.0;
  c.perturbation.onset_trial = 50;
  return c;
}

ExperimentConfig ExperimentConfig::open_loop_defaults() {
  ExperimentConfig c;
  c.mode = Mode::open_loop;
  c.network = NetworkConfig::open_loop_default();
  c.pretrain.epochs = 50;
  c.pretrain.learning_rate = 0.01;
  c.pretrain.batch_size = 512;
  c.pretrain.dropout = c.network.dropout;
  c.ops.n_neurons = c.synth.n_channels;
  c.ops.bin_seconds = c.synth.bin_width;
  c.perturbation.kind = PerturbationKind::none;
  c.perturbation.ratio = 0.0;
  c.seeds = {0};
  return c;
}

void ExperimentConfig::validate() const {
  if (version != 1) throw ConfigError("unsupported config version " + std::to_string(version));
  network.validate();
  pretrain.validate();
  ops.validate();
  env.validate();
  if (n_bins < 2) throw ConfigError("need at least two classes per axis");
  if (network.layer_sizes.back() != 2 * n_bins)
    throw ConfigError("output layer must hold n_bins units per axis");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");
  if (!(learner.epsilon >= 0.0 && learner.epsilon <= 1.0))
    throw ConfigError("epsilon must lie in [0, 1]");
  if (!(learner.open_loop_epsilon >= 0.0 && learner.open_loop_epsilon <= 1.0))
    throw ConfigError("open_loop_epsilon must lie in [0, 1]");
  if ((mode == Mode::closed_loop || mode == Mode::sweep) && seeds.empty())
    throw ConfigError("closed-loop runs need at least one seed");
  if (mode == Mode::closed_loop || mode == Mode::sweep) {
    if (network.layer_sizes.front() != ops.n_neurons)
      throw ConfigError("network input size must equal the number of simulated neurons");
    if (std::abs(env.dt - network.bin_window) > 1e-12 ||
        std::abs(ops.bin_seconds - network.bin_window) > 1e-12)
      throw ConfigError("env dt, OPS bin and network bin window must agree");
  }
  if (!(perturbation.ratio >= 0.0 && perturbation.ratio < 1.0))
    throw ConfigError("perturbation ratio must lie in [0, 1)");
  for (double r : sweep.ratios)
    if (!(r >= 0.0 && r <= 0.9)) throw ConfigError("sweep ratios must lie in [0, 0.9]");
  if (synth.n_sessions < 1) throw ConfigError("need at least one synthetic session");
  if (adapt_window == 0 || adapt_window > trials)
    throw ConfigError("adapt_window must lie in [1, trials]");
}

namespace {

template <typename T> void get_to(const json &j, const char *key, T &dst) {
  if (j.contains(key)) j.at(key).get_to(dst);
}

json lif_json(const NetworkConfig &n) {
  const auto p = n.lif_for(0);
  return {{"beta", p.beta}, {"threshold", p.threshold}};
}

} // namespace

json to_json(const ExperimentConfig &c) {
  json kinds = json::array();
  for (auto k : c.sweep.kinds) kinds.push_back(to_string(k));
  json learners = json::array();
  for (auto k : c.sweep.learners) learners.push_back(to_string(k));
  return {
      {"version", c.version},
      {"mode", to_string(c.mode)},
      {"network",
       {{"layer_sizes", c.network.layer_sizes},
        {"lif", lif_json(c.network)},
        {"dropout", c.network.dropout},
        {"bin_window", c.network.bin_window},
        {"stride", c.network.stride}}},
      {"codec", {{"n_bins", c.n_bins}}},
      {"pretrain",
       {{"epochs", c.pretrain.epochs},
        {"learning_rate", c.pretrain.learning_rate},
        {"batch_size", c.pretrain.batch_size},
        {"surrogate", c.pretrain.surrogate == Surrogate::arctan ? "arctan" : "straight_through"},
        {"adam_beta1", c.pretrain.adam_beta1},
        {"adam_beta2", c.pretrain.adam_beta2},
        {"adam_epsilon", c.pretrain.adam_epsilon},
        {"weight_decay", c.pretrain.weight_decay},
        {"stage1_trials", c.stage1_trials},
        {"train_fraction", c.train_fraction}}},
      {"learner",
       {{"kind", to_string(c.learner.kind)},
        {"epsilon", c.learner.epsilon},
        {"banditron_rate", c.learner.banditron_rate},
        {"agrel_alpha", c.learner.agrel_alpha},
        {"open_loop_epsilon", c.learner.open_loop_epsilon},
        {"open_loop_banditron_rate", c.learner.open_loop_banditron_rate},
        {"open_loop_agrel_alpha", c.learner.open_loop_agrel_alpha}}},
      {"stage2",
       {{"trials", c.stage2.trials},
        {"lr_start", c.stage2.lr_start},
        {"lr_end", c.stage2.lr_end}}},
      {"ops",
       {{"n_neurons", c.ops.n_neurons},
        {"lambda_min", {c.ops.lambda_min_lo, c.ops.lambda_min_hi}},
        {"lambda_max", {c.ops.lambda_max_lo, c.ops.lambda_max_hi}},
        {"noise_sigma", c.ops.noise_sigma},
        {"bin_seconds", c.ops.bin_seconds}}},
      {"env",
       {{"target_distance", c.env.target_distance},
        {"accept_radius", c.env.accept_radius},
        {"hold_required", c.env.hold_required},
        {"max_duration", c.env.max_duration},
        {"grace", c.env.grace},
        {"dt", c.env.dt},
        {"v_max", c.env.v_max},
        {"damping", c.env.damping},
        {"slow_radius", c.env.slow_radius},
        {"hold_mode", c.env.hold_mode == HoldMode::home ? "home" : "zero"}}},
      {"perturbation",
       {{"kind", to_string(c.perturbation.kind)},
        {"ratio", c.perturbation.ratio},
        {"onset_trial", c.perturbation.onset_trial},
        {"drift_max", {c.perturbation.drift_max_lo, c.perturbation.drift_max_hi}}}},
      {"seeds", c.seeds},
      {"trials", c.trials},
      {"adapt_window", c.adapt_window},
      {"synth",
       {{"n_channels", c.synth.n_channels},
        {"n_sessions", c.synth.n_sessions},
        {"bins_per_session", c.synth.bins_per_session},
        {"bin_width", c.synth.bin_width},
        {"drift_strength", c.synth.drift_strength},
        {"velocity_tau", c.synth.velocity_tau},
        {"velocity_scale", c.synth.velocity_scale},
        {"drive_clip", c.synth.drive_clip}}},
      {"sweep", {{"ratios", c.sweep.ratios}, {"kinds", kinds}, {"learners", learners}}},
      {"paths",
       {{"dataset", c.paths.dataset},
        {"checkpoint", c.paths.checkpoint},
        {"output", c.paths.output}}},
      {"log_trajectories", c.log_trajectories},
  };
}

ExperimentConfig from_json(const json &j, ExperimentConfig c) {
  try {
    get_to(j, "version", c.version);
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("network")) {
      const auto &n = j.at("network");
      get_to(n, "layer_sizes", c.network.layer_sizes);
      if (n.contains("lif")) {
        LifParams p;
        get_to(n.at("lif"), "beta", p.beta);
        get_to(n.at("lif"), "threshold", p.threshold);
        c.network.lif = {p};
      }
      get_to(n, "dropout", c.network.dropout);
      get_to(n, "bin_window", c.network.bin_window);
      c.network.stride = c.network.bin_window;
      get_to(n, "stride", c.network.stride);
      c.pretrain.dropout = c.network.dropout;
    }
    if (j.contains("codec")) get_to(j.at("codec"), "n_bins", c.n_bins);
    if (j.contains("pretrain")) {
      const auto &p = j.at("pretrain");
      get_to(p, "epochs", c.pretrain.epochs);
      get_to(p, "learning_rate", c.pretrain.learning_rate);
      get_to(p, "batch_size", c.pretrain.batch_size);
      if (p.contains("surrogate")) {
        const auto s = p.at("surrogate").get<std::string>();
        if (s == "arctan") c.pretrain.surrogate = Surrogate::arctan;
        else if (s == "straight_through") c.pretrain.surrogate = Surrogate::straight_through;
        else throw ConfigError("unknown surrogate '" + s + "'");
      }
      get_to(p, "adam_beta1", c.pretrain.adam_beta1);
      get_to(p, "adam_beta2", c.pretrain.adam_beta2);
      get_to(p, "adam_epsilon", c.pretrain.adam_epsilon);
      get_to(p, "weight_decay", c.pretrain.weight_decay);
      get_to(p, "stage1_trials", c.stage1_trials);
      get_to(p, "train_fraction", c.train_fraction);
    }
    if (j.contains("learner")) {
      const auto &l = j.at("learner");
      if (l.contains("kind")) c.learner.kind = learner_from_string(l.at("kind").get<std::string>());
      get_to(l, "epsilon", c.learner.epsilon);
      get_to(l, "banditron_rate", c.learner.banditron_rate);
      get_to(l, "agrel_alpha", c.learner.agrel_alpha);
      get_to(l, "open_loop_epsilon", c.learner.open_loop_epsilon);
      get_to(l, "open_loop_banditron_rate", c.learner.open_loop_banditron_rate);
      get_to(l, "open_loop_agrel_alpha", c.learner.open_loop_agrel_alpha);
    }
    if (j.contains("stage2")) {
      const auto &s = j.at("stage2");
      get_to(s, "trials", c.stage2.trials);
      get_to(s, "lr_start", c.stage2.lr_start);
      get_to(s, "lr_end", c.stage2.lr_end);
    }
    if (j.contains("ops")) {
      const auto &o = j.at("ops");
      get_to(o, "n_neurons", c.ops.n_neurons);
      if (o.contains("lambda_min")) {
        c.ops.lambda_min_lo = o.at("lambda_min").at(0).get<double>();
        c.ops.lambda_min_hi = o.at("lambda_min").at(1).get<double>();
      }
      if (o.contains("lambda_max")) {
        c.ops.lambda_max_lo = o.at("lambda_max").at(0).get<double>();
        c.ops.lambda_max_hi = o.at("lambda_max").at(1).get<double>();
      }
      get_to(o, "noise_sigma", c.ops.noise_sigma);
      get_to(o, "bin_seconds", c.ops.bin_seconds);
    }
    if (j.contains("env")) {
      const auto &e = j.at("env");
      get_to(e, "target_distance", c.env.target_distance);
      get_to(e, "accept_radius", c.env.accept_radius);
      get_to(e, "hold_required", c.env.hold_required);
      get_to(e, "max_duration", c.env.max_duration);
      get_to(e, "grace", c.env.grace);
      get_to(e, "dt", c.env.dt);
      get_to(e, "v_max", c.env.v_max);
      get_to(e, "damping", c.env.damping);
      get_to(e, "slow_radius", c.env.slow_radius);
      if (e.contains("hold_mode")) {
        const auto h = e.at("hold_mode").get<std::string>();
        if (h == "home") c.env.hold_mode = HoldMode::home;
        else if (h == "zero") c.env.hold_mode = HoldMode::zero;
        else throw ConfigError("unknown hold_mode '" + h + "'");
      }
    }
    if (j.contains("perturbation")) {
      const auto &p = j.at("perturbation");
      if (p.contains("kind"))
        c.perturbation.kind = perturbation_kind_from_string(p.at("kind").get<std::string>());
      get_to(p, "ratio", c.perturbation.ratio);
      get_to(p, "onset_trial", c.perturbation.onset_trial);
      if (p.contains("drift_max")) {
        c.perturbation.drift_max_lo = p.at("drift_max").at(0).get<double>();
        c.perturbation.drift_max_hi = p.at("drift_max").at(1).get<double>();
      }
    }
    get_to(j, "seeds", c.seeds);
    get_to(j, "trials", c.trials);
    get_to(j, "adapt_window", c.adapt_window);
    if (j.contains("synth")) {
      const auto &s = j.at("synth");
      get_to(s, "n_channels", c.synth.n_channels);
      get_to(s, "n_sessions", c.synth.n_sessions);
      get_to(s, "bins_per_session", c.synth.bins_per_session);
      get_to(s, "bin_width", c.synth.bin_width);
      get_to(s, "drift_strength", c.synth.drift_strength);
      get_to(s, "velocity_tau", c.synth.velocity_tau);
      get_to(s, "velocity_scale", c.synth.velocity_scale);
      get_to(s, "drive_clip", c.synth.drive_clip);
    }
    if (j.contains("sweep")) {
      const auto &s = j.at("sweep");
      get_to(s, "ratios", c.sweep.ratios);
      if (s.contains("kinds")) {
        c.sweep.kinds.clear();
        for (const auto &k : s.at("kinds"))
          c.sweep.kinds.push_back(perturbation_kind_from_string(k.get<std::string>()));
      }
      if (s.contains("learners")) {
        c.sweep.learners.clear();
        for (const auto &k : s.at("learners"))
          c.sweep.learners.push_back(learner_from_string(k.get<std::string>()));
      }
    }
    if (j.contains("paths")) {
      const auto &p = j.at("paths");
      get_to(p, "dataset", c.paths.dataset);
      get_to(p, "checkpoint", c.paths.checkpoint);
      get_to(p, "output", c.paths.output);
    }
    get_to(j, "log_trajectories", c.log_trajectories);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception &e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  Mode mode = Mode::closed_loop;
  if (j.contains("mode")) mode = mode_from_string(j.at("mode").get<std::string>());
  const bool open = mode == Mode::pretrain || mode == Mode::open_loop || mode == Mode::synth;
  auto base = open ? ExperimentConfig::open_loop_defaults() : ExperimentConfig::closed_loop_defaults();
  auto cfg = from_json(j, base);
  cfg.validate();
  return cfg;
}

void save_config(const std::filesystem::path &path, const ExperimentConfig &cfg) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << to_json(cfg).dump(2) << '\n';
}

} // namespace dsnn
