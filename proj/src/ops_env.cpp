#include "dsnn/ops_env.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dsnn {

void OpsParams::validate() const {
  if (n_neurons == 0) throw ConfigError("OPS needs at least one neuron");
  if (!(lambda_min_lo >= 0.0 && lambda_min_hi >= lambda_min_lo))
    throw ConfigError("bad lambda_min range");
  if (!(lambda_max_hi >= lambda_max_lo && lambda_max_lo > lambda_min_hi))
    throw ConfigError("lambda_max range must lie above lambda_min range");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  if (!(bin_seconds > 0.0)) throw ConfigError("bin length must be positive");
}

Vec2 random_unit_vector(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double a = angle(rng);
  return {std::cos(a), std::sin(a)};
}

OpsBrain::OpsBrain(const OpsParams &params, std::uint64_t seed) : params_(params), rng_(seed) {
  params_.validate();
  std::mt19937_64 tuning(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> lo(params.lambda_min_lo, params.lambda_min_hi);
  std::uniform_real_distribution<double> hi(params.lambda_max_lo, params.lambda_max_hi);
  for (std::size_t k = 0; k < params.n_neurons; ++k) {
    dirs_.push_back(random_unit_vector(tuning));
    lambda_min_.push_back(lo(tuning));
    lambda_max_.push_back(hi(tuning));
  }
  removed_.assign(params.n_neurons, 0);
}

double OpsBrain::rate_for_drive(std::size_t k, double drive) const {
  const double lam = (lambda_max_[k] - lambda_min_[k]) * drive + lambda_min_[k];
  return std::clamp(lam, 0.0, lambda_max_[k]);
}

double OpsBrain::expected_rate(std::size_t k, Vec2 intent) const {
  if (removed_.at(k)) return 0.0;
  return rate_for_drive(k, dirs_[k].dot(intent));
}

SpikeVector OpsBrain::generate(Vec2 intent) {
  SpikeVector bits(dirs_.size(), 0);
  for (std::size_t k = 0; k < dirs_.size(); ++k) {
    // Draws happen for every neuron so the stream does not depend on removals.
    const double eta = params_.noise_sigma * noise_(rng_);
    const double u = unit_(rng_);
    if (removed_[k]) continue;
    const double lam = rate_for_drive(k, dirs_[k].dot(intent) + eta);
    const double p = std::clamp(lam * params_.bin_seconds, 0.0, 1.0);
    bits[k] = u < p ? 1 : 0;
  }
  return bits;
}

std::size_t OpsBrain::removed_count() const {
  return static_cast<std::size_t>(std::count(removed_.begin(), removed_.end(), 1));
}

bool OpsBrain::same_tuning(const OpsBrain &o) const {
  return dirs_ == o.dirs_ && lambda_min_ == o.lambda_min_ && lambda_max_ == o.lambda_max_ &&
         removed_ == o.removed_;
}

// ---------------------------------------------------------------------------

std::string to_string(PerturbationKind k) {
  switch (k) {
  case PerturbationKind::none: return "none";
  case PerturbationKind::loss_of_neurons: return "loss_of_neurons";
  case PerturbationKind::electrode_shift: return "electrode_shift";
  case PerturbationKind::rate_drift: return "rate_drift";
  }
  return "none";
}

PerturbationKind perturbation_kind_from_string(const std::string &s) {
  if (s == "none") return PerturbationKind::none;
  if (s == "loss_of_neurons" || s == "loss") return PerturbationKind::loss_of_neurons;
  if (s == "electrode_shift" || s == "shift") return PerturbationKind::electrode_shift;
  if (s == "rate_drift" || s == "drift") return PerturbationKind::rate_drift;
  throw ConfigError("unknown perturbation kind '" + s + "'");
}

std::size_t perturbed_count(const PerturbationSpec &spec, std::size_t n_neurons) {
  return static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(n_neurons)));
}

std::vector<std::size_t> apply_perturbation(OpsBrain &brain, const PerturbationSpec &spec) {
  if (!(spec.ratio >= 0.0 && spec.ratio < 1.0))
    throw std::invalid_argument("perturbation ratio must lie in [0, 1)");
  if (spec.kind == PerturbationKind::none || spec.ratio == 0.0) return {};
  const std::size_t n = brain.size();
  const std::size_t count = perturbed_count(spec, n);
  if (count == 0) throw std::invalid_argument("perturbation ratio selects no neurons");

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(chosen.begin(), chosen.end());

  std::uniform_real_distribution<double> drift(spec.drift_max_lo, spec.drift_max_hi);
  for (auto k : chosen) {
    switch (spec.kind) {
    case PerturbationKind::loss_of_neurons: brain.set_removed(k, true); break;
    case PerturbationKind::electrode_shift: brain.set_preferred_direction(k, random_unit_vector(rng)); break;
    case PerturbationKind::rate_drift: {
      const double hi = drift(rng);
      brain.set_lambda_max(k, hi);
      brain.set_lambda_min(k, std::min(brain.lambda_min(k), hi));
      break;
    }
    case PerturbationKind::none: break;
    }
  }
  return chosen;
}

// ---------------------------------------------------------------------------

void EnvParams::validate() const {
  if (!(accept_radius > 0.0)) throw ConfigError("acceptance radius must be positive");
  if (!(hold_required < max_duration)) throw ConfigError("hold time must be below the time limit");
  if (!(dt > 0.0)) throw ConfigError("env dt must be positive");
  if (!(target_distance > 0.0 && v_max > 0.0)) throw ConfigError("bad env geometry");
  if (!(grace >= 0.0)) throw ConfigError("grace must be >= 0");
  if (!(damping >= 0.0 && slow_radius >= 0.0)) throw ConfigError("damping and slow_radius must be >= 0");
}

CenterOutEnv::CenterOutEnv(const EnvParams &params, AxisQuantizer qx, AxisQuantizer qy)
    : params_(params), qx_(std::move(qx)), qy_(std::move(qy)) {
  params_.validate();
}

void CenterOutEnv::new_trial(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double a = angle(rng);
  start_trial({params_.target_distance * std::cos(a), params_.target_distance * std::sin(a)});
}

void CenterOutEnv::start_trial(Vec2 target) {
  cursor_ = {};
  velocity_ = {};
  target_ = target;
  steps_ = hold_steps_ = entry_step_ = 0;
  status_ = TrialStatus::ongoing;
  time_to_target_.reset();
}

bool CenterOutEnv::inside_window() const {
  return (target_ - cursor_).norm() <= params_.accept_radius;
}

Vec2 CenterOutEnv::intended_direction() const {
  const Vec2 to_target = target_ - cursor_;
  const double dist = to_target.norm();
  if (params_.hold_mode == HoldMode::zero && dist <= params_.accept_radius) return {};
  if (dist == 0.0) return {};
  Vec2 dir = to_target * (1.0 / dist);
  if (params_.damping > 0.0) {
    dir = dir - velocity_ * (params_.damping / params_.v_max);
    const double n = dir.norm();
    dir = n > 0.0 ? dir * (1.0 / n) : Vec2{};
  }
  if (params_.slow_radius > 0.0) dir = dir * std::min(1.0, dist / params_.slow_radius);
  return dir;
}

ClassLabelPair CenterOutEnv::intended_label() const {
  const Vec2 v = intended_velocity();
  return {qx_.quantize(v.x), qy_.quantize(v.y)};
}

StepFeedback CenterOutEnv::step(Vec2 decoded_vel, ClassLabelPair decoded_cls) {
  if (status_ != TrialStatus::ongoing) throw std::logic_error("stepping a finished trial");
  StepFeedback fb;
  fb.label = intended_label();
  fb.reward = {decoded_cls.cls_x == fb.label.cls_x ? 1 : 0,
               decoded_cls.cls_y == fb.label.cls_y ? 1 : 0};

  velocity_ = decoded_vel;
  cursor_ = cursor_ + decoded_vel * params_.dt;
  ++steps_;
  if (inside_window()) {
    if (hold_steps_ == 0) entry_step_ = steps_;
    ++hold_steps_;
  } else {
    hold_steps_ = 0;
  }

  const double t = elapsed();
  const double eps = 1e-9;
  const double entry_time = static_cast<double>(entry_step_) * params_.dt;
  if (hold_steps_ > 0 && hold_elapsed() >= params_.hold_required - eps &&
      entry_time <= params_.max_duration + eps) {
    status_ = TrialStatus::success;
    time_to_target_ = entry_time;
  } else if (t >= params_.max_duration + params_.grace - eps ||
             (t > params_.max_duration + eps && hold_steps_ == 0)) {
    status_ = TrialStatus::timeout;
  }
  fb.status = status_;
  return fb;
}

} // namespace dsnn
