#include "pacer/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "pacer/errors.hpp"

namespace pacer::env {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check_action(const std::vector<double>& action, const EnvSpec& spec) {
  if (static_cast<int>(action.size()) != spec.action_dim)
    throw ConfigError(spec.name + ": action has " +
                      std::to_string(action.size()) + " dims, expected " +
                      std::to_string(spec.action_dim));
  for (double a : action)
    if (std::isnan(a)) throw UsageError(spec.name + ": NaN action");
}

double wrap_angle(double x) {
  // map to [-pi, pi)
  double y = std::fmod(x + kPi, 2.0 * kPi);
  if (y < 0.0) y += 2.0 * kPi;
  return y - kPi;
}
}  // namespace

// --- BimodalBandit ---

BimodalBandit::BimodalBandit() {
  spec_.name = "bimodal_bandit";
  spec_.state_dim = 1;
  spec_.action_dim = 2;
  spec_.action_low = {-1.0, -1.0};
  spec_.action_high = {1.0, 1.0};
  spec_.max_episode_steps = 1;
  spec_.gamma_default = 0.99;
}

std::vector<double> BimodalBandit::reset(std::optional<std::uint64_t>) {
  t_ = 0;
  return {0.0};
}

double BimodalBandit::reward(const std::vector<double>& a) {
  const double d1 = (a[0] - kCenter) * (a[0] - kCenter) +
                    (a[1] - kCenter) * (a[1] - kCenter);
  const double d2 = (a[0] + kCenter) * (a[0] + kCenter) +
                    (a[1] + kCenter) * (a[1] + kCenter);
  return std::exp(-d1 / kWidth) + std::exp(-d2 / kWidth);
}

StepResult BimodalBandit::step(const std::vector<double>& action) {
  check_action(action, spec_);
  t_ += 1;
  return {{0.0}, reward(action), t_ >= spec_.max_episode_steps};
}

// --- Pendulum ---

namespace {
constexpr double kGravity = 10.0;
constexpr double kMass = 1.0;
constexpr double kLength = 1.0;
constexpr double kDt = 0.05;
constexpr double kMaxTorque = 2.0;
constexpr double kMaxSpeedPendulum = 8.0;
}  // namespace

Pendulum::Pendulum() {
  spec_.name = "pendulum";
  spec_.state_dim = 3;
  spec_.action_dim = 1;
  spec_.action_low = {-kMaxTorque};
  spec_.action_high = {kMaxTorque};
  spec_.max_episode_steps = 200;
  spec_.gamma_default = 0.99;
}

std::vector<double> Pendulum::observe() const {
  return {std::cos(theta_), std::sin(theta_), theta_dot_};
}

std::vector<double> Pendulum::reset(std::optional<std::uint64_t> seed) {
  if (seed) rng_.reseed(*seed);
  theta_ = rng_.uniform(-kPi, kPi);
  theta_dot_ = rng_.uniform(-1.0, 1.0);
  t_ = 0;
  return observe();
}

double Pendulum::energy() const {
  // moment of inertia m l^2 / 3 about the pivot; zero potential at horizontal
  const double inertia = kMass * kLength * kLength / 3.0;
  return 0.5 * inertia * theta_dot_ * theta_dot_ +
         0.5 * kMass * kGravity * kLength * std::cos(theta_);
}

StepResult Pendulum::step(const std::vector<double>& action) {
  check_action(action, spec_);
  const double u = std::clamp(action[0], -kMaxTorque, kMaxTorque);
  const double th = wrap_angle(theta_);
  const double cost =
      th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

  const double accel = 3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) +
                       3.0 / (kMass * kLength * kLength) * u;
  theta_dot_ = std::clamp(theta_dot_ + accel * kDt, -kMaxSpeedPendulum,
                          kMaxSpeedPendulum);
  theta_ += theta_dot_ * kDt;
  t_ += 1;
  return {observe(), -cost, t_ >= spec_.max_episode_steps};
}

// --- RiskyDrive ---

RiskyDrive::RiskyDrive() {
  spec_.name = "risky_drive";
  spec_.state_dim = 1;
  spec_.action_dim = 1;
  spec_.action_low = {-1.0};
  spec_.action_high = {1.0};
  spec_.max_episode_steps = 100;
  spec_.gamma_default = 0.9;
}

std::vector<double> RiskyDrive::reset(std::optional<std::uint64_t> seed) {
  if (seed) rng_.reseed(*seed);
  v_ = 0.0;
  t_ = 0;
  return {v_};
}

StepResult RiskyDrive::step(const std::vector<double>& action) {
  check_action(action, spec_);
  const double a = std::clamp(action[0], -1.0, 1.0);
  double reward = v_;
  if (v_ > kThreshold && rng_.uniform() < kPenaltyProb) reward -= kPenalty;
  v_ = std::clamp(v_ + kAccel * a + rng_.normal(0.0, kNoiseStd), 0.0, kMaxSpeed);
  t_ += 1;
  return {{v_}, reward, t_ >= spec_.max_episode_steps};
}

// --- registry ---

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "bimodal_bandit") return std::make_unique<BimodalBandit>();
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "risky_drive") return std::make_unique<RiskyDrive>();
  throw ConfigError("unknown environment '" + name + "'");
}

std::vector<std::string> env_names() {
  return {"bimodal_bandit", "pendulum", "risky_drive"};
}

void dump_trajectory_csv(const std::string& path, const EnvSpec& spec,
                         const std::vector<Transition>& transitions) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write trajectory csv: " + path);
  out << "step";
  for (int i = 0; i < spec.state_dim; ++i) out << ",s" << i;
  for (int i = 0; i < spec.action_dim; ++i) out << ",a" << i;
  out << ",reward,done\n";
  char buf[32];
  int step = 0;
  for (const Transition& t : transitions) {
    out << step;
    for (double v : t.state) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    for (double v : t.action) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", t.reward);
    out << ',' << buf << ',' << (t.done ? 1 : 0) << "\n";
    ++step;
  }
}

}  // namespace pacer::env
