#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pacer/rng.hpp"

namespace pacer::env {

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  std::vector<double> action_low;
  std::vector<double> action_high;
  int max_episode_steps = 0;
  double gamma_default = 0.99;
};

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  bool done = false;
};

// Continuous-state, continuous-action episodic task. Episodes end only at the
// horizon; `done` marks the time limit, not an absorbing MDP state, so TD
// targets bootstrap through it.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset(std::optional<std::uint64_t> seed = {}) = 0;
  virtual StepResult step(const std::vector<double>& action) = 0;
};

// Two sharp symmetric reward bumps in a 2-D action box; one-step episodes.
// A policy must stay multimodal to cover both optima.
class BimodalBandit final : public Env {
 public:
  static constexpr double kCenter = 0.6;
  static constexpr double kWidth = 0.05;

  BimodalBandit();
  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::optional<std::uint64_t> seed = {}) override;
  StepResult step(const std::vector<double>& action) override;

  static double reward(const std::vector<double>& action);

 private:
  EnvSpec spec_;
  int t_ = 0;
};

// Torque-limited swing-up with dense quadratic costs.
class Pendulum final : public Env {
 public:
  Pendulum();
  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::optional<std::uint64_t> seed = {}) override;
  StepResult step(const std::vector<double>& action) override;

  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }
  // rod energy: kinetic + potential, conserved by the ideal dynamics
  double energy() const;

 private:
  std::vector<double> observe() const;

  EnvSpec spec_;
  Rng rng_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
  int t_ = 0;
};

// 1-D velocity control. Driving above the speed threshold earns more reward
// per step but risks a rare fixed penalty, so the risk-neutral optimum speeds
// and low-level CVaR slows down.
class RiskyDrive final : public Env {
 public:
  static constexpr double kMaxSpeed = 6.0;
  static constexpr double kThreshold = 4.0;
  static constexpr double kPenalty = 15.0;
  static constexpr double kPenaltyProb = 0.1;
  static constexpr double kAccel = 0.5;
  static constexpr double kNoiseStd = 0.05;

  RiskyDrive();
  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::optional<std::uint64_t> seed = {}) override;
  StepResult step(const std::vector<double>& action) override;

  double velocity() const { return v_; }

 private:
  EnvSpec spec_;
  Rng rng_;
  double v_ = 0.0;
  int t_ = 0;
};

// Factory by config name: "bimodal_bandit", "pendulum", "risky_drive".
std::unique_ptr<Env> make_env(const std::string& name);
std::vector<std::string> env_names();

// Optional trajectory dump: step, state..., action..., reward, done.
void dump_trajectory_csv(const std::string& path, const EnvSpec& spec,
                         const std::vector<Transition>& transitions);

}  // namespace pacer::env
