#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pacer/ad/adam.hpp"
#include "pacer/ad/checkpoint.hpp"
#include "pacer/critic/critic.hpp"
#include "pacer/encourager/mmd.hpp"
#include "pacer/env/env.hpp"
#include "pacer/env/normalizer.hpp"
#include "pacer/replay/replay.hpp"
#include "pacer/trainer/kernels.hpp"
#include "pacer/trainer/metrics.hpp"
#include "pacer/utility/utility.hpp"

namespace pacer::trainer {

enum class PolicyKind { kPushForward, kGaussian };
enum class RegularizerKind { kMmd, kNone, kEpsilonGreedy };

std::string to_string(PolicyKind k);
std::string to_string(RegularizerKind k);
PolicyKind policy_kind_from_string(const std::string& s);
RegularizerKind regularizer_from_string(const std::string& s);

struct TrainConfig {
  double gamma = 0.0;  // 0 → environment default
  int batch_size = 100;
  int quantiles = 32;
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  double lr_alpha = 1e-3;
  int mmd_samples = 100;
  double mmd_bandwidth_sq = 0.0;  // 0 → action_dim
  double beta_step = 0.01;
  double beta_min = 1e-3;
  double beta_init = 0.0;  // 0 → half the uniform-vs-uniform baseline
  int update_every = 50;
  long total_steps = 100000;
  int warmup = 10000;
  std::uint64_t seed = 0;
  int eval_every = 1000;
  int eval_episodes = 5;
  long checkpoint_every = 0;  // 0 → final checkpoint only
  int policy_delay = 1;
  double polyak = 0.005;
  double kappa = 1.0;
  double alpha_min = 0.05;
  double alpha_max = 5.0;
  double alpha_init = 1.0;
  double reward_scale = 1.0;
  std::size_t replay_capacity = 1000000;
  std::vector<int> hidden = {400, 300};
  int noise_dim = 0;  // 0 → action_dim
  double stop_return = std::numeric_limits<double>::quiet_NaN();
  utility::UtilityFunction utility;
  PolicyKind policy_kind = PolicyKind::kPushForward;
  RegularizerKind regularizer = RegularizerKind::kMmd;
  double epsilon = 0.1;  // epsilon-greedy collection mixing
  Exec exec = Exec::kParallel;
  bool timing = false;

  void validate() const;
};

// applies the ablation matrix axes and validates the combination
TrainConfig ablation_variant(TrainConfig base, PolicyKind policy,
                             RegularizerKind regularizer);

// All learnable state: actor and twin critics with their targets, the
// adaptive weights (α kept in log space, so positivity is structural), the
// optimizer moments, and the step counters.
struct TrainerState {
  std::unique_ptr<actor::Policy> policy;
  std::unique_ptr<critic::TwinCritics> critics;
  double log_alpha = 0.0;
  double beta = 0.5;
  double alpha_min = 0.05;
  double alpha_max = 5.0;
  ad::AdamState opt_actor, opt_c1, opt_c2;
  long env_steps = 0;
  long grad_steps = 0;
  env::ObsNormalizer normalizer;

  double alpha() const;
};

constexpr double kAlphaClampMin = 1e-6;
constexpr double kAlphaClampMax = 1e6;

// ℒ(α) = (ln α)(β − d_m); one SGD descent step on ln α moves α up when the
// regularizer exceeds the constraint level and down otherwise.
double alpha_loss_value(double alpha, double beta, double d_m);
void alpha_update(TrainerState& state, double d_m, double lr);

// ∂ℒ(β)/∂β = ½[sign(α_max−α) + sign(α_min−α)]; β steps against it and is
// floored at beta_min.
void beta_update(TrainerState& state, double beta_step, double beta_min);

struct EvalSummary {
  double mean_return = 0.0;
  double std_return = 0.0;
  double overspeed_fraction = std::numeric_limits<double>::quiet_NaN();
  int episodes = 0;
};

// Evaluation-mode rollouts with frozen observation statistics. Episodes are
// independent (own env instance and RNG stream) and may run in parallel;
// reductions are in episode order. For risky_drive the summary reports the
// fraction of visited states above the speed threshold.
EvalSummary evaluate_policy(const actor::Policy& policy,
                            const env::ObsNormalizer& normalizer,
                            const std::string& env_name, int episodes,
                            std::uint64_t seed, Exec exec);

struct RunResult {
  std::vector<TrainRow> train_rows;
  std::vector<EvalRow> eval_rows;
  bool stopped_early = false;
};

class Trainer {
 public:
  Trainer(std::unique_ptr<env::Env> environment, TrainConfig cfg);

  // One full optimization step on a sampled batch: critic update, actor
  // update every policy_delay steps, α and β updates, target blend.
  TrainRow train_step();

  // Interleaves collection with bursts of update_every gradient steps and
  // periodic evaluation; optionally streams metrics and checkpoints.
  RunResult run(MetricsWriter* metrics = nullptr,
                const std::string& checkpoint_dir = "");

  void save_checkpoint(const std::string& path) const;

  TrainerState& state() { return state_; }
  const TrainerState& state() const { return state_; }
  replay::ReplayBuffer& buffer() { return buffer_; }
  const TrainConfig& config() const { return cfg_; }
  env::Env& environment() { return *env_; }

 private:
  std::vector<double> collect_action(const std::vector<double>& obs);
  env::Transition make_training_item(const env::Transition& raw) const;

  TrainConfig cfg_;
  std::unique_ptr<env::Env> env_;
  TrainerState state_;
  replay::ReplayBuffer buffer_;
  encourager::MmdKernel kernel_{1.0};
  BatchWorkspace ws_;
  Rng collect_rng_;
  long episode_index_ = 0;
  // carried forward on critic-only steps so every row reports all fields
  double last_actor_loss_ = 0.0;
  double last_d_m_ = 0.0;
  double last_v_psi_ = 0.0;
};

// builds a trainer, runs it to completion, and hands both back
struct TrainingOutcome {
  std::unique_ptr<Trainer> trainer;
  RunResult result;
};
TrainingOutcome run_training(std::unique_ptr<env::Env> environment,
                             const TrainConfig& cfg,
                             MetricsWriter* metrics = nullptr,
                             const std::string& checkpoint_dir = "");

// Checkpoint round-trip for the CLI subcommands.
void save_agent(const std::string& path, const TrainerState& state,
                const TrainConfig& cfg, const std::string& env_name);

struct LoadedAgent {
  std::string env_name;
  TrainConfig cfg;
  TrainerState state;
};
LoadedAgent load_agent(const std::string& path);

}  // namespace pacer::trainer
