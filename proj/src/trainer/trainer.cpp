#include "pacer/trainer/trainer.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pacer/errors.hpp"
#include "pacer/trainer/ablation.hpp"

namespace pacer::trainer {

namespace {
constexpr std::uint64_t kInitSalt = 0x696e6974ULL;
constexpr std::uint64_t kCollectSalt = 0x636f6cULL;
constexpr std::uint64_t kReplaySalt = 0x7265706cULL;
constexpr std::uint64_t kEnvSalt = 0x656e76ULL;
constexpr std::uint64_t kStepSalt = 0x73746570ULL;
constexpr std::uint64_t kEvalSalt = 0x6576616cULL;
constexpr std::uint64_t kBeta0Salt = 0x62657461ULL;

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
}  // namespace

std::string to_string(PolicyKind k) {
  return k == PolicyKind::kPushForward ? "pushforward" : "gaussian";
}

std::string to_string(RegularizerKind k) {
  switch (k) {
    case RegularizerKind::kMmd:
      return "mmd";
    case RegularizerKind::kNone:
      return "none";
    case RegularizerKind::kEpsilonGreedy:
      return "epsilon_greedy";
  }
  return "mmd";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "pushforward") return PolicyKind::kPushForward;
  if (s == "gaussian") return PolicyKind::kGaussian;
  throw ConfigError("unknown policy kind '" + s + "'");
}

RegularizerKind regularizer_from_string(const std::string& s) {
  if (s == "mmd") return RegularizerKind::kMmd;
  if (s == "none") return RegularizerKind::kNone;
  if (s == "epsilon_greedy") return RegularizerKind::kEpsilonGreedy;
  throw ConfigError("unknown regularizer kind '" + s + "'");
}

void TrainConfig::validate() const {
  if (gamma < 0.0 || gamma >= 1.0)
    throw ConfigError("config: gamma must be in [0, 1) (0 selects env default)");
  if (batch_size < 1) throw ConfigError("config: batch_size must be positive");
  if (quantiles < 1) throw ConfigError("config: quantiles must be positive");
  if (lr_actor <= 0 || lr_critic <= 0 || lr_alpha <= 0)
    throw ConfigError("config: learning rates must be positive");
  if (mmd_samples < 2) throw ConfigError("config: mmd_samples must be >= 2");
  if (beta_step <= 0) throw ConfigError("config: beta_step must be positive");
  if (update_every < 1) throw ConfigError("config: update_every must be >= 1");
  if (total_steps < 0) throw ConfigError("config: total_steps must be >= 0");
  if (warmup < 0) throw ConfigError("config: warmup must be >= 0");
  if (policy_delay < 1) throw ConfigError("config: policy_delay must be >= 1");
  if (!(polyak > 0.0 && polyak <= 1.0))
    throw ConfigError("config: polyak must be in (0, 1]");
  if (kappa <= 0.0) throw ConfigError("config: kappa must be positive");
  if (!(alpha_min > 0.0 && alpha_min < alpha_max))
    throw ConfigError("config: need 0 < alpha_min < alpha_max");
  if (alpha_init <= 0.0) throw ConfigError("config: alpha_init must be positive");
  if (hidden.size() != 2)
    throw ConfigError("config: hidden must list exactly two layer widths");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw ConfigError("config: epsilon must be in [0, 1]");
  utility.validate();
}

TrainConfig ablation_variant(TrainConfig base, PolicyKind policy,
                             RegularizerKind regularizer) {
  base.policy_kind = policy;
  base.regularizer = regularizer;
  base.validate();
  return base;
}

double TrainerState::alpha() const { return std::exp(log_alpha); }

double alpha_loss_value(double alpha, double beta, double d_m) {
  return std::log(alpha) * (beta - d_m);
}

void alpha_update(TrainerState& state, double d_m, double lr) {
  if (d_m < 0.0) throw ConfigError("alpha_update: d_m must be nonnegative");
  // descent on ∂ℒ/∂(ln α) = β − d_m
  state.log_alpha -= lr * (state.beta - d_m);
  state.log_alpha = std::clamp(state.log_alpha, std::log(kAlphaClampMin),
                               std::log(kAlphaClampMax));
}

void beta_update(TrainerState& state, double beta_step, double beta_min) {
  const double a = state.alpha();
  auto sign = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
  const double g = 0.5 * (sign(state.alpha_max - a) + sign(state.alpha_min - a));
  state.beta = std::max(beta_min, state.beta - beta_step * g);
}

namespace {
std::unique_ptr<actor::Policy> make_policy(PolicyKind kind,
                                           const env::EnvSpec& spec,
                                           const std::vector<int>& hidden,
                                           int noise_dim, Rng& rng) {
  if (kind == PolicyKind::kGaussian)
    return std::make_unique<GaussianPolicy>(spec, hidden, rng);
  return std::make_unique<actor::PushForwardPolicy>(spec, hidden, noise_dim, rng);
}
}  // namespace

Trainer::Trainer(std::unique_ptr<env::Env> environment, TrainConfig cfg)
    : cfg_(std::move(cfg)),
      env_(std::move(environment)),
      buffer_(cfg_.replay_capacity, mix64(cfg_.seed, kReplaySalt)),
      collect_rng_(mix64(cfg_.seed, kCollectSalt)) {
  cfg_.validate();
  const env::EnvSpec& spec = env_->spec();
  if (cfg_.gamma == 0.0) cfg_.gamma = spec.gamma_default;
  if (cfg_.noise_dim == 0) cfg_.noise_dim = spec.action_dim;
  if (cfg_.mmd_bandwidth_sq == 0.0)
    cfg_.mmd_bandwidth_sq = static_cast<double>(spec.action_dim);
  kernel_ = encourager::MmdKernel::gaussian(cfg_.mmd_bandwidth_sq);

  Rng init_rng(mix64(cfg_.seed, kInitSalt));
  state_.policy = make_policy(cfg_.policy_kind, spec, cfg_.hidden,
                              cfg_.noise_dim, init_rng);
  state_.critics = std::make_unique<critic::TwinCritics>(
      spec.state_dim, spec.action_dim, cfg_.hidden, cfg_.polyak, init_rng);
  state_.normalizer = env::ObsNormalizer(spec.state_dim);
  state_.alpha_min = cfg_.alpha_min;
  state_.alpha_max = cfg_.alpha_max;
  state_.log_alpha = std::log(cfg_.alpha_init);
  state_.opt_actor = ad::AdamState(static_cast<int>(state_.policy->params().data.size()));
  state_.opt_c1 = ad::AdamState(state_.critics->online1.param_count());
  state_.opt_c2 = ad::AdamState(state_.critics->online2.param_count());

  if (cfg_.beta_init > 0.0) {
    state_.beta = cfg_.beta_init;
  } else {
    // baseline: how far two uniform sample sets sit apart at this sample count
    Rng rng(mix64(cfg_.seed, kBeta0Salt));
    const int reps = 16;
    double acc = 0.0;
    std::vector<double> xs(static_cast<size_t>(cfg_.mmd_samples) * spec.action_dim);
    std::vector<double> ys(xs.size());
    for (int r = 0; r < reps; ++r) {
      actor::sample_uniform_box(spec.action_low, spec.action_high,
                                cfg_.mmd_samples, rng, xs.data());
      actor::sample_uniform_box(spec.action_low, spec.action_high,
                                cfg_.mmd_samples, rng, ys.data());
      acc += encourager::mmd_rows(kernel_, xs.data(), cfg_.mmd_samples, ys.data(),
                                  cfg_.mmd_samples, spec.action_dim);
    }
    state_.beta = std::max(cfg_.beta_min, 0.5 * acc / reps);
  }

  ws_.configure(cfg_.batch_size,
                static_cast<int>(state_.policy->params().data.size()),
                state_.critics->online1.param_count());
}

env::Transition Trainer::make_training_item(const env::Transition& raw) const {
  env::Transition t;
  t.state = state_.normalizer.normalize(raw.state);
  t.action = raw.action;
  t.reward = raw.reward * cfg_.reward_scale;
  t.next_state = state_.normalizer.normalize(raw.next_state);
  t.done = raw.done;
  return t;
}

TrainRow Trainer::train_step() {
  if (buffer_.size() < static_cast<std::size_t>(cfg_.batch_size))
    throw NotReadyError("train_step: replay buffer smaller than the batch");
  state_.grad_steps += 1;
  const std::uint64_t step_key =
      mix64(cfg_.seed, kStepSalt, static_cast<std::uint64_t>(state_.grad_steps));

  std::vector<env::Transition> batch;
  batch.reserve(cfg_.batch_size);
  for (std::size_t idx : buffer_.sample_indices(cfg_.batch_size))
    batch.push_back(make_training_item(buffer_.at(idx)));

  const critic::QuantileHuberParams qh{cfg_.kappa, cfg_.quantiles};
  const CriticBatchResult cres =
      critic_batch(*state_.critics, *state_.policy, batch, qh, cfg_.gamma,
                   cfg_.utility, step_key, cfg_.exec, ws_);
  adam_step(state_.critics->online1.params().data, cres.grad1, state_.opt_c1,
            cfg_.lr_critic, "critic1");
  adam_step(state_.critics->online2.params().data, cres.grad2, state_.opt_c2,
            cfg_.lr_critic, "critic2");

  TrainRow row;
  row.critic_loss = cres.loss;
  const bool actor_turn = state_.grad_steps % cfg_.policy_delay == 0;
  const bool with_mmd = cfg_.regularizer == RegularizerKind::kMmd;
  if (actor_turn) {
    const ActorBatchResult ares = actor_batch(
        *state_.critics, *state_.policy, batch, cfg_.quantiles, kernel_,
        cfg_.mmd_samples, with_mmd, with_mmd ? state_.alpha() : 0.0,
        cfg_.utility, step_key, cfg_.exec, ws_);
    adam_step(state_.policy->params().data, ares.grad, state_.opt_actor,
              cfg_.lr_actor, "actor");
    if (with_mmd) {
      alpha_update(state_, ares.d_mean, cfg_.lr_alpha);
      beta_update(state_, cfg_.beta_step, cfg_.beta_min);
    }
    last_actor_loss_ = ares.loss;
    last_d_m_ = ares.d_mean;
    last_v_psi_ = ares.v_mean;
  }
  row.actor_loss = last_actor_loss_;
  row.d_m = last_d_m_;
  row.v_psi = last_v_psi_;
  row.alpha = state_.alpha();
  row.beta = state_.beta;

  critic::polyak_update(*state_.critics, cfg_.polyak);
  return row;
}

std::vector<double> Trainer::collect_action(const std::vector<double>& obs) {
  const env::EnvSpec& spec = env_->spec();
  const bool warm = state_.env_steps <= cfg_.warmup;
  if (warm) {
    std::vector<double> a(spec.action_dim);
    actor::sample_uniform_box(spec.action_low, spec.action_high, 1, collect_rng_,
                              a.data());
    return a;
  }
  if (cfg_.regularizer == RegularizerKind::kEpsilonGreedy &&
      collect_rng_.uniform() < cfg_.epsilon) {
    std::vector<double> a(spec.action_dim);
    actor::sample_uniform_box(spec.action_low, spec.action_high, 1, collect_rng_,
                              a.data());
    return a;
  }
  const std::vector<double> xi =
      state_.policy->sample_noise(actor::NoiseMode::kTrain, collect_rng_);
  return state_.policy->act(state_.normalizer.normalize(obs), xi);
}

RunResult Trainer::run(MetricsWriter* metrics, const std::string& checkpoint_dir) {
  RunResult result;
  auto write_diag_and_rethrow = [&](const std::exception& e) {
    if (metrics) metrics->flush();
    if (!checkpoint_dir.empty()) {
      try {
        save_checkpoint(checkpoint_dir + "/diagnostic.ckpt");
      } catch (...) {
      }
    }
    throw TrainingError(std::string("run aborted at env step ") +
                        std::to_string(state_.env_steps) + ": " + e.what());
  };

  std::vector<double> obs = env_->reset(mix64(cfg_.seed, kEnvSalt, episode_index_));
  state_.normalizer.update(obs);
  long eval_index = 0;

  for (long n = 1; n <= cfg_.total_steps; ++n) {
    state_.env_steps = n;
    const std::vector<double> action = collect_action(obs);
    const env::StepResult sr = env_->step(action);
    buffer_.push({obs, action, sr.reward, sr.next_state, sr.done});
    state_.normalizer.update(sr.next_state);
    obs = sr.next_state;
    if (sr.done) {
      episode_index_ += 1;
      obs = env_->reset(mix64(cfg_.seed, kEnvSalt, episode_index_));
      state_.normalizer.update(obs);
    }

    const bool can_update =
        n >= cfg_.warmup && n % cfg_.update_every == 0 &&
        buffer_.size() >= static_cast<std::size_t>(cfg_.batch_size);
    if (can_update) {
      for (int u = 0; u < cfg_.update_every; ++u) {
        const double t0 = cfg_.timing ? now_ms() : 0.0;
        TrainRow row;
        try {
          row = train_step();
        } catch (const TrainingError& e) {
          write_diag_and_rethrow(e);
        }
        row.step = static_cast<double>(n - cfg_.update_every + 1 + u);
        result.train_rows.push_back(row);
        if (metrics)
          metrics->train_row(row, cfg_.timing
                                      ? std::optional<double>(now_ms() - t0)
                                      : std::nullopt);
      }
    }

    if (cfg_.eval_every > 0 && n % cfg_.eval_every == 0) {
      const double t0 = cfg_.timing ? now_ms() : 0.0;
      eval_index += 1;
      const EvalSummary summary = evaluate_policy(
          *state_.policy, state_.normalizer, env_->spec().name,
          cfg_.eval_episodes,
          mix64(cfg_.seed, kEvalSalt, static_cast<std::uint64_t>(eval_index)),
          cfg_.exec);
      EvalRow row{static_cast<double>(n) + 0.5, summary.mean_return,
                  summary.std_return};
      result.eval_rows.push_back(row);
      if (metrics)
        metrics->eval_row(row, cfg_.timing ? std::optional<double>(now_ms() - t0)
                                           : std::nullopt);
      if (!std::isnan(cfg_.stop_return) &&
          summary.mean_return >= cfg_.stop_return) {
        result.stopped_early = true;
        break;
      }
    }

    if (!checkpoint_dir.empty() && cfg_.checkpoint_every > 0 &&
        n % cfg_.checkpoint_every == 0) {
      save_checkpoint(checkpoint_dir + "/ckpt_" + std::to_string(n) + ".bin");
    }
  }

  if (!checkpoint_dir.empty())
    save_checkpoint(checkpoint_dir + "/final.ckpt");
  if (metrics) metrics->flush();
  return result;
}

TrainingOutcome run_training(std::unique_ptr<env::Env> environment,
                             const TrainConfig& cfg, MetricsWriter* metrics,
                             const std::string& checkpoint_dir) {
  TrainingOutcome out;
  out.trainer = std::make_unique<Trainer>(std::move(environment), cfg);
  out.result = out.trainer->run(metrics, checkpoint_dir);
  return out;
}

EvalSummary evaluate_policy(const actor::Policy& policy,
                            const env::ObsNormalizer& normalizer,
                            const std::string& env_name, int episodes,
                            std::uint64_t seed, Exec exec) {
  if (episodes < 1) throw ConfigError("evaluate_policy: episodes must be >= 1");
  std::vector<double> returns(episodes, 0.0);
  std::vector<long> overspeed(episodes, 0);
  std::vector<long> steps(episodes, 0);
  const bool risky = env_name == "risky_drive";

  auto run_episode = [&](int ep) {
    std::unique_ptr<env::Env> e = env::make_env(env_name);
    Rng rng(mix64(seed, 0x6570ULL, static_cast<std::uint64_t>(ep)));
    std::vector<double> obs = e->reset(mix64(seed, static_cast<std::uint64_t>(ep)));
    double total = 0.0;
    bool done = false;
    while (!done) {
      if (risky && obs[0] > env::RiskyDrive::kThreshold) overspeed[ep] += 1;
      steps[ep] += 1;
      const std::vector<double> xi =
          policy.sample_noise(actor::NoiseMode::kEval, rng);
      const env::StepResult sr = e->step(policy.act(normalizer.normalize(obs), xi));
      total += sr.reward;
      obs = sr.next_state;
      done = sr.done;
    }
    returns[ep] = total;
  };

  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (int ep = 0; ep < episodes; ++ep) run_episode(ep);
  } else {
    for (int ep = 0; ep < episodes; ++ep) run_episode(ep);
  }

  EvalSummary s;
  s.episodes = episodes;
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= episodes;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= episodes;
  s.mean_return = mean;
  s.std_return = std::sqrt(var);
  if (risky) {
    long os = 0, total = 0;
    for (int ep = 0; ep < episodes; ++ep) {
      os += overspeed[ep];
      total += steps[ep];
    }
    s.overspeed_fraction = total > 0 ? static_cast<double>(os) / total : 0.0;
  }
  return s;
}

namespace {
std::vector<ad::LayerShape> iqn_layers(const critic::IqnNet& net) {
  return net.layout();
}
}  // namespace

void save_agent(const std::string& path, const TrainerState& state,
                const TrainConfig& cfg, const std::string& env_name) {
  ad::Checkpoint ckpt;
  ckpt.add("actor", state.policy->layout(), state.policy->params().data);
  ckpt.add("critic_online1", iqn_layers(state.critics->online1),
           state.critics->online1.params().data);
  ckpt.add("critic_online2", iqn_layers(state.critics->online2),
           state.critics->online2.params().data);
  ckpt.add("critic_target1", iqn_layers(state.critics->target1),
           state.critics->target1.params().data);
  ckpt.add("critic_target2", iqn_layers(state.critics->target2),
           state.critics->target2.params().data);
  const int sd = state.normalizer.dim();
  ckpt.add("obs_normalizer",
           {{"mean", {sd}}, {"m2", {sd}}, {"count", {1}}},
           state.normalizer.pack());
  ckpt.add("weights", {{"log_alpha", {1}}, {"beta", {1}}},
           {state.log_alpha, state.beta});
  ckpt.add("counters", {{"env_steps", {1}}, {"grad_steps", {1}}},
           {static_cast<double>(state.env_steps),
            static_cast<double>(state.grad_steps)});

  ckpt.meta["env"] = env_name;
  ckpt.meta["policy_kind"] = to_string(cfg.policy_kind);
  ckpt.meta["regularizer"] = to_string(cfg.regularizer);
  ckpt.meta["hidden0"] = std::to_string(cfg.hidden[0]);
  ckpt.meta["hidden1"] = std::to_string(cfg.hidden[1]);
  ckpt.meta["noise_dim"] = std::to_string(cfg.noise_dim);
  ckpt.meta["quantiles"] = std::to_string(cfg.quantiles);
  ckpt.meta["kappa"] = std::to_string(cfg.kappa);
  ckpt.meta["polyak"] = std::to_string(cfg.polyak);
  ckpt.meta["utility"] = cfg.utility.describe();
  ckpt.save(path);
}

void Trainer::save_checkpoint(const std::string& path) const {
  save_agent(path, state_, cfg_, env_->spec().name);
}

LoadedAgent load_agent(const std::string& path) {
  const ad::Checkpoint ckpt = ad::Checkpoint::load(path);
  LoadedAgent agent;
  auto meta = [&](const std::string& key) -> std::string {
    auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end())
      throw CheckpointError("checkpoint missing meta '" + key + "'");
    return it->second;
  };
  agent.env_name = meta("env");
  const std::unique_ptr<env::Env> e = env::make_env(agent.env_name);
  const env::EnvSpec& spec = e->spec();

  agent.cfg.policy_kind = policy_kind_from_string(meta("policy_kind"));
  agent.cfg.regularizer = regularizer_from_string(meta("regularizer"));
  agent.cfg.hidden = {std::stoi(meta("hidden0")), std::stoi(meta("hidden1"))};
  agent.cfg.noise_dim = std::stoi(meta("noise_dim"));
  agent.cfg.quantiles = std::stoi(meta("quantiles"));
  agent.cfg.kappa = std::stod(meta("kappa"));
  agent.cfg.polyak = std::stod(meta("polyak"));

  Rng dummy(0);
  agent.state.policy = make_policy(agent.cfg.policy_kind, spec, agent.cfg.hidden,
                                   agent.cfg.noise_dim, dummy);
  agent.state.critics = std::make_unique<critic::TwinCritics>(
      spec.state_dim, spec.action_dim, agent.cfg.hidden, agent.cfg.polyak, dummy);

  auto restore = [&](const std::string& name, std::vector<double>& dst) {
    const auto& g = ckpt.group(name);
    if (g.values.size() != dst.size())
      throw CheckpointError("checkpoint group '" + name +
                            "' does not match this environment's dimensions");
    dst = g.values;
  };
  restore("actor", agent.state.policy->params().data);
  restore("critic_online1", agent.state.critics->online1.params().data);
  restore("critic_online2", agent.state.critics->online2.params().data);
  restore("critic_target1", agent.state.critics->target1.params().data);
  restore("critic_target2", agent.state.critics->target2.params().data);

  const auto& norm = ckpt.group("obs_normalizer");
  agent.state.normalizer = env::ObsNormalizer::unpack(norm.values, spec.state_dim);
  const auto& weights = ckpt.group("weights");
  agent.state.log_alpha = weights.values.at(0);
  agent.state.beta = weights.values.at(1);
  const auto& counters = ckpt.group("counters");
  agent.state.env_steps = static_cast<long>(counters.values.at(0));
  agent.state.grad_steps = static_cast<long>(counters.values.at(1));
  return agent;
}

}  // namespace pacer::trainer
