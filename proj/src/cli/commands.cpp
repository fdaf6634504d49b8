#include "pacer/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "pacer/cli/plot.hpp"
#include "pacer/critic/critic.hpp"
#include "pacer/errors.hpp"
#include "pacer/trainer/trainer.hpp"

namespace pacer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string fmt_hash(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> parse_csv_doubles(const std::string& text) {
  std::vector<double> out;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    try {
      out.push_back(std::stod(cur));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + cur + "'");
    }
    cur.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

BimodalityReport analyze_bimodality(const actor::Policy& policy,
                                    const env::ObsNormalizer& normalizer,
                                    int n_samples, std::uint64_t seed) {
  BimodalityReport rep;
  rep.samples = n_samples;
  const double c = env::BimodalBandit::kCenter;
  const std::vector<double> mode_a = {c, c};
  const std::vector<double> mode_b = {-c, -c};
  const std::vector<double> state = normalizer.normalize({0.0});

  Rng rng(mix64(seed, 0x62696dULL));
  rep.center_a.assign(2, 0.0);
  rep.center_b.assign(2, 0.0);
  long count_a = 0, count_b = 0;
  std::vector<std::vector<double>> actions;
  actions.reserve(n_samples);
  std::vector<char> assign(n_samples);
  std::vector<double> xi(policy.noise_dim());
  std::vector<double> a(policy.action_dim());
  for (int i = 0; i < n_samples; ++i) {
    policy.sample_noise_rows(actor::NoiseMode::kEval, rng, 1, xi.data());
    policy.act_rows(state, xi.data(), 1, a.data());
    double da = 0.0, db = 0.0;
    for (int k = 0; k < 2; ++k) {
      da += (a[k] - mode_a[k]) * (a[k] - mode_a[k]);
      db += (a[k] - mode_b[k]) * (a[k] - mode_b[k]);
    }
    const bool to_a = da <= db;
    assign[i] = to_a;
    for (int k = 0; k < 2; ++k)
      (to_a ? rep.center_a[k] : rep.center_b[k]) += a[k];
    (to_a ? count_a : count_b) += 1;
    actions.push_back(a);
  }
  rep.mass_a = static_cast<double>(count_a) / n_samples;
  rep.mass_b = static_cast<double>(count_b) / n_samples;
  for (int k = 0; k < 2; ++k) {
    if (count_a > 0) rep.center_a[k] /= count_a;
    if (count_b > 0) rep.center_b[k] /= count_b;
  }
  auto dist = [](const std::vector<double>& x, const std::vector<double>& y) {
    double sq = 0.0;
    for (size_t k = 0; k < x.size(); ++k) sq += (x[k] - y[k]) * (x[k] - y[k]);
    return std::sqrt(sq);
  };
  rep.center_dist_a = count_a > 0 ? dist(rep.center_a, mode_a) : 1e300;
  rep.center_dist_b = count_b > 0 ? dist(rep.center_b, mode_b) : 1e300;
  double within = 0.0;
  for (int i = 0; i < n_samples; ++i)
    within += dist(actions[i], assign[i] ? rep.center_a : rep.center_b);
  rep.within_dist = within / n_samples;
  rep.pass = rep.mass_a >= 0.2 && rep.mass_b >= 0.2 && rep.center_dist_a <= 0.15 &&
             rep.center_dist_b <= 0.15;
  return rep;
}

namespace {
std::string output_root(const std::string& configured) {
  const char* env_override = std::getenv("PACER_OUT");
  if (env_override && *env_override) return env_override;
  return configured;
}
}  // namespace

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides) {
  RunConfig cfg;
  try {
    cfg = apply_overrides(load_config(config_path), overrides);
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path root =
      fs::path(output_root(cfg.out_dir)) / cfg.resolved_run_name();
  for (std::uint64_t seed : cfg.seeds) {
    RunConfig seed_cfg = cfg;
    seed_cfg.train.seed = seed;
    const fs::path run_dir = root / ("seed_" + std::to_string(seed));
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) {
      std::cerr << "cannot create run dir " << run_dir << ": " << ec.message()
                << "\n";
      return kExitData;
    }
    const std::string metrics_path = (run_dir / "metrics.csv").string();
    save_config(seed_cfg, (run_dir / "config.json").string());
    const std::string started = iso_timestamp();

    json manifest;
    manifest["env"] = cfg.env;
    manifest["seed"] = seed;
    manifest["config_hash"] = fmt_hash(config_hash(seed_cfg));
    manifest["started"] = started;

    try {
      trainer::MetricsWriter metrics(metrics_path, cfg.train.timing);
      trainer::TrainingOutcome outcome = trainer::run_training(
          env::make_env(cfg.env), seed_cfg.train, &metrics, run_dir.string());
      manifest["finished"] = iso_timestamp();
      manifest["env_steps"] = outcome.trainer->state().env_steps;
      manifest["grad_steps"] = outcome.trainer->state().grad_steps;
      manifest["stopped_early"] = outcome.result.stopped_early;
      if (!outcome.result.eval_rows.empty())
        manifest["last_eval_return"] = outcome.result.eval_rows.back().mean_return;
      manifest["checkpoint_hash"] =
          fmt_hash(fnv1a_file((run_dir / "final.ckpt").string()));
    } catch (const TrainingError& e) {
      manifest["error"] = e.what();
      std::ofstream mf(run_dir / "manifest.json");
      mf << manifest.dump(2) << "\n";
      std::cerr << "training aborted (seed " << seed << "): " << e.what()
                << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error (seed " << seed << "): " << e.what() << "\n";
      return 1;
    }
    std::ofstream mf(run_dir / "manifest.json");
    mf << manifest.dump(2) << "\n";
    std::cout << "seed " << seed << " done: " << metrics_path << "\n";
  }
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, int episodes,
             std::optional<double> cvar, std::uint64_t seed,
             const std::string& dump_csv) {
  trainer::LoadedAgent agent;
  try {
    agent = trainer::load_agent(checkpoint);
  } catch (const std::exception& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  }
  if (episodes < 1) {
    std::cerr << "config error: episodes must be >= 1\n";
    return kExitConfig;
  }

  // per-episode returns (serial here: we also need the return sample for the
  // optional tail statistic)
  std::vector<double> returns(episodes);
  long overspeed = 0, total_steps = 0;
  const bool risky = agent.env_name == "risky_drive";
  std::vector<env::Transition> trajectory;
  std::unique_ptr<env::Env> e = env::make_env(agent.env_name);
  for (int ep = 0; ep < episodes; ++ep) {
    Rng rng(mix64(seed, 0x6570ULL, static_cast<std::uint64_t>(ep)));
    std::vector<double> obs = e->reset(mix64(seed, static_cast<std::uint64_t>(ep)));
    double total = 0.0;
    bool done = false;
    while (!done) {
      if (risky && obs[0] > env::RiskyDrive::kThreshold) overspeed += 1;
      total_steps += 1;
      const std::vector<double> xi =
          agent.state.policy->sample_noise(actor::NoiseMode::kEval, rng);
      const std::vector<double> action =
          agent.state.policy->act(agent.state.normalizer.normalize(obs), xi);
      const env::StepResult sr = e->step(action);
      if (!dump_csv.empty() && ep == 0)
        trajectory.push_back({obs, action, sr.reward, sr.next_state, sr.done});
      total += sr.reward;
      obs = sr.next_state;
      done = sr.done;
    }
    returns[ep] = total;
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= episodes;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= episodes;

  json out;
  out["env"] = agent.env_name;
  out["episodes"] = episodes;
  out["mean_return"] = mean;
  out["std_return"] = std::sqrt(var);
  if (risky)
    out["overspeed_fraction"] =
        total_steps > 0 ? static_cast<double>(overspeed) / total_steps : 0.0;
  if (cvar) {
    // empirical lower-tail mean of the episode returns
    if (!(*cvar > 0.0 && *cvar <= 1.0)) {
      std::cerr << "config error: cvar level must be in (0, 1]\n";
      return kExitConfig;
    }
    std::vector<double> sorted = returns;
    std::sort(sorted.begin(), sorted.end());
    const int tail = std::max(1, static_cast<int>(std::floor(*cvar * episodes)));
    double acc = 0.0;
    for (int i = 0; i < tail; ++i) acc += sorted[i];
    out["cvar_level"] = *cvar;
    out["return_cvar"] = acc / tail;
  }
  if (!dump_csv.empty())
    env::dump_trajectory_csv(dump_csv, e->spec(), trajectory);
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& csvs, const std::string& out_path,
             int window) {
  try {
    std::vector<Series> series;
    for (const std::string& path : csvs)
      series.push_back(smooth_series(read_eval_series(path), window));
    write_svg_chart(out_path, series, "environment step", "evaluation return");
  } catch (const std::exception& e) {
    std::cerr << "plot error: " << e.what() << "\n";
    return kExitData;
  }
  std::cout << out_path << "\n";
  return kExitOk;
}

int cmd_bimodality(const std::string& checkpoint, int n_samples,
                   std::uint64_t seed) {
  trainer::LoadedAgent agent;
  try {
    agent = trainer::load_agent(checkpoint);
  } catch (const std::exception& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  }
  if (agent.env_name != "bimodal_bandit") {
    std::cerr << "checkpoint error: bimodality analysis expects a "
                 "bimodal_bandit checkpoint (got "
              << agent.env_name << ")\n";
    return kExitCheckpoint;
  }
  const BimodalityReport rep = analyze_bimodality(
      *agent.state.policy, agent.state.normalizer, n_samples, seed);
  json out;
  out["samples"] = rep.samples;
  out["mass_a"] = rep.mass_a;
  out["mass_b"] = rep.mass_b;
  out["center_a"] = rep.center_a;
  out["center_b"] = rep.center_b;
  out["center_dist_a"] = rep.center_dist_a;
  out["center_dist_b"] = rep.center_dist_b;
  out["within_cluster_dist"] = rep.within_dist;
  out["pass"] = rep.pass;
  std::cout << out.dump(2) << "\n";
  std::cout << (rep.pass ? "PASS" : "FAIL") << "\n";
  return kExitOk;
}

int cmd_quantiles(const std::string& checkpoint, const std::string& state_csv,
                  const std::string& action_csv, std::uint64_t seed,
                  const std::string& out_path) {
  trainer::LoadedAgent agent;
  try {
    agent = trainer::load_agent(checkpoint);
  } catch (const std::exception& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  }
  std::vector<double> state, action;
  try {
    state = parse_csv_doubles(state_csv);
    action = parse_csv_doubles(action_csv);
    const std::unique_ptr<env::Env> e = env::make_env(agent.env_name);
    if (static_cast<int>(state.size()) != e->spec().state_dim ||
        static_cast<int>(action.size()) != e->spec().action_dim)
      throw ConfigError("state/action dims do not match environment " +
                        agent.env_name);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  Rng rng(mix64(seed, 0x71ULL));
  const critic::QuantileSample q =
      critic::sample_quantiles(agent.cfg.quantiles, rng);
  const std::vector<double> atoms = agent.state.critics->online_min_atoms(
      agent.state.normalizer.normalize(state), action, q.tau_hats);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::trunc);
    if (!file) {
      std::cerr << "cannot write " << out_path << "\n";
      return kExitData;
    }
    out = &file;
  }
  (*out) << "tau_hat,z\n";
  for (size_t i = 0; i < atoms.size(); ++i)
    (*out) << fmt(q.tau_hats[i]) << ',' << fmt(atoms[i]) << "\n";
  return kExitOk;
}

int cmd_sample(const std::string& checkpoint, const std::string& state_csv,
               int n, const std::string& mode, std::uint64_t seed,
               const std::string& out_path) {
  trainer::LoadedAgent agent;
  try {
    agent = trainer::load_agent(checkpoint);
  } catch (const std::exception& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  }
  std::vector<double> state;
  actor::NoiseMode nm;
  try {
    state = parse_csv_doubles(state_csv);
    const std::unique_ptr<env::Env> e = env::make_env(agent.env_name);
    if (static_cast<int>(state.size()) != e->spec().state_dim)
      throw ConfigError("state dims do not match environment " + agent.env_name);
    if (mode == "train")
      nm = actor::NoiseMode::kTrain;
    else if (mode == "eval")
      nm = actor::NoiseMode::kEval;
    else
      throw ConfigError("mode must be 'train' or 'eval'");
    if (n < 1) throw ConfigError("n must be >= 1");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  Rng rng(mix64(seed, 0x73616dULL));
  const std::vector<double> snorm = agent.state.normalizer.normalize(state);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::trunc);
    if (!file) {
      std::cerr << "cannot write " << out_path << "\n";
      return kExitData;
    }
    out = &file;
  }
  const int d = agent.state.policy->action_dim();
  for (int i = 0; i < d; ++i) (*out) << (i ? "," : "") << "a" << i;
  (*out) << "\n";
  std::vector<double> xi(agent.state.policy->noise_dim());
  std::vector<double> a(d);
  for (int i = 0; i < n; ++i) {
    agent.state.policy->sample_noise_rows(nm, rng, 1, xi.data());
    agent.state.policy->act_rows(snorm, xi.data(), 1, a.data());
    for (int k = 0; k < d; ++k) (*out) << (k ? "," : "") << fmt(a[k]);
    (*out) << "\n";
  }
  return kExitOk;
}

}  // namespace pacer::cli
