#include "pacer/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "pacer/errors.hpp"

namespace pacer::cli {

using nlohmann::json;

void RunConfig::validate() const {
  if (env.empty()) throw ConfigError("config: missing key 'env'");
  env::make_env(env);  // throws on unknown name
  if (seeds.empty()) throw ConfigError("config: 'seeds' must be nonempty");
  train.validate();
}

std::string RunConfig::resolved_run_name() const {
  if (!run_name.empty()) return run_name;
  std::string name = env;
  if (train.policy_kind != trainer::PolicyKind::kPushForward ||
      train.regularizer != trainer::RegularizerKind::kMmd) {
    name += "_" + trainer::to_string(train.policy_kind) + "_" +
            trainer::to_string(train.regularizer);
  }
  if (train.utility.kind == utility::Kind::kDistortion &&
      train.utility.cvar_level < 1.0)
    name += "_cvar" + std::to_string(train.utility.cvar_level).substr(0, 4);
  return name;
}

namespace {
std::string utility_kind_name(utility::Kind k) {
  return k == utility::Kind::kDistortion ? "distortion" : "reward_reshape";
}
utility::Kind utility_kind_from(const std::string& s) {
  if (s == "distortion") return utility::Kind::kDistortion;
  if (s == "reward_reshape") return utility::Kind::kRewardReshape;
  throw ConfigError("config: unknown utility.kind '" + s + "'");
}
std::string reshape_name(utility::ReshapeMap m) {
  switch (m) {
    case utility::ReshapeMap::kIdentity:
      return "identity";
    case utility::ReshapeMap::kTanh:
      return "tanh";
    case utility::ReshapeMap::kScale:
      return "scale";
  }
  return "identity";
}
utility::ReshapeMap reshape_from(const std::string& s) {
  if (s == "identity") return utility::ReshapeMap::kIdentity;
  if (s == "tanh") return utility::ReshapeMap::kTanh;
  if (s == "scale") return utility::ReshapeMap::kScale;
  throw ConfigError("config: unknown utility.reshape '" + s + "'");
}
}  // namespace

std::string to_json_text(const RunConfig& cfg) {
  json j;
  j["env"] = cfg.env;
  j["seeds"] = cfg.seeds;
  j["out_dir"] = cfg.out_dir;
  j["run_name"] = cfg.run_name;
  const trainer::TrainConfig& t = cfg.train;
  j["gamma"] = t.gamma;
  j["batch_size"] = t.batch_size;
  j["quantiles"] = t.quantiles;
  j["lr_actor"] = t.lr_actor;
  j["lr_critic"] = t.lr_critic;
  j["lr_alpha"] = t.lr_alpha;
  j["mmd.n_samples"] = t.mmd_samples;
  j["mmd.bandwidth_sq"] = t.mmd_bandwidth_sq;
  j["beta_step"] = t.beta_step;
  j["beta_min"] = t.beta_min;
  j["beta_init"] = t.beta_init;
  j["update_every"] = t.update_every;
  j["total_steps"] = t.total_steps;
  j["warmup"] = t.warmup;
  j["eval_every"] = t.eval_every;
  j["eval_episodes"] = t.eval_episodes;
  j["checkpoint_every"] = t.checkpoint_every;
  j["policy_delay"] = t.policy_delay;
  j["polyak"] = t.polyak;
  j["kappa"] = t.kappa;
  j["alpha_min"] = t.alpha_min;
  j["alpha_max"] = t.alpha_max;
  j["alpha_init"] = t.alpha_init;
  j["reward_scale"] = t.reward_scale;
  j["replay_capacity"] = t.replay_capacity;
  j["hidden"] = t.hidden;
  j["noise_dim"] = t.noise_dim;
  if (std::isnan(t.stop_return))
    j["stop_return"] = nullptr;
  else
    j["stop_return"] = t.stop_return;
  j["utility.kind"] = utility_kind_name(t.utility.kind);
  j["utility.cvar_level"] = t.utility.cvar_level;
  j["utility.reshape"] = reshape_name(t.utility.reshape);
  j["utility.reshape_scale"] = t.utility.reshape_scale;
  j["ablation.policy"] = trainer::to_string(t.policy_kind);
  j["ablation.regularizer"] = trainer::to_string(t.regularizer);
  j["epsilon"] = t.epsilon;
  j["parallel"] = t.exec == trainer::Exec::kParallel;
  j["timing"] = t.timing;
  return j.dump(2) + "\n";
}

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid json: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  RunConfig cfg;
  trainer::TrainConfig& t = cfg.train;
  std::set<std::string> seen;
  auto take = [&](const char* key, auto&& setter) {
    if (j.contains(key)) {
      try {
        setter(j.at(key));
      } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) +
                          "': " + e.what());
      }
      seen.insert(key);
    }
  };

  take("env", [&](const json& v) { cfg.env = v.get<std::string>(); });
  take("seeds", [&](const json& v) {
    cfg.seeds = v.get<std::vector<std::uint64_t>>();
  });
  take("out_dir", [&](const json& v) { cfg.out_dir = v.get<std::string>(); });
  take("run_name", [&](const json& v) { cfg.run_name = v.get<std::string>(); });
  take("gamma", [&](const json& v) { t.gamma = v.get<double>(); });
  take("batch_size", [&](const json& v) { t.batch_size = v.get<int>(); });
  take("quantiles", [&](const json& v) { t.quantiles = v.get<int>(); });
  take("lr_actor", [&](const json& v) { t.lr_actor = v.get<double>(); });
  take("lr_critic", [&](const json& v) { t.lr_critic = v.get<double>(); });
  take("lr_alpha", [&](const json& v) { t.lr_alpha = v.get<double>(); });
  take("mmd.n_samples", [&](const json& v) { t.mmd_samples = v.get<int>(); });
  take("mmd.bandwidth_sq",
       [&](const json& v) { t.mmd_bandwidth_sq = v.get<double>(); });
  take("beta_step", [&](const json& v) { t.beta_step = v.get<double>(); });
  take("beta_min", [&](const json& v) { t.beta_min = v.get<double>(); });
  take("beta_init", [&](const json& v) { t.beta_init = v.get<double>(); });
  take("update_every", [&](const json& v) { t.update_every = v.get<int>(); });
  take("total_steps", [&](const json& v) { t.total_steps = v.get<long>(); });
  take("warmup", [&](const json& v) { t.warmup = v.get<int>(); });
  take("eval_every", [&](const json& v) { t.eval_every = v.get<int>(); });
  take("eval_episodes", [&](const json& v) { t.eval_episodes = v.get<int>(); });
  take("checkpoint_every",
       [&](const json& v) { t.checkpoint_every = v.get<long>(); });
  take("policy_delay", [&](const json& v) { t.policy_delay = v.get<int>(); });
  take("polyak", [&](const json& v) { t.polyak = v.get<double>(); });
  take("kappa", [&](const json& v) { t.kappa = v.get<double>(); });
  take("alpha_min", [&](const json& v) { t.alpha_min = v.get<double>(); });
  take("alpha_max", [&](const json& v) { t.alpha_max = v.get<double>(); });
  take("alpha_init", [&](const json& v) { t.alpha_init = v.get<double>(); });
  take("reward_scale", [&](const json& v) { t.reward_scale = v.get<double>(); });
  take("replay_capacity",
       [&](const json& v) { t.replay_capacity = v.get<std::size_t>(); });
  take("hidden", [&](const json& v) { t.hidden = v.get<std::vector<int>>(); });
  take("noise_dim", [&](const json& v) { t.noise_dim = v.get<int>(); });
  take("stop_return", [&](const json& v) {
    if (v.is_null())
      t.stop_return = std::numeric_limits<double>::quiet_NaN();
    else
      t.stop_return = v.get<double>();
  });
  take("utility.kind", [&](const json& v) {
    t.utility.kind = utility_kind_from(v.get<std::string>());
  });
  take("utility.cvar_level",
       [&](const json& v) { t.utility.cvar_level = v.get<double>(); });
  take("utility.reshape", [&](const json& v) {
    t.utility.reshape = reshape_from(v.get<std::string>());
  });
  take("utility.reshape_scale",
       [&](const json& v) { t.utility.reshape_scale = v.get<double>(); });
  take("ablation.policy", [&](const json& v) {
    t.policy_kind = trainer::policy_kind_from_string(v.get<std::string>());
  });
  take("ablation.regularizer", [&](const json& v) {
    t.regularizer = trainer::regularizer_from_string(v.get<std::string>());
  });
  take("epsilon", [&](const json& v) { t.epsilon = v.get<double>(); });
  take("parallel", [&](const json& v) {
    t.exec = v.get<bool>() ? trainer::Exec::kParallel : trainer::Exec::kSerial;
  });
  take("timing", [&](const json& v) { t.timing = v.get<bool>(); });

  for (const auto& [key, value] : j.items()) {
    if (!seen.contains(key))
      throw ConfigError("config: unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("config: cannot write '" + path + "'");
  out << to_json_text(cfg);
}

RunConfig apply_overrides(const RunConfig& cfg,
                          const std::vector<std::string>& overrides) {
  json j = json::parse(to_json_text(cfg));
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + ov + "' is not key=value");
    const std::string key = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    if (!j.contains(key))
      throw ConfigError("override references unknown key '" + key + "'");
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;  // plain string
    }
    j[key] = parsed;
  }
  return config_from_json_text(j.dump());
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = to_json_text(cfg);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  return h;
}

}  // namespace pacer::cli
