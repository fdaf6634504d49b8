#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pacer/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pacer: distributional actor-critic with a push-forward policy, "
               "implicit quantile critics, and an MMD exploration regularizer"};
  app.require_subcommand(1);

  // train
  std::string config_path;
  std::vector<std::string> overrides;
  CLI::App* train = app.add_subcommand("train", "run training per config seed");
  train->add_option("--config", config_path, "json config file")->required();
  train->add_option("--override", overrides,
                    "key=value config overrides (repeatable)");

  // eval
  std::string ckpt;
  int episodes = 10;
  double cvar_level = 0.0;
  bool has_cvar = false;
  std::uint64_t seed = 0;
  std::string dump_csv;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", ckpt, "checkpoint path")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes");
  CLI::Option* cvar_opt =
      eval->add_option("--cvar", cvar_level, "report the empirical return CVaR");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--dump-csv", dump_csv, "write first episode as csv");

  // plot
  std::vector<std::string> csvs;
  std::string out_path = "plot.svg";
  int window = 100;
  CLI::App* plot = app.add_subcommand("plot", "render eval curves as svg");
  plot->add_option("--csv", csvs, "metrics csv files")->required();
  plot->add_option("--out", out_path, "output svg path");
  plot->add_option("--window", window, "smoothing window (rows)");

  // bimodality
  std::string bi_ckpt;
  int bi_samples = 100000;
  std::uint64_t bi_seed = 0;
  CLI::App* bim = app.add_subcommand(
      "bimodality", "cluster sampled bandit actions around the two optima");
  bim->add_option("--checkpoint", bi_ckpt, "bandit checkpoint")->required();
  bim->add_option("--samples", bi_samples, "action samples");
  bim->add_option("--seed", bi_seed, "sampling seed");

  // quantiles
  std::string q_ckpt, q_state, q_action, q_out;
  std::uint64_t q_seed = 0;
  CLI::App* quant = app.add_subcommand(
      "quantiles", "dump (tau_hat, z) pairs of the twin-min critic");
  quant->add_option("--checkpoint", q_ckpt, "checkpoint path")->required();
  quant->add_option("--state", q_state, "state as comma-separated values")
      ->required();
  quant->add_option("--action", q_action, "action as comma-separated values")
      ->required();
  quant->add_option("--seed", q_seed, "quantile sampling seed");
  quant->add_option("--out", q_out, "output csv (stdout when omitted)");

  // sample
  std::string s_ckpt, s_state, s_out, s_mode = "eval";
  int s_n = 1000;
  std::uint64_t s_seed = 0;
  CLI::App* samp =
      app.add_subcommand("sample", "dump policy action samples for a state");
  samp->add_option("--checkpoint", s_ckpt, "checkpoint path")->required();
  samp->add_option("--state", s_state, "state as comma-separated values")
      ->required();
  samp->add_option("--n", s_n, "number of samples");
  samp->add_option("--mode", s_mode, "noise mode: train|eval");
  samp->add_option("--seed", s_seed, "sampling seed");
  samp->add_option("--out", s_out, "output csv (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pacer::cli::kExitConfig;
  }

  if (*train) return pacer::cli::cmd_train(config_path, overrides);
  if (*eval) {
    std::optional<double> cvar;
    if (cvar_opt->count() > 0) cvar = cvar_level;
    (void)has_cvar;
    return pacer::cli::cmd_eval(ckpt, episodes, cvar, seed, dump_csv);
  }
  if (*plot) return pacer::cli::cmd_plot(csvs, out_path, window);
  if (*bim) return pacer::cli::cmd_bimodality(bi_ckpt, bi_samples, bi_seed);
  if (*quant)
    return pacer::cli::cmd_quantiles(q_ckpt, q_state, q_action, q_seed, q_out);
  if (*samp)
    return pacer::cli::cmd_sample(s_ckpt, s_state, s_n, s_mode, s_seed, s_out);
  return pacer::cli::kExitConfig;
}
