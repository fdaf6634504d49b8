#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pacer/actor/policy.hpp"
#include "pacer/cli/config.hpp"
#include "pacer/env/normalizer.hpp"

namespace pacer::cli {

// exit codes shared by all subcommands
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCheckpoint = 3;
constexpr int kExitData = 4;

struct BimodalityReport {
  double mass_a = 0.0;  // cluster assigned to (+c, +c)
  double mass_b = 0.0;
  std::vector<double> center_a;
  std::vector<double> center_b;
  double center_dist_a = 0.0;  // distance of each cluster mean to its optimum
  double center_dist_b = 0.0;
  double within_dist = 0.0;  // mean distance of samples to their cluster mean
  int samples = 0;
  bool pass = false;
};

// Samples actions at the bandit state in eval mode, splits them by nearest
// reward mode, and passes when both clusters hold at least 20% of the mass
// with means within 0.15 of the optima.
BimodalityReport analyze_bimodality(const actor::Policy& policy,
                                    const env::ObsNormalizer& normalizer,
                                    int n_samples, std::uint64_t seed);

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides);
int cmd_eval(const std::string& checkpoint, int episodes,
             std::optional<double> cvar, std::uint64_t seed,
             const std::string& dump_csv);
int cmd_plot(const std::vector<std::string>& csvs, const std::string& out_path,
             int window);
int cmd_bimodality(const std::string& checkpoint, int n_samples,
                   std::uint64_t seed);
int cmd_quantiles(const std::string& checkpoint, const std::string& state_csv,
                  const std::string& action_csv, std::uint64_t seed,
                  const std::string& out_path);
int cmd_sample(const std::string& checkpoint, const std::string& state_csv,
               int n, const std::string& mode, std::uint64_t seed,
               const std::string& out_path);

// parses "a,b,c" into doubles (CLI vector arguments)
std::vector<double> parse_csv_doubles(const std::string& text);

}  // namespace pacer::cli
