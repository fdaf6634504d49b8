#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pacer/trainer/trainer.hpp"

namespace pacer::cli {

// Experiment description: the full trainer configuration plus environment
// name, seed list, and output directory. Serialized as flat JSON with dotted
// keys; unknown keys are rejected so a config file is always authoritative.
struct RunConfig {
  std::string env;
  std::vector<std::uint64_t> seeds = {0};
  std::string out_dir = "runs";
  std::string run_name;  // defaults to env + variant
  trainer::TrainConfig train;

  void validate() const;
  std::string resolved_run_name() const;
};

std::string to_json_text(const RunConfig& cfg);
RunConfig config_from_json_text(const std::string& text);

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

// key=value pairs; values parse as JSON when possible, else as strings
RunConfig apply_overrides(const RunConfig& cfg,
                          const std::vector<std::string>& overrides);

// FNV-1a over the canonical JSON text (content hash for manifests)
std::uint64_t config_hash(const RunConfig& cfg);
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace pacer::cli
