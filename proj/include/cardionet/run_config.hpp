#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "cardionet/model.hpp"
#include "cardionet/train.hpp"

namespace cardionet {

/// Settings read from a flat `key = value` run file. Every key is optional;
/// defaults are the standard training hyperparameters.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::filesystem::path manifest;  // resolved against the config file's directory
  std::size_t train_count = 65;
  std::filesystem::path out_dir = "run";

  std::uint64_t seed() const { return train.seed; }
};

struct RunConfigKey {
  const char* key;
  const char* default_value;
  const char* meaning;
};

/// Recognized keys with their default values, for --help.
const std::vector<RunConfigKey>& run_config_keys();

/// Throws ConfigError naming the offending key and 1-based line. Relative
/// `data.manifest` and `out_dir` are taken relative to `base_dir`.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace cardionet
