#pragma once

#include "eud/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace eud
{
enum class OptimizerKind {
  Adam,
  Sgd,
};

struct TrainConfig
{
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  int patience = 5;  // 0 disables early stopping
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct RunConfig
{
  Hyperparams hyper;
  TrainConfig train;
};

class ConfigError : public std::runtime_error
{
public:
  ConfigError(const std::string & key, const std::string & message)
  : std::runtime_error(key.empty() ? message : "config key '" + key + "': " + message), key_(key)
  {
  }
  const std::string & key() const { return key_; }

private:
  std::string key_;
};

/// Sets one dotted key such as "model.lambda" or "train.seed".
void apply_setting(RunConfig & config, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig read_config_file(const std::string & path, RunConfig base = {});

/// Canonical snapshot of every key, one "key=value" per line, sorted.
std::string format_config(const RunConfig & config);

}  // namespace eud
