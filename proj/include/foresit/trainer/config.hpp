#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "foresit/gridhome/env.hpp"
#include "foresit/gridhome/layout.hpp"

namespace foresit::trainer {

/// Which conditioning path is active.
///   baseline: I = 0, value reads s_t directly (no attention)
///   foresit:  I = f_w([s0 : g]) + noise, attention-residual value
///   rnd:      I = tanh(N(0, rnd_variance)), no imagination training
///   int:      I re-imagined from s_t every int_interval steps
///   att:      imagination trained on the attended state s*_T instead of s_{t*}
enum class Mode { Baseline, Foresit, Rnd, Int, Att };

std::string_view mode_name(Mode mode);
/// Throws ConfigError("train.mode") on unknown names.
Mode parse_mode(std::string_view name);
bool uses_attention(Mode mode);
bool trains_imagination(Mode mode);

struct TrainConfig {
  // [env]
  grid::EnvConfig env;
  grid::SizeRange sizes;
  grid::SplitSizes splits;
  std::uint64_t layout_seed = 2024;

  // [agent]
  std::size_t hidden = 128;
  std::size_t value_hidden = 64;
  std::size_t bottleneck = 0;  // 0 selects hidden / 4

  // [train]
  Mode mode = Mode::Foresit;
  int workers = 1;
  double gamma = 0.99;
  double entropy_beta = 0.01;
  double lr = 1e-4;
  double max_grad_norm = 40.0;  // 0 disables clipping
  std::uint64_t episodes = 1000;  // MAX_EPISODE, summed over workers
  std::uint64_t seed = 1;
  std::uint64_t ckpt_every = 0;  // 0 disables periodic checkpoints
  int int_interval = 10;

  // [foresit]
  double imagination_lr = 1e-4;
  std::size_t buffer_capacity = 32;
  double sigma2_max = 0.9;
  std::size_t sr_window = 100;
  std::size_t imagination_epochs = 10;
  std::size_t imagination_minibatch = 1;
  double rnd_variance = 0.5;

  // [eval]
  std::size_t eval_seeds = 5;
  bool split_on_agent_path = false;

  /// Throws ConfigError naming the first invalid field ("section.key").
  void validate() const;
};

struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
};

/// Every field in a fixed order, values formatted so that parsing them back
/// reproduces the config exactly.
std::vector<ConfigEntry> config_entries(const TrainConfig& cfg);
/// Assign one field from text. Throws ConfigError for unknown keys or bad values.
void set_config_value(TrainConfig& cfg, std::string_view section, std::string_view key, std::string_view value);

bool operator==(const TrainConfig& a, const TrainConfig& b);

}  // namespace foresit::trainer
