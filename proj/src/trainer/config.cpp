#include "foresit/trainer/config.hpp"

#include <charconv>
#include <functional>

#include "foresit/error.hpp"

namespace foresit::trainer {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view field, std::string_view text) {
  T out{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError(std::string(field), "field '" + std::string(field) + "': cannot parse '" + std::string(text) + "'");
  }
  return out;
}

bool parse_bool(std::string_view field, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(std::string(field), "field '" + std::string(field) + "': expected true/false, got '" +
                                            std::string(text) + "'");
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, std::string_view field, std::string_view)> set;
};

template <typename T>
Field number(const char* section, const char* key, T TrainConfig::*member) {
  return {section, key, [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*member);
            else return std::to_string(c.*member);
          },
          [member](TrainConfig& c, std::string_view f, std::string_view v) { c.*member = parse_number<T>(f, v); }};
}

template <typename Sub, typename T>
Field nested(const char* section, const char* key, Sub TrainConfig::*outer, T Sub::*member) {
  return {section, key, [outer, member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*outer.*member);
            else return std::to_string(c.*outer.*member);
          },
          [outer, member](TrainConfig& c, std::string_view f, std::string_view v) {
            c.*outer.*member = parse_number<T>(f, v);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      nested("env", "window", &TrainConfig::env, &grid::EnvConfig::window),
      nested("env", "success_radius", &TrainConfig::env, &grid::EnvConfig::success_radius),
      nested("env", "max_steps", &TrainConfig::env, &grid::EnvConfig::max_steps),
      nested("env", "success_reward", &TrainConfig::env, &grid::EnvConfig::success_reward),
      nested("env", "step_penalty", &TrainConfig::env, &grid::EnvConfig::step_penalty),
      nested("env", "size_min", &TrainConfig::sizes, &grid::SizeRange::min),
      nested("env", "size_max", &TrainConfig::sizes, &grid::SizeRange::max),
      nested("env", "train_layouts", &TrainConfig::splits, &grid::SplitSizes::train),
      nested("env", "val_layouts", &TrainConfig::splits, &grid::SplitSizes::val),
      nested("env", "test_layouts", &TrainConfig::splits, &grid::SplitSizes::test),
      number("env", "layout_seed", &TrainConfig::layout_seed),
      number("agent", "hidden", &TrainConfig::hidden),
      number("agent", "value_hidden", &TrainConfig::value_hidden),
      number("agent", "bottleneck", &TrainConfig::bottleneck),
      {"train", "mode", [](const TrainConfig& c) { return std::string(mode_name(c.mode)); },
       [](TrainConfig& c, std::string_view, std::string_view v) { c.mode = parse_mode(v); }},
      number("train", "workers", &TrainConfig::workers),
      number("train", "gamma", &TrainConfig::gamma),
      number("train", "entropy_beta", &TrainConfig::entropy_beta),
      number("train", "lr", &TrainConfig::lr),
      number("train", "max_grad_norm", &TrainConfig::max_grad_norm),
      number("train", "episodes", &TrainConfig::episodes),
      number("train", "seed", &TrainConfig::seed),
      number("train", "ckpt_every", &TrainConfig::ckpt_every),
      number("train", "int_interval", &TrainConfig::int_interval),
      number("foresit", "imagination_lr", &TrainConfig::imagination_lr),
      number("foresit", "buffer_capacity", &TrainConfig::buffer_capacity),
      number("foresit", "sigma2_max", &TrainConfig::sigma2_max),
      number("foresit", "sr_window", &TrainConfig::sr_window),
      number("foresit", "epochs", &TrainConfig::imagination_epochs),
      number("foresit", "minibatch", &TrainConfig::imagination_minibatch),
      number("foresit", "rnd_variance", &TrainConfig::rnd_variance),
      number("eval", "seeds", &TrainConfig::eval_seeds),
      {"eval", "split_on_agent_path", [](const TrainConfig& c) { return std::string(c.split_on_agent_path ? "true" : "false"); },
       [](TrainConfig& c, std::string_view f, std::string_view v) { c.split_on_agent_path = parse_bool(f, v); }},
  };
  return table;
}

void require(bool ok, const char* field, const std::string& why) {
  if (!ok) throw ConfigError(field, std::string("field '") + field + "': " + why);
}

}  // namespace

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::Baseline: return "baseline";
    case Mode::Foresit: return "foresit";
    case Mode::Rnd: return "rnd";
    case Mode::Int: return "int";
    case Mode::Att: return "att";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : {Mode::Baseline, Mode::Foresit, Mode::Rnd, Mode::Int, Mode::Att}) {
    if (mode_name(m) == name) return m;
  }
  throw ConfigError("train.mode", "field 'train.mode': unknown mode '" + std::string(name) +
                                      "' (expected baseline, foresit, rnd, int or att)");
}

bool uses_attention(Mode mode) { return mode != Mode::Baseline; }

bool trains_imagination(Mode mode) { return mode == Mode::Foresit || mode == Mode::Int || mode == Mode::Att; }

void TrainConfig::validate() const {
  require(env.window >= 1 && env.window % 2 == 1, "env.window", "must be a positive odd integer");
  require(env.success_radius >= 1, "env.success_radius", "must be >= 1");
  require(env.max_steps >= 1, "env.max_steps", "must be >= 1");
  require(env.success_reward > 0.0, "env.success_reward", "must be positive");
  require(env.step_penalty <= 0.0, "env.step_penalty", "must be <= 0");
  require(sizes.min >= 5, "env.size_min", "must be >= 5");
  require(sizes.max >= sizes.min, "env.size_max", "must be >= env.size_min");
  require(splits.train >= 1, "env.train_layouts", "must be >= 1");
  require(splits.val >= 1, "env.val_layouts", "must be >= 1");
  require(splits.test >= 1, "env.test_layouts", "must be >= 1");
  require(hidden >= 4, "agent.hidden", "must be >= 4");
  require(value_hidden >= 1, "agent.value_hidden", "must be >= 1");
  require(workers >= 1, "train.workers", "must be >= 1");
  require(gamma > 0.0 && gamma <= 1.0, "train.gamma", "must lie in (0, 1]");
  require(entropy_beta >= 0.0, "train.entropy_beta", "must be >= 0");
  require(lr > 0.0, "train.lr", "must be positive");
  require(max_grad_norm >= 0.0, "train.max_grad_norm", "must be >= 0");
  require(episodes >= 1, "train.episodes", "must be >= 1");
  require(int_interval >= 1, "train.int_interval", "must be >= 1");
  require(imagination_lr > 0.0, "foresit.imagination_lr", "must be positive");
  require(buffer_capacity >= 1, "foresit.buffer_capacity", "must be >= 1");
  require(sigma2_max >= 0.0, "foresit.sigma2_max", "must be >= 0");
  require(sr_window >= 1, "foresit.sr_window", "must be >= 1");
  require(imagination_epochs >= 1, "foresit.epochs", "must be >= 1");
  require(imagination_minibatch >= 1, "foresit.minibatch", "must be >= 1");
  require(rnd_variance > 0.0, "foresit.rnd_variance", "must be positive");
  require(eval_seeds >= 1, "eval.seeds", "must be >= 1");
}

std::vector<ConfigEntry> config_entries(const TrainConfig& cfg) {
  std::vector<ConfigEntry> out;
  for (const auto& f : fields()) out.push_back({f.section, f.key, f.get(cfg)});
  return out;
}

void set_config_value(TrainConfig& cfg, std::string_view section, std::string_view key, std::string_view value) {
  const std::string field = std::string(section) + "." + std::string(key);
  for (const auto& f : fields()) {
    if (section == f.section && key == f.key) {
      f.set(cfg, field, value);
      return;
    }
  }
  throw ConfigError(field, "unknown config field '" + field + "'");
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  const auto ea = config_entries(a);
  const auto eb = config_entries(b);
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (ea[i].value != eb[i].value) return false;
  }
  return true;
}

}  // namespace foresit::trainer
