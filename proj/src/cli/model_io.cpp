#include "foresit/cli/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "foresit/error.hpp"
#include "foresit/ndgrad/checkpoint.hpp"
#include "foresit/trainer/training.hpp"

namespace foresit::cli {

namespace fs = std::filesystem;

void save_model(const fs::path& dir, const ModelCheckpoint& model) {
  fs::path tmp = dir;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  nlohmann::ordered_json meta;
  meta["format"] = "foresit-model-1";
  meta["episodes"] = model.episodes;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& e : trainer::config_entries(model.config)) config[e.section][e.key] = e.value;
  meta["config"] = config;
  {
    std::ofstream out(tmp / "model.json");
    out << meta.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + (tmp / "model.json").string());
  }
  nd::save_checkpoint(tmp / "agent.bin", model.agent);
  nd::save_checkpoint(tmp / "imagination.bin", model.imagination);
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

ModelCheckpoint load_model(const fs::path& dir) {
  for (const char* name : {"model.json", "agent.bin", "imagination.bin"}) {
    if (!fs::exists(dir / name)) throw std::runtime_error("model checkpoint " + dir.string() + " has no " + name);
  }
  ModelCheckpoint model;
  std::ifstream in(dir / "model.json");
  std::ostringstream text;
  text << in.rdbuf();
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptArtifact((dir / "model.json").string() + ": " + e.what(), e.byte);
  }
  if (!meta.is_object() || meta.value("format", "") != "foresit-model-1" || !meta.contains("config") ||
      !meta["config"].is_object()) {
    throw CorruptArtifact((dir / "model.json").string() + ": not a model description", 0);
  }
  for (const auto& [section, body] : meta["config"].items()) {
    for (const auto& [key, value] : body.items()) {
      if (!value.is_string()) throw CorruptArtifact((dir / "model.json").string() + ": non-string config value", 0);
      trainer::set_config_value(model.config, section, key, value.get<std::string>());
    }
  }
  model.episodes = meta.value("episodes", std::uint64_t{0});
  model.agent = nd::load_checkpoint(dir / "agent.bin");
  model.imagination = nd::load_checkpoint(dir / "imagination.bin");
  return model;
}

eval::PolicySnapshot policy_from(const ModelCheckpoint& model) {
  eval::PolicySnapshot p;
  const auto agent_dims = trainer::agent_dims_for(model.config);
  const auto imagination_dims = trainer::imagination_dims_for(model.config);
  if (!model.agent.params.same_layout(agent::init_agent_params(agent_dims, 0))) {
    throw CorruptArtifact("agent parameters do not match the dimensions in model.json", 0);
  }
  if (!model.imagination.params.same_layout(imagination::init_imagination_params(imagination_dims, 0))) {
    throw CorruptArtifact("imagination parameters do not match the dimensions in model.json", 0);
  }
  p.mode = model.config.mode;
  p.agent = trainer::agent_dims_for(model.config);
  p.imagination = trainer::imagination_dims_for(model.config);
  p.agent_params = model.agent.params;
  p.imagination_params = model.imagination.params;
  p.env = model.config.env;
  p.int_interval = model.config.int_interval;
  p.rnd_variance = model.config.rnd_variance;
  return p;
}

}  // namespace foresit::cli
