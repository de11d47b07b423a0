#include "foresit/cli/config_file.hpp"

#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "foresit/error.hpp"

namespace foresit::cli {

namespace {

// Boost's INI reader only understands ';' comments.
std::string strip_hash_comments(std::string_view text) {
  std::string out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') line.clear();
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace

LoadedConfig parse_config_text(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in(strip_hash_comments(text));
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config", "config parse error on line " + std::to_string(e.line()) + ": " + e.message());
  }
  LoadedConfig out;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(section, "key '" + section + "' appears outside any [section]");
    }
    for (const auto& [key, value] : body) {
      trainer::set_config_value(out.config, section, key, value.data());
      out.provided.insert(section + "." + key);
    }
  }
  return out;
}

LoadedConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

void apply_override(LoadedConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw ConfigError(std::string(assignment), "override '" + std::string(assignment) + "' is not section.key=value");
  }
  const auto section = assignment.substr(0, dot);
  const auto key = assignment.substr(dot + 1, eq - dot - 1);
  trainer::set_config_value(cfg.config, section, key, assignment.substr(eq + 1));
  cfg.provided.insert(std::string(section) + "." + std::string(key));
}

std::string serialize_config(const trainer::TrainConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& e : trainer::config_entries(cfg)) {
    if (e.section != section) {
      if (!section.empty()) out += '\n';
      section = e.section;
      out += "[" + section + "]\n";
    }
    out += e.key + " = " + e.value + "\n";
  }
  return out;
}

void require_fields(const LoadedConfig& cfg) {
  for (const char* field : kRequiredFields) {
    if (!cfg.provided.contains(field)) {
      throw ConfigError(field, std::string("required field '") + field + "' is not set (config file or flag)");
    }
  }
}

}  // namespace foresit::cli
