#include "foresit/cli/commands.hpp"

#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "foresit/cli/manifest.hpp"
#include "foresit/cli/model_io.hpp"
#include "foresit/error.hpp"

namespace foresit::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

struct SignalGuard {
  using Handler = void (*)(int);
  Handler previous;
  SignalGuard() : previous(std::signal(SIGINT, on_sigint)) { g_interrupted.store(false); }
  ~SignalGuard() { std::signal(SIGINT, previous); }
};

std::string join_args(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

const std::vector<grid::RoomLayout>& split_of(const grid::LayoutSplits& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  throw ConfigError("split", "unknown split '" + name + "' (expected train, val or test)");
}

// Shared flag set for commands that build a training config.
struct ConfigFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> mode;
  std::optional<int> workers;
  std::optional<std::uint64_t> episodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ckpt_every;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "INI config file");
    app->add_option("--mode", mode, "baseline, foresit, rnd, int or att");
    app->add_option("--workers", workers, "number of asynchronous workers");
    app->add_option("--episodes", episodes, "total training episodes over all workers");
    app->add_option("--seed", seed, "global seed (overrides FORESIT_SEED and the config)");
    app->add_option("--ckpt-every", ckpt_every, "checkpoint every N episodes (0 disables)");
    app->add_option("--set", overrides, "section.key=value override, repeatable");
  }

  LoadedConfig resolve() const {
    LoadedConfig cfg = config_path ? load_config_file(*config_path) : LoadedConfig{};
    if (const char* env = std::getenv("FORESIT_SEED"); env && *env) {
      trainer::set_config_value(cfg.config, "train", "seed", env);
      cfg.provided.insert("train.seed");
    }
    for (const auto& o : overrides) apply_override(cfg, o);
    auto set = [&cfg](const char* key, const std::string& value) {
      trainer::set_config_value(cfg.config, "train", key, value);
      cfg.provided.insert(std::string("train.") + key);
    };
    if (mode) set("mode", *mode);
    if (workers) set("workers", std::to_string(*workers));
    if (episodes) set("episodes", std::to_string(*episodes));
    if (seed) set("seed", std::to_string(*seed));
    if (ckpt_every) set("ckpt_every", std::to_string(*ckpt_every));
    return cfg;
  }
};

ModelCheckpoint snapshot_model(trainer::Trainer& trainer, std::uint64_t episodes) {
  return {trainer.config(), trainer.agent_store().state(), trainer.imagination_store().state(), episodes};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

grid::LayoutSplits layouts_for(const trainer::TrainConfig& cfg, const std::optional<fs::path>& dir) {
  if (dir) return grid::load_splits(*dir);
  return grid::generate_splits(cfg.layout_seed, cfg.sizes, cfg.splits);
}

TrainOutcome train_to_dir(const trainer::TrainConfig& cfg, const fs::path& run_dir, const grid::LayoutSplits& layouts,
                          const std::atomic<bool>* stop, std::string command,
                          const trainer::ActionOverride& action_override) {
  cfg.validate();
  fs::create_directories(run_dir / "ckpt");
  fs::create_directories(run_dir / "eval");
  RunManifest manifest = make_manifest(cfg, std::move(command));
  write_manifest(manifest, run_dir);

  std::ofstream metrics(run_dir / "metrics.jsonl");
  if (!metrics) throw std::runtime_error("cannot write " + (run_dir / "metrics.jsonl").string());
  trainer::Trainer trainer(cfg, layouts.train);
  trainer::TrainHooks hooks;
  hooks.action_override = action_override;
  hooks.stop = stop;
  hooks.metrics = [&metrics](const nlohmann::ordered_json& record) { metrics << record.dump() << '\n'; };
  hooks.checkpoint = [&trainer, &run_dir](std::uint64_t done) {
    save_model(run_dir / "ckpt" / ("ep-" + std::to_string(done)), snapshot_model(trainer, done));
  };

  TrainOutcome outcome;
  outcome.run_dir = run_dir;
  outcome.summary = trainer.run(hooks);
  metrics.flush();
  outcome.final_checkpoint = run_dir / "ckpt" / "final";
  save_model(outcome.final_checkpoint, snapshot_model(trainer, outcome.summary.episodes));

  manifest.finished = utc_timestamp();
  manifest.episodes_done = outcome.summary.episodes;
  manifest.interrupted = outcome.summary.interrupted;
  manifest.final_checkpoint = "ckpt/final";
  write_manifest(manifest, run_dir);
  return outcome;
}

eval::EvalReport eval_model(const fs::path& model_dir, const std::vector<grid::RoomLayout>& layouts,
                            const eval::EvalOptions& options, const std::string& split, const fs::path& out_dir,
                            const std::optional<fs::path>& csv) {
  const ModelCheckpoint model = load_model(model_dir);
  const auto report = eval::evaluate(policy_from(model), layouts, options);
  fs::create_directories(out_dir);
  const std::string name = "report-" + split + "-" + (options.greedy ? "greedy" : "sampled");
  write_text(out_dir / (name + ".json"), eval::to_json(report).dump(2) + "\n");
  write_text(out_dir / (name + ".txt"), eval::format_table(report));
  if (csv) eval::write_csv(report, *csv);
  return report;
}

namespace {

int cmd_train(ConfigFlags& flags, const std::optional<std::string>& out, const std::string& runs_root,
              const std::optional<std::string>& layouts_dir, const std::string& command) {
  LoadedConfig loaded = flags.resolve();
  require_fields(loaded);
  loaded.config.validate();
  const auto layouts = layouts_for(loaded.config, layouts_dir ? std::optional<fs::path>(*layouts_dir) : std::nullopt);
  if (const auto n = grid::layout_generation_incidents()) {
    std::clog << "layout generation: " << n << " rejected attempts regenerated with perturbed seeds\n";
  }
  const fs::path run_dir = out ? fs::path(*out) : default_run_dir(runs_root, make_manifest(loaded.config, command));
  SignalGuard guard;
  const auto outcome = train_to_dir(loaded.config, run_dir, layouts, &g_interrupted, command);
  std::cout << "run directory: " << outcome.run_dir.string() << '\n'
            << "episodes: " << outcome.summary.episodes << (outcome.summary.interrupted ? " (interrupted)" : "") << '\n'
            << "global success rate (last " << loaded.config.sr_window << "): " << outcome.summary.global_sr << '\n'
            << "final checkpoint: " << outcome.final_checkpoint.string() << '\n';
  return kExitOk;
}

struct EvalFlags {
  std::string model;
  std::string split = "val";
  std::optional<std::string> layouts_dir;
  bool greedy = false;
  std::size_t seeds = 0;
  std::uint64_t eval_seed = 0;
  bool agent_path_split = false;

  void attach(CLI::App* app) {
    app->add_option("--model", model, "model checkpoint directory")->required();
    app->add_option("--split", split, "val or test")->check(CLI::IsMember({"train", "val", "test"}));
    app->add_option("--layouts", layouts_dir, "layout directory written by dump-layouts");
    app->add_flag("--greedy", greedy, "argmax actions instead of sampling");
    app->add_option("--seeds", seeds, "episodes per (layout, target) pair (default: model config)");
    app->add_option("--eval-seed", eval_seed, "seed for start poses and sampling");
    app->add_flag("--agent-path-split", agent_path_split, "define the >5 split on the agent's path length");
  }

  eval::EvalOptions options(const trainer::TrainConfig& cfg) const {
    eval::EvalOptions o;
    o.seeds_per_pair = seeds > 0 ? seeds : cfg.eval_seeds;
    o.greedy = greedy;
    o.seed = eval_seed;
    o.split_on_agent_path = agent_path_split || cfg.split_on_agent_path;
    return o;
  }
};

fs::path default_eval_dir(const fs::path& model_dir) {
  const fs::path parent = fs::absolute(model_dir).lexically_normal().parent_path();
  if (parent.filename() == "ckpt") return parent.parent_path() / "eval";
  return model_dir / "eval";
}

int cmd_eval(const EvalFlags& flags, const std::optional<std::string>& out, const std::optional<std::string>& csv) {
  const ModelCheckpoint model = load_model(flags.model);
  const auto splits =
      layouts_for(model.config, flags.layouts_dir ? std::optional<fs::path>(*flags.layouts_dir) : std::nullopt);
  const fs::path out_dir = out ? fs::path(*out) : default_eval_dir(flags.model);
  const auto report = eval_model(flags.model, split_of(splits, flags.split), flags.options(model.config), flags.split,
                                 out_dir, csv ? std::optional<fs::path>(*csv) : std::nullopt);
  std::cout << eval::format_table(report);
  std::cout << "report written to " << out_dir.string() << '\n';
  return kExitOk;
}

struct Cell {
  std::string mode;
  std::uint64_t seed = 0;
  bool complete = false;
  double sr = 0.0;
  double spl = 0.0;
  std::string note;
};

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

int cmd_ablate(ConfigFlags& flags, const std::string& modes_text, const std::string& seeds_text,
               const std::optional<std::string>& out, const std::string& runs_root, bool greedy,
               const std::string& command) {
  const auto modes = split_list(modes_text);
  const auto seed_items = split_list(seeds_text);
  if (modes.empty()) throw ConfigError("modes", "ablate needs at least one mode");
  if (seed_items.empty()) throw ConfigError("seeds", "ablate needs at least one seed");
  std::vector<std::uint64_t> seeds;
  for (const auto& s : seed_items) {
    trainer::TrainConfig probe;
    trainer::set_config_value(probe, "train", "seed", s);
    seeds.push_back(probe.seed);
  }
  LoadedConfig base = flags.resolve();
  for (const auto& m : modes) trainer::parse_mode(m);
  base.provided.insert("train.mode");
  base.provided.insert("train.seed");
  require_fields(base);
  base.config.validate();

  const fs::path root = out ? fs::path(*out) : fs::path(runs_root) / ("ablate-" + utc_stamp_compact());
  fs::create_directories(root);
  const auto layouts = layouts_for(base.config, std::nullopt);
  SignalGuard guard;

  std::vector<Cell> cells;
  for (const auto& mode : modes) {
    for (std::uint64_t seed : seeds) {
      Cell cell;
      cell.mode = mode;
      cell.seed = seed;
      if (g_interrupted.load()) {
        cell.note = "not started";
        cells.push_back(cell);
        continue;
      }
      try {
        trainer::TrainConfig cfg = base.config;
        cfg.mode = trainer::parse_mode(mode);
        cfg.seed = seed;
        const fs::path dir = root / (mode + "-seed" + std::to_string(seed));
        const auto outcome = train_to_dir(cfg, dir, layouts, &g_interrupted, command);
        if (outcome.summary.interrupted) {
          cell.note = "interrupted";
        } else {
          eval::EvalOptions opts;
          opts.seeds_per_pair = cfg.eval_seeds;
          opts.greedy = greedy;
          opts.split_on_agent_path = cfg.split_on_agent_path;
          const auto report = eval_model(outcome.final_checkpoint, layouts.val, opts, "val", dir / "eval", std::nullopt);
          cell.sr = report.overall.sr;
          cell.spl = report.overall.spl;
          cell.complete = true;
        }
      } catch (const std::exception& e) {
        cell.note = e.what();
        std::cerr << "cell " << mode << " seed " << seed << " failed: " << e.what() << '\n';
      }
      cells.push_back(cell);
    }
  }

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::ostringstream table;
  char line[200];
  std::snprintf(line, sizeof line, "%-10s %6s %18s %18s  %s\n", "mode", "seeds", "SR (val)", "SPL (val)", "status");
  table << line;
  for (const auto& mode : modes) {
    std::vector<double> sr, spl;
    std::size_t incomplete = 0;
    nlohmann::ordered_json cell_json = nlohmann::ordered_json::array();
    for (const auto& c : cells) {
      if (c.mode != mode) continue;
      cell_json.push_back({{"seed", c.seed},
                           {"complete", c.complete},
                           {"SR", c.complete ? nlohmann::ordered_json(c.sr) : nlohmann::ordered_json(nullptr)},
                           {"SPL", c.complete ? nlohmann::ordered_json(c.spl) : nlohmann::ordered_json(nullptr)},
                           {"note", c.note}});
      if (c.complete) {
        sr.push_back(c.sr);
        spl.push_back(c.spl);
      } else {
        ++incomplete;
      }
    }
    const auto [sr_mean, sr_se] = mean_stderr(sr);
    const auto [spl_mean, spl_se] = mean_stderr(spl);
    const std::string status = incomplete == 0 ? "ok" : "incomplete (" + std::to_string(incomplete) + " of " +
                                                            std::to_string(seeds.size()) + " cells)";
    if (sr.empty()) {
      std::snprintf(line, sizeof line, "%-10s %6zu %18s %18s  %s\n", mode.c_str(), seeds.size(), "incomplete",
                    "incomplete", status.c_str());
    } else {
      char a[32], b[32];
      std::snprintf(a, sizeof a, "%.2f +- %.2f", 100.0 * sr_mean, 100.0 * sr_se);
      std::snprintf(b, sizeof b, "%.2f +- %.2f", 100.0 * spl_mean, 100.0 * spl_se);
      std::snprintf(line, sizeof line, "%-10s %6zu %18s %18s  %s\n", mode.c_str(), seeds.size(), a, b, status.c_str());
    }
    table << line;
    rows.push_back({{"mode", mode},
                    {"complete_cells", sr.size()},
                    {"incomplete_cells", incomplete},
                    {"SR_mean", sr.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(sr_mean)},
                    {"SR_stderr", sr.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(sr_se)},
                    {"SPL_mean", spl.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(spl_mean)},
                    {"SPL_stderr", spl.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(spl_se)},
                    {"cells", cell_json}});
  }
  write_text(root / "ablation.json", nlohmann::ordered_json{{"rows", rows}}.dump(2) + "\n");
  write_text(root / "ablation.txt", table.str());
  std::cout << table.str() << "written to " << root.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"foresit: goal-conditioned navigation agents with learned sub-goal imagination"};
  app.require_subcommand(1);
  const std::string command = join_args(argc, argv);

  ConfigFlags train_flags;
  std::optional<std::string> train_out;
  std::optional<std::string> train_layouts;
  std::string runs_root = "runs";
  auto* train = app.add_subcommand("train", "train an agent");
  train_flags.attach(train);
  train->add_option("--out", train_out, "run directory (default runs/<timestamp>-<hash>)");
  train->add_option("--runs-dir", runs_root, "parent of generated run directories");
  train->add_option("--layouts", train_layouts, "layout directory written by dump-layouts");

  EvalFlags eval_flags;
  std::optional<std::string> eval_out;
  std::optional<std::string> eval_csv;
  auto* eval = app.add_subcommand("eval", "evaluate a model checkpoint");
  eval_flags.attach(eval);
  eval->add_option("--out", eval_out, "report directory (default <run>/eval)");
  eval->add_option("--csv", eval_csv, "write per-episode rows to this CSV file");

  ConfigFlags ablate_flags;
  std::string modes = "baseline,foresit,rnd,int,att";
  std::string seeds = "1";
  std::optional<std::string> ablate_out;
  bool ablate_greedy = false;
  auto* ablate = app.add_subcommand("ablate", "train and validate every (mode, seed) cell");
  ablate_flags.attach(ablate);
  ablate->add_option("--modes", modes, "comma-separated modes");
  ablate->add_option("--seeds", seeds, "comma-separated seeds");
  ablate->add_option("--out", ablate_out, "output directory");
  ablate->add_option("--runs-dir", runs_root, "parent of the generated output directory");
  ablate->add_flag("--greedy", ablate_greedy, "greedy validation episodes");

  std::optional<std::string> dump_config;
  std::optional<std::uint64_t> dump_seed;
  std::string dump_out;
  auto* dump = app.add_subcommand("dump-layouts", "write the train/val/test layout split");
  dump->add_option("--config", dump_config, "INI config file (layout seed, sizes, split sizes)");
  dump->add_option("--layout-seed", dump_seed, "override env.layout_seed");
  dump->add_option("--out", dump_out, "output directory")->required();

  EvalFlags export_flags;
  std::string export_out;
  auto* exp = app.add_subcommand("export-states", "dump latent states, imaginations and sub-goals as JSON lines");
  export_flags.attach(exp);
  exp->add_option("--out", export_out, "output .jsonl file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_flags, train_out, runs_root, train_layouts, command);
    if (*eval) return cmd_eval(eval_flags, eval_out, eval_csv);
    if (*ablate) return cmd_ablate(ablate_flags, modes, seeds, ablate_out, runs_root, ablate_greedy, command);
    if (*dump) {
      LoadedConfig cfg = dump_config ? load_config_file(*dump_config) : LoadedConfig{};
      if (dump_seed) cfg.config.layout_seed = *dump_seed;
      cfg.config.validate();
      grid::dump_splits(layouts_for(cfg.config, std::nullopt), dump_out);
      std::cout << "layouts written to " << dump_out << '\n';
      return kExitOk;
    }
    if (*exp) {
      const ModelCheckpoint model = load_model(export_flags.model);
      auto opts = export_flags.options(model.config);
      if (export_flags.seeds == 0) opts.seeds_per_pair = 1;
      const auto splits = layouts_for(
          model.config, export_flags.layouts_dir ? std::optional<fs::path>(*export_flags.layouts_dir) : std::nullopt);
      const auto lines = eval::export_states(policy_from(model), split_of(splits, export_flags.split), opts, export_out);
      std::cout << lines << " state records written to " << export_out << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error [" << e.field() << "]: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CorruptArtifact& e) {
    std::cerr << "corrupt artifact: " << e.what() << '\n';
    return kExitCorrupt;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace foresit::cli
