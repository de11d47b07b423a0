#pragma once

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "foresit/cli/config_file.hpp"
#include "foresit/eval/evaluate.hpp"
#include "foresit/gridhome/layout.hpp"
#include "foresit/trainer/training.hpp"

namespace foresit::cli {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitCorrupt = 3, kExitRuntime = 4 };

/// Layout splits from a dumped directory, or regenerated from the config.
grid::LayoutSplits layouts_for(const trainer::TrainConfig& cfg, const std::optional<std::filesystem::path>& dir);

struct TrainOutcome {
  std::filesystem::path run_dir;
  std::filesystem::path final_checkpoint;
  trainer::TrainSummary summary;
};

/// Full training run into `run_dir`: manifest.json, metrics.jsonl, ckpt/ and
/// eval/. The final model is always written to ckpt/final, also on interruption.
TrainOutcome train_to_dir(const trainer::TrainConfig& cfg, const std::filesystem::path& run_dir,
                          const grid::LayoutSplits& layouts, const std::atomic<bool>* stop, std::string command,
                          const trainer::ActionOverride& action_override = {});

/// Evaluates a saved model on one split and writes report-<split>-<greedy|sampled>.json
/// (and the CSV when `csv` is set) into `out_dir`.
eval::EvalReport eval_model(const std::filesystem::path& model_dir, const std::vector<grid::RoomLayout>& layouts,
                            const eval::EvalOptions& options, const std::string& split,
                            const std::filesystem::path& out_dir, const std::optional<std::filesystem::path>& csv);

/// Parses argv and dispatches to a subcommand. Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace foresit::cli
