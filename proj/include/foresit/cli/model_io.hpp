#pragma once

#include <filesystem>

#include "foresit/eval/evaluate.hpp"
#include "foresit/ndgrad/params.hpp"
#include "foresit/trainer/config.hpp"

namespace foresit::cli {

/// A model checkpoint is a directory:
///   model.json        config the model was trained with
///   agent.bin         agent ParamStore (theta, omega) with Adam state
///   imagination.bin   shared imagination ParamStore (w)
struct ModelCheckpoint {
  trainer::TrainConfig config;
  nd::StoreState agent;
  nd::StoreState imagination;
  std::uint64_t episodes = 0;
};

/// Writes into a sibling temp directory and renames it into place.
void save_model(const std::filesystem::path& dir, const ModelCheckpoint& model);
/// Throws CorruptArtifact (with byte offset) for malformed files and
/// std::runtime_error when files are missing.
ModelCheckpoint load_model(const std::filesystem::path& dir);

eval::PolicySnapshot policy_from(const ModelCheckpoint& model);

}  // namespace foresit::cli
