#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "foresit/ndgrad/params.hpp"

namespace foresit::nd {

/// Binary checkpoint layout (all integers u64 little-endian, values f64 little-endian):
///
///   "FORESIT1"
///   slot_count
///   per slot:   name_len, name bytes, rank, dims[rank], values
///   per slot:   first Adam moment values
///   per slot:   second Adam moment values
///   adam_step, version
inline constexpr char kCheckpointMagic[8] = {'F', 'O', 'R', 'E', 'S', 'I', 'T', '1'};

void write_checkpoint(std::ostream& out, const StoreState& state);
/// Throws CorruptArtifact with the failing byte offset on any malformed input.
StoreState read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const StoreState& state);
StoreState load_checkpoint(const std::filesystem::path& path);

}  // namespace foresit::nd
