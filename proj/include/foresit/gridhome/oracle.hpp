#pragma once

#include "foresit/gridhome/env.hpp"

namespace foresit::grid {

/// Minimum number of RotateLeft/RotateRight/MoveAhead actions from `start` to
/// any pose where Stop succeeds for `object` (Stop itself is not counted).
/// Breadth-first search over the (x, y, heading) pose graph. Throws when the
/// object is absent or unreachable.
int shortest_path_length(const RoomLayout& layout, const Pose& start, int object, const EnvConfig& cfg = {});

/// First action of a shortest path from `pose`; Stop when Stop already succeeds.
/// Ties prefer MoveAhead, then RotateLeft, then RotateRight.
Action optimal_action(const RoomLayout& layout, const Pose& pose, int object, const EnvConfig& cfg = {});

}  // namespace foresit::grid
