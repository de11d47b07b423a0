#include "foresit/gridhome/oracle.hpp"

#include <queue>
#include <stdexcept>

namespace foresit::grid {

int shortest_path_length(const RoomLayout& layout, const Pose& start, int object, const EnvConfig& cfg) {
  if (layout.object_cells(object).empty()) {
    throw std::invalid_argument("object " + std::to_string(object) + " not present in layout " +
                                std::to_string(layout.layout_id()));
  }
  if (!layout.is_free(start.x, start.y)) throw std::invalid_argument("start pose is not on a free cell");

  const int w = layout.width();
  auto key = [w](const Pose& p) {
    return static_cast<std::size_t>((p.y * w + p.x) * 4 + static_cast<int>(p.heading));
  };
  std::vector<int> dist(static_cast<std::size_t>(w * layout.height() * 4), -1);
  std::queue<Pose> frontier;
  dist[key(start)] = 0;
  frontier.push(start);
  while (!frontier.empty()) {
    const Pose p = frontier.front();
    frontier.pop();
    const int d = dist[key(p)];
    if (success_at(layout, p, object, cfg)) return d;
    Pose moved = forward_of(p);
    if (!layout.is_free(moved.x, moved.y)) moved = p;
    for (const Pose& next : {rotated(p, Action::RotateLeft), rotated(p, Action::RotateRight), moved}) {
      auto& nd = dist[key(next)];
      if (nd >= 0) continue;
      nd = d + 1;
      frontier.push(next);
    }
  }
  throw std::runtime_error("target object " + std::to_string(object) + " unreachable in layout " +
                           std::to_string(layout.layout_id()));
}

Action optimal_action(const RoomLayout& layout, const Pose& pose, int object, const EnvConfig& cfg) {
  if (success_at(layout, pose, object, cfg)) return Action::Stop;
  const int here = shortest_path_length(layout, pose, object, cfg);
  for (Action a : {Action::MoveAhead, Action::RotateLeft, Action::RotateRight}) {
    Pose next = a == Action::MoveAhead ? forward_of(pose) : rotated(pose, a);
    if (!layout.is_free(next.x, next.y)) continue;
    if (shortest_path_length(layout, next, object, cfg) == here - 1) return a;
  }
  throw std::logic_error("no action decreases the oracle distance");
}

}  // namespace foresit::grid
