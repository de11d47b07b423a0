#pragma once

#include <array>
#include <string>
#include <vector>

#include "foresit/gridhome/env.hpp"
#include "foresit/gridhome/layout.hpp"

namespace foresit::testkit {

// Hand-drawn rooms. Header: width height family layout-id.
inline const std::array<const char*, 3> kFixtureText = {
    "7 6 0 9001\n"
    "#######\n"
    "#A...B#\n"
    "#.....#\n"
    "#..#..#\n"
    "#C...J#\n"
    "#######\n",
    "8 6 0 9002\n"
    "########\n"
    "#A.#..C#\n"
    "#..#...#\n"
    "#....#B#\n"
    "#.J....#\n"
    "########\n",
    "6 6 2 9003\n"
    "######\n"
    "#F..G#\n"
    "#.#..#\n"
    "#....#\n"
    "#C...#\n"
    "######\n",
};

inline grid::RoomLayout fixture(std::size_t i) { return grid::parse_layout(kFixtureText.at(i)); }

inline std::vector<grid::RoomLayout> all_fixtures() {
  std::vector<grid::RoomLayout> out;
  for (std::size_t i = 0; i < kFixtureText.size(); ++i) out.push_back(fixture(i));
  return out;
}

namespace detail {

inline bool stop_succeeds(const grid::RoomLayout& layout, const grid::Pose& start, int object,
                          const grid::EnvConfig& cfg, const std::vector<grid::Action>& prefix) {
  grid::EnvConfig long_cfg = cfg;
  long_cfg.max_steps = static_cast<int>(prefix.size()) + 1;
  grid::Episode ep(layout, start, object, long_cfg);
  for (grid::Action a : prefix) ep.step(a);
  return ep.step(grid::Action::Stop).success;
}

inline void search(const grid::RoomLayout& layout, const grid::Pose& start, int object, const grid::EnvConfig& cfg,
                   std::vector<grid::Action>& prefix, int depth, int& best) {
  if (static_cast<int>(prefix.size()) >= best) return;
  if (stop_succeeds(layout, start, object, cfg, prefix)) {
    best = static_cast<int>(prefix.size());
    return;
  }
  if (static_cast<int>(prefix.size()) == depth) return;
  for (grid::Action a : {grid::Action::RotateLeft, grid::Action::RotateRight, grid::Action::MoveAhead}) {
    prefix.push_back(a);
    search(layout, start, object, cfg, prefix, depth, best);
    prefix.pop_back();
  }
}

}  // namespace detail

/// Shortest successful action count found by replaying every action sequence
/// of length <= depth through the environment itself; -1 when none succeeds.
inline int exhaustive_shortest(const grid::RoomLayout& layout, const grid::Pose& start, int object,
                               const grid::EnvConfig& cfg, int depth) {
  int best = depth + 1;
  std::vector<grid::Action> prefix;
  detail::search(layout, start, object, cfg, prefix, depth, best);
  return best <= depth ? best : -1;
}

}  // namespace foresit::testkit
