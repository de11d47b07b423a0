#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "foresit/gridhome/layout.hpp"

namespace foresit::grid {

enum class Heading : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

struct Pose {
  int x = 0;
  int y = 0;
  Heading heading = Heading::North;

  friend bool operator==(const Pose&, const Pose&) = default;
};

enum class Action : std::uint8_t { RotateLeft = 0, RotateRight = 1, MoveAhead = 2, Stop = 3 };
inline constexpr int kActionCount = 4;

std::string_view action_name(Action a);

struct EnvConfig {
  int window = 5;          // K: egocentric window is K cells deep and K cells wide
  int success_radius = 1;  // D: Chebyshev distance in cells
  int max_steps = 50;      // T_max
  double success_reward = 5.0;
  double step_penalty = -0.01;
};

/// Length of Observation::features for a given config.
std::size_t observation_size(const EnvConfig& cfg);
inline constexpr int kCellChannels = 2 + kVocabularySize;  // free, wall, one per object id

struct Observation {
  std::vector<double> features;
  bool target_visible = false;
  /// Chebyshev cells to the nearest target instance. Used for the success
  /// check only; never part of `features`.
  double target_distance = 0.0;
};

struct TargetSpec {
  int object = 0;
  std::vector<double> embedding;
};

TargetSpec make_target(int object);

Pose forward_of(const Pose& p);
Pose rotated(const Pose& p, Action rotation);
/// True when (x, y) lies inside the K x K window in front of `pose`. The window
/// spans forward offsets 0..K-1 and lateral offsets -K/2..K/2, agent at the
/// bottom-center.
bool in_window(const Pose& pose, int x, int y, int window);
int chebyshev(int x0, int y0, int x1, int y1);
/// Stop at `pose` would succeed for `object`.
bool success_at(const RoomLayout& layout, const Pose& pose, int object, const EnvConfig& cfg);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

/// One navigation episode on a shared immutable layout.
class Episode {
 public:
  Episode(const RoomLayout& layout, Pose start, int target, EnvConfig cfg = {});

  Observation observe() const;
  /// Throws std::logic_error once the episode is done.
  StepResult step(Action action);

  const RoomLayout& layout() const noexcept { return *layout_; }
  const EnvConfig& config() const noexcept { return cfg_; }
  const Pose& pose() const noexcept { return pose_; }
  const Pose& start() const noexcept { return start_; }
  int target() const noexcept { return target_; }
  TargetSpec target_spec() const { return make_target(target_); }
  int steps() const noexcept { return steps_; }
  /// Actions other than Stop.
  int path_length() const noexcept { return path_length_; }
  bool done() const noexcept { return done_; }
  bool success() const noexcept { return success_; }
  double episode_return() const noexcept { return return_; }

 private:
  const RoomLayout* layout_;
  EnvConfig cfg_;
  Pose start_;
  Pose pose_;
  int target_;
  int steps_ = 0;
  int path_length_ = 0;
  bool done_ = false;
  bool success_ = false;
  double return_ = 0.0;
};

struct ResetResult {
  Observation observation;
  TargetSpec target;
  Episode episode;
};

/// Uniform free cell and heading; target uniform over objects present unless
/// `target` pins it. Deterministic in (layout, seed).
ResetResult reset(const RoomLayout& layout, std::uint64_t seed, const EnvConfig& cfg = {},
                  std::optional<int> target = std::nullopt);

/// Grid with '#' walls, '.' free cells, object letters, and the agent as ^ > v <.
std::string render_ascii(const Episode& episode);
std::string render_ascii(const RoomLayout& layout, const Pose& agent);

}  // namespace foresit::grid
