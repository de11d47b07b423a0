#include "foresit/gridhome/env.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "foresit/rng.hpp"

namespace foresit::grid {

namespace {

constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {-1, 0, 1, 0};

int h(Heading heading) { return static_cast<int>(heading); }

}  // namespace

std::string_view action_name(Action a) {
  switch (a) {
    case Action::RotateLeft: return "RotateLeft";
    case Action::RotateRight: return "RotateRight";
    case Action::MoveAhead: return "MoveAhead";
    case Action::Stop: return "Stop";
  }
  return "?";
}

std::size_t observation_size(const EnvConfig& cfg) {
  return static_cast<std::size_t>(cfg.window * cfg.window * kCellChannels);
}

TargetSpec make_target(int object) {
  if (object < 0 || object >= kVocabularySize) throw std::invalid_argument("unknown target object " + std::to_string(object));
  TargetSpec t;
  t.object = object;
  t.embedding.assign(static_cast<std::size_t>(kVocabularySize), 0.0);
  t.embedding[static_cast<std::size_t>(object)] = 1.0;
  return t;
}

Pose forward_of(const Pose& p) { return {p.x + kDx[h(p.heading)], p.y + kDy[h(p.heading)], p.heading}; }

Pose rotated(const Pose& p, Action rotation) {
  Pose out = p;
  if (rotation == Action::RotateLeft) out.heading = static_cast<Heading>((h(p.heading) + 3) % 4);
  if (rotation == Action::RotateRight) out.heading = static_cast<Heading>((h(p.heading) + 1) % 4);
  return out;
}

bool in_window(const Pose& pose, int x, int y, int window) {
  const int fx = kDx[h(pose.heading)];
  const int fy = kDy[h(pose.heading)];
  const int rx = -fy;  // right-hand direction
  const int ry = fx;
  const int dx = x - pose.x;
  const int dy = y - pose.y;
  const int forward = dx * fx + dy * fy;
  const int lateral = dx * rx + dy * ry;
  return forward >= 0 && forward < window && std::abs(lateral) <= window / 2;
}

int chebyshev(int x0, int y0, int x1, int y1) { return std::max(std::abs(x0 - x1), std::abs(y0 - y1)); }

bool success_at(const RoomLayout& layout, const Pose& pose, int object, const EnvConfig& cfg) {
  for (auto [ox, oy] : layout.object_cells(object)) {
    if (chebyshev(pose.x, pose.y, ox, oy) <= cfg.success_radius && in_window(pose, ox, oy, cfg.window)) return true;
  }
  return false;
}

Episode::Episode(const RoomLayout& layout, Pose start, int target, EnvConfig cfg)
    : layout_(&layout), cfg_(cfg), start_(start), pose_(start), target_(target) {
  if (!layout.is_free(start.x, start.y)) throw std::invalid_argument("start pose is not on a free cell");
  if (layout.object_cells(target).empty()) throw std::invalid_argument("target object is not present in layout");
  if (cfg.window < 1 || cfg.window % 2 == 0) throw std::invalid_argument("observation window must be odd and positive");
  if (cfg.max_steps < 1) throw std::invalid_argument("max_steps must be positive");
}

Observation Episode::observe() const {
  Observation obs;
  const int k = cfg_.window;
  obs.features.assign(observation_size(cfg_), 0.0);
  const int fx = kDx[h(pose_.heading)];
  const int fy = kDy[h(pose_.heading)];
  const int rx = -fy;
  const int ry = fx;
  for (int f = 0; f < k; ++f) {
    for (int l = -k / 2; l <= k / 2; ++l) {
      const int x = pose_.x + f * fx + l * rx;
      const int y = pose_.y + f * fy + l * ry;
      const std::size_t base = static_cast<std::size_t>((f * k + (l + k / 2)) * kCellChannels);
      if (!layout_->inside(x, y)) {
        obs.features[base + 1] = 1.0;
        continue;
      }
      const Cell& c = layout_->at(x, y);
      switch (c.kind) {
        case CellKind::Free: obs.features[base] = 1.0; break;
        case CellKind::Wall: obs.features[base + 1] = 1.0; break;
        case CellKind::Object:
          obs.features[base + 2 + static_cast<std::size_t>(c.object)] = 1.0;
          if (c.object == target_) obs.target_visible = true;
          break;
      }
    }
  }
  int best = std::numeric_limits<int>::max();
  for (auto [ox, oy] : layout_->object_cells(target_)) best = std::min(best, chebyshev(pose_.x, pose_.y, ox, oy));
  obs.target_distance = best;
  return obs;
}

StepResult Episode::step(Action action) {
  if (done_) throw std::logic_error("step() called on a finished episode");
  ++steps_;
  StepResult out;
  switch (action) {
    case Action::RotateLeft:
    case Action::RotateRight:
      pose_ = rotated(pose_, action);
      ++path_length_;
      break;
    case Action::MoveAhead: {
      const Pose next = forward_of(pose_);
      if (layout_->is_free(next.x, next.y)) pose_ = next;
      ++path_length_;
      break;
    }
    case Action::Stop:
      done_ = true;
      success_ = success_at(*layout_, pose_, target_, cfg_);
      break;
  }
  out.reward = success_ ? cfg_.success_reward : cfg_.step_penalty;
  if (steps_ >= cfg_.max_steps) done_ = true;
  return_ += out.reward;
  out.done = done_;
  out.success = success_;
  out.observation = observe();
  return out;
}

ResetResult reset(const RoomLayout& layout, std::uint64_t seed, const EnvConfig& cfg, std::optional<int> target) {
  Rng rng(seed);
  const auto free = layout.free_cells();
  if (free.empty()) throw std::invalid_argument("layout has no free cells");
  const auto [x, y] = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
  const auto heading = static_cast<Heading>(std::uniform_int_distribution<int>(0, 3)(rng));
  int object = 0;
  if (target) {
    object = *target;
  } else {
    const auto present = layout.objects_present();
    if (present.empty()) throw std::invalid_argument("layout has no objects");
    object = present[std::uniform_int_distribution<std::size_t>(0, present.size() - 1)(rng)];
  }
  Episode ep(layout, Pose{x, y, heading}, object, cfg);
  Observation obs = ep.observe();
  return ResetResult{std::move(obs), make_target(object), std::move(ep)};
}

std::string render_ascii(const RoomLayout& layout, const Pose& agent) {
  constexpr char kGlyph[4] = {'^', '>', 'v', '<'};
  std::string out;
  for (int y = 0; y < layout.height(); ++y) {
    for (int x = 0; x < layout.width(); ++x) {
      if (x == agent.x && y == agent.y) {
        out += kGlyph[h(agent.heading)];
        continue;
      }
      const Cell& c = layout.at(x, y);
      out += c.kind == CellKind::Wall ? '#' : c.kind == CellKind::Free ? '.' : object_glyph(c.object);
    }
    out += '\n';
  }
  return out;
}

std::string render_ascii(const Episode& episode) { return render_ascii(episode.layout(), episode.pose()); }

}  // namespace foresit::grid
