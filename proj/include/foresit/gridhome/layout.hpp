#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace foresit::grid {

enum class CellKind : std::uint8_t { Free, Wall, Object };

struct Cell {
  CellKind kind = CellKind::Free;
  int object = -1;

  friend bool operator==(const Cell&, const Cell&) = default;
};

inline constexpr int kFamilyCount = 4;

/// Global target vocabulary. Object ids index this table; the one-hot target
/// embedding has one component per entry.
inline constexpr std::array<std::string_view, 10> kObjectNames = {
    "Fridge", "Toaster", "Sink", "Bed", "Lamp", "Toilet", "Towel", "Sofa", "Television", "Plant"};
inline constexpr int kVocabularySize = static_cast<int>(kObjectNames.size());

/// Kitchen, bedroom, bathroom, living room.
std::string_view family_name(int family);
std::span<const int> family_objects(int family);
char object_glyph(int object);

struct SizeRange {
  int min = 8;
  int max = 14;
};

using CellPos = std::pair<int, int>;

/// Immutable room grid. Boundary cells are walls, free cells form one
/// connected component, and every object of the family appears at least once.
class RoomLayout {
 public:
  RoomLayout(int width, int height, int family, int layout_id, std::uint64_t seed, std::vector<Cell> cells);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int family() const noexcept { return family_; }
  int layout_id() const noexcept { return layout_id_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool inside(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  const Cell& at(int x, int y) const { return cells_.at(static_cast<std::size_t>(y * width_ + x)); }
  bool is_free(int x, int y) const { return inside(x, y) && at(x, y).kind == CellKind::Free; }

  std::vector<CellPos> free_cells() const;
  /// Sorted, de-duplicated ids of objects placed in this layout.
  std::vector<int> objects_present() const;
  std::vector<CellPos> object_cells(int object) const;

  friend bool operator==(const RoomLayout&, const RoomLayout&) = default;

 private:
  int width_;
  int height_;
  int family_;
  int layout_id_;
  std::uint64_t seed_;
  std::vector<Cell> cells_;
};

/// Deterministic in (seed, family, range). Disconnected draws are retried
/// with a perturbed seed; each retry is counted as an incident.
RoomLayout generate_layout(std::uint64_t seed, int family, SizeRange range = {}, int layout_id = 0);
/// Rejected generation attempts so far (each one regenerates with a perturbed seed).
std::uint64_t layout_generation_incidents();
/// Where rejected attempts are reported; nullptr (the default) keeps only the count.
void set_layout_log(std::ostream* log);

bool free_cells_connected(const RoomLayout& layout);
/// Checks every RoomLayout invariant; returns an empty string when valid.
std::string validate_layout(const RoomLayout& layout);

/// Text form: header "width height family layout-id", then one row string per line.
std::string serialize_layout(const RoomLayout& layout);
RoomLayout parse_layout(std::string_view text);

struct LayoutSplits {
  std::vector<RoomLayout> train;
  std::vector<RoomLayout> val;
  std::vector<RoomLayout> test;
};

struct SplitSizes {
  int train = 20;
  int val = 5;
  int test = 5;
};

/// Per family, layout ids are family*1000 + index with train, val and test
/// occupying consecutive disjoint index ranges.
LayoutSplits generate_splits(std::uint64_t base_seed, SizeRange range = {}, SplitSizes sizes = {});
void dump_splits(const LayoutSplits& splits, const std::filesystem::path& dir);
LayoutSplits load_splits(const std::filesystem::path& dir);

}  // namespace foresit::grid
