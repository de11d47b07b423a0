#include "foresit/gridhome/layout.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <queue>
#include <sstream>

#include "foresit/error.hpp"
#include "foresit/rng.hpp"

namespace foresit::grid {

namespace {

constexpr std::array<std::string_view, kFamilyCount> kFamilyNames = {"kitchen", "bedroom", "bathroom", "living_room"};
constexpr std::array<int, 4> kKitchen = {0, 1, 2, 9};
constexpr std::array<int, 4> kBedroom = {3, 4, 8, 9};
constexpr std::array<int, 3> kBathroom = {5, 2, 6};
constexpr std::array<int, 4> kLiving = {7, 8, 4, 9};

constexpr int kMaxAttempts = 64;

std::atomic<std::uint64_t> g_incidents{0};
std::atomic<std::ostream*> g_log{nullptr};

void check_family(int family) {
  if (family < 0 || family >= kFamilyCount) throw std::invalid_argument("unknown layout family " + std::to_string(family));
}

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::vector<Cell> draw_cells(Rng& rng, int width, int height, int family) {
  std::vector<Cell> cells(static_cast<std::size_t>(width * height));
  auto at = [&](int x, int y) -> Cell& { return cells[static_cast<std::size_t>(y * width + x)]; };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x == 0 || y == 0 || x == width - 1 || y == height - 1) at(x, y).kind = CellKind::Wall;
    }
  }

  // Short interior wall segments act as furniture blocks and partial partitions.
  const int interior = (width - 2) * (height - 2);
  const int segments = std::max(1, interior / 14);
  for (int s = 0; s < segments; ++s) {
    const bool horizontal = uniform(rng, 0, 1) == 1;
    const int len = uniform(rng, 2, std::max(2, std::min(width, height) / 2 - 1));
    int x = uniform(rng, 1, width - 2);
    int y = uniform(rng, 1, height - 2);
    for (int k = 0; k < len; ++k) {
      if (x <= 0 || y <= 0 || x >= width - 1 || y >= height - 1) break;
      at(x, y).kind = CellKind::Wall;
      (horizontal ? x : y) += 1;
    }
  }

  std::vector<int> objects(family_objects(family).begin(), family_objects(family).end());
  for (int obj : family_objects(family)) {
    if (uniform(rng, 0, 9) < 3) objects.push_back(obj);
  }
  for (int obj : objects) {
    std::vector<CellPos> free;
    for (int y = 1; y < height - 1; ++y) {
      for (int x = 1; x < width - 1; ++x) {
        if (at(x, y).kind == CellKind::Free) free.emplace_back(x, y);
      }
    }
    if (free.size() < 2) break;
    const auto [x, y] = free[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(free.size()) - 1))];
    at(x, y) = Cell{CellKind::Object, obj};
  }
  return cells;
}

}  // namespace

std::string_view family_name(int family) {
  check_family(family);
  return kFamilyNames[static_cast<std::size_t>(family)];
}

std::span<const int> family_objects(int family) {
  check_family(family);
  switch (family) {
    case 0: return kKitchen;
    case 1: return kBedroom;
    case 2: return kBathroom;
    default: return kLiving;
  }
}

char object_glyph(int object) {
  if (object < 0 || object >= kVocabularySize) throw std::invalid_argument("unknown object id " + std::to_string(object));
  return static_cast<char>('A' + object);
}

RoomLayout::RoomLayout(int width, int height, int family, int layout_id, std::uint64_t seed, std::vector<Cell> cells)
    : width_(width), height_(height), family_(family), layout_id_(layout_id), seed_(seed), cells_(std::move(cells)) {
  if (width < 3 || height < 3) throw std::invalid_argument("layout must be at least 3x3");
  if (cells_.size() != static_cast<std::size_t>(width * height)) {
    throw std::invalid_argument("layout cell count does not match " + std::to_string(width) + "x" + std::to_string(height));
  }
  check_family(family);
}

std::vector<CellPos> RoomLayout::free_cells() const {
  std::vector<CellPos> out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (at(x, y).kind == CellKind::Free) out.emplace_back(x, y);
    }
  }
  return out;
}

std::vector<int> RoomLayout::objects_present() const {
  std::vector<int> out;
  for (const auto& c : cells_) {
    if (c.kind == CellKind::Object) out.push_back(c.object);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<CellPos> RoomLayout::object_cells(int object) const {
  std::vector<CellPos> out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const auto& c = at(x, y);
      if (c.kind == CellKind::Object && c.object == object) out.emplace_back(x, y);
    }
  }
  return out;
}

bool free_cells_connected(const RoomLayout& layout) {
  const auto free = layout.free_cells();
  if (free.empty()) return false;
  std::vector<char> seen(static_cast<std::size_t>(layout.width() * layout.height()), 0);
  std::queue<CellPos> frontier;
  frontier.push(free.front());
  seen[static_cast<std::size_t>(free.front().second * layout.width() + free.front().first)] = 1;
  std::size_t reached = 1;
  constexpr int dx[4] = {0, 1, 0, -1};
  constexpr int dy[4] = {-1, 0, 1, 0};
  while (!frontier.empty()) {
    const auto [x, y] = frontier.front();
    frontier.pop();
    for (int k = 0; k < 4; ++k) {
      const int nx = x + dx[k];
      const int ny = y + dy[k];
      if (!layout.is_free(nx, ny)) continue;
      auto& s = seen[static_cast<std::size_t>(ny * layout.width() + nx)];
      if (s) continue;
      s = 1;
      ++reached;
      frontier.emplace(nx, ny);
    }
  }
  return reached == free.size();
}

std::string validate_layout(const RoomLayout& layout) {
  for (int y = 0; y < layout.height(); ++y) {
    for (int x = 0; x < layout.width(); ++x) {
      const bool border = x == 0 || y == 0 || x == layout.width() - 1 || y == layout.height() - 1;
      if (border && layout.at(x, y).kind != CellKind::Wall) return "boundary cell is not a wall";
    }
  }
  if (!free_cells_connected(layout)) return "free cells are not connected";
  const auto present = layout.objects_present();
  for (int obj : family_objects(layout.family())) {
    if (!std::binary_search(present.begin(), present.end(), obj)) {
      return "object " + std::string(kObjectNames[static_cast<std::size_t>(obj)]) + " missing";
    }
  }
  for (int obj : present) {
    for (auto [ox, oy] : layout.object_cells(obj)) {
      bool approachable = false;
      for (int dy = -1; dy <= 1 && !approachable; ++dy) {
        for (int dx = -1; dx <= 1 && !approachable; ++dx) approachable = layout.is_free(ox + dx, oy + dy);
      }
      if (!approachable) return "object at (" + std::to_string(ox) + "," + std::to_string(oy) + ") is enclosed";
    }
  }
  return {};
}

RoomLayout generate_layout(std::uint64_t seed, int family, SizeRange range, int layout_id) {
  check_family(family);
  if (range.min < 5 || range.max < range.min) {
    throw std::invalid_argument("layout size range must satisfy 5 <= min <= max");
  }
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    const int width = uniform(rng, range.min, range.max);
    const int height = uniform(rng, range.min, range.max);
    RoomLayout layout(width, height, family, layout_id, seed, draw_cells(rng, width, height, family));
    const std::string problem = validate_layout(layout);
    if (problem.empty()) return layout;
    g_incidents.fetch_add(1);
    if (std::ostream* log = g_log.load()) {
      *log << "[gridhome] layout seed " << seed << " attempt " << attempt << " rejected: " << problem << "\n";
    }
  }
  throw std::runtime_error("layout generation failed after " + std::to_string(kMaxAttempts) + " attempts for seed " +
                           std::to_string(seed));
}

std::uint64_t layout_generation_incidents() { return g_incidents.load(); }

void set_layout_log(std::ostream* log) { g_log.store(log); }

std::string serialize_layout(const RoomLayout& layout) {
  std::ostringstream out;
  out << layout.width() << ' ' << layout.height() << ' ' << layout.family() << ' ' << layout.layout_id() << '\n';
  for (int y = 0; y < layout.height(); ++y) {
    for (int x = 0; x < layout.width(); ++x) {
      const Cell& c = layout.at(x, y);
      out << (c.kind == CellKind::Wall ? '#' : c.kind == CellKind::Free ? '.' : object_glyph(c.object));
    }
    out << '\n';
  }
  return out.str();
}

RoomLayout parse_layout(std::string_view text) {
  std::istringstream in{std::string(text)};
  int width = 0, height = 0, family = 0, layout_id = 0;
  std::string header;
  if (!std::getline(in, header)) throw CorruptArtifact("layout text is empty", 0);
  std::istringstream hs(header);
  if (!(hs >> width >> height >> family >> layout_id) || width < 3 || height < 3) {
    throw CorruptArtifact("bad layout header '" + header + "'", 0);
  }
  std::uint64_t offset = header.size() + 1;
  std::vector<Cell> cells;
  for (int y = 0; y < height; ++y) {
    std::string row;
    if (!std::getline(in, row) || static_cast<int>(row.size()) != width) {
      throw CorruptArtifact("layout row " + std::to_string(y) + " missing or wrong width", offset);
    }
    for (char ch : row) {
      if (ch == '#') cells.push_back({CellKind::Wall, -1});
      else if (ch == '.') cells.push_back({CellKind::Free, -1});
      else if (ch >= 'A' && ch < 'A' + kVocabularySize) cells.push_back({CellKind::Object, ch - 'A'});
      else throw CorruptArtifact(std::string("unknown layout glyph '") + ch + "'", offset);
    }
    offset += row.size() + 1;
  }
  return RoomLayout(width, height, family, layout_id, 0, std::move(cells));
}

LayoutSplits generate_splits(std::uint64_t base_seed, SizeRange range, SplitSizes sizes) {
  LayoutSplits out;
  for (int family = 0; family < kFamilyCount; ++family) {
    int index = 0;
    auto emit = [&](std::vector<RoomLayout>& dst, int count) {
      for (int k = 0; k < count; ++k, ++index) {
        const int id = family * 1000 + index;
        dst.push_back(generate_layout(derive_seed(base_seed, static_cast<std::uint64_t>(id)), family, range, id));
      }
    };
    emit(out.train, sizes.train);
    emit(out.val, sizes.val);
    emit(out.test, sizes.test);
  }
  return out;
}

void dump_splits(const LayoutSplits& splits, const std::filesystem::path& dir) {
  auto write = [&](const std::vector<RoomLayout>& layouts, const char* name) {
    const auto sub = dir / name;
    std::filesystem::create_directories(sub);
    for (const auto& layout : layouts) {
      std::ofstream out(sub / ("layout-" + std::to_string(layout.layout_id()) + ".txt"));
      out << serialize_layout(layout);
      if (!out) throw std::runtime_error("failed writing layout to " + sub.string());
    }
  };
  write(splits.train, "train");
  write(splits.val, "val");
  write(splits.test, "test");
}

LayoutSplits load_splits(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    const auto sub = dir / name;
    if (!std::filesystem::is_directory(sub)) throw std::runtime_error("missing layout directory " + sub.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(sub)) {
      if (entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::vector<RoomLayout> layouts;
    for (const auto& f : files) {
      std::ifstream in(f);
      std::stringstream buf;
      buf << in.rdbuf();
      layouts.push_back(parse_layout(buf.str()));
    }
    std::sort(layouts.begin(), layouts.end(),
              [](const RoomLayout& a, const RoomLayout& b) { return a.layout_id() < b.layout_id(); });
    return layouts;
  };
  return {read("train"), read("val"), read("test")};
}

}  // namespace foresit::grid
