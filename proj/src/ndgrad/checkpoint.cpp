#include "foresit/ndgrad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "foresit/error.hpp"

namespace foresit::nd {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::uint64_t kMaxNameLen = 4096;
constexpr std::uint64_t kMaxRank = 8;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

void put_values(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw CorruptArtifact(std::string("checkpoint truncated while reading ") + what, offset_ + in_.gcount());
    }
    offset_ += n;
  }

  std::uint64_t u64(const char* what) {
    std::uint64_t v = 0;
    bytes(reinterpret_cast<char*>(&v), sizeof v, what);
    return v;
  }

  void values(std::span<double> dst, const char* what) {
    bytes(reinterpret_cast<char*>(dst.data()), dst.size() * sizeof(double), what);
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const StoreState& state) {
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  const auto& p = state.params;
  put_u64(out, p.size());
  for (std::size_t s = 0; s < p.size(); ++s) {
    put_u64(out, p.name(s).size());
    out.write(p.name(s).data(), static_cast<std::streamsize>(p.name(s).size()));
    put_u64(out, p[s].rank());
    for (auto d : p[s].shape()) put_u64(out, d);
    put_values(out, p[s].values());
  }
  for (std::size_t s = 0; s < p.size(); ++s) put_values(out, state.first_moment[s].values());
  for (std::size_t s = 0; s < p.size(); ++s) put_values(out, state.second_moment[s].values());
  put_u64(out, state.adam_step);
  put_u64(out, state.version);
}

StoreState read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[sizeof kCheckpointMagic];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw CorruptArtifact("bad checkpoint magic", 0);

  StoreState state;
  const std::uint64_t slots = r.u64("slot count");
  if (slots > 100000) throw CorruptArtifact("implausible slot count " + std::to_string(slots), r.offset() - 8);
  for (std::uint64_t s = 0; s < slots; ++s) {
    const std::uint64_t name_len = r.u64("name length");
    if (name_len == 0 || name_len > kMaxNameLen) {
      throw CorruptArtifact("implausible slot name length " + std::to_string(name_len), r.offset() - 8);
    }
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len, "slot name");
    const std::uint64_t rank = r.u64("rank");
    if (rank == 0 || rank > kMaxRank) throw CorruptArtifact("implausible rank " + std::to_string(rank), r.offset() - 8);
    Shape shape;
    std::uint64_t numel = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      const std::uint64_t d = r.u64("dimension");
      if (d == 0 || d > kMaxElements || numel * d > kMaxElements) {
        throw CorruptArtifact("implausible dimension " + std::to_string(d), r.offset() - 8);
      }
      numel *= d;
      shape.push_back(d);
    }
    Tensor t(shape);
    r.values(t.values(), "slot values");
    if (state.params.contains(name)) throw CorruptArtifact("duplicate slot '" + name + "'", r.offset());
    state.params.add(std::move(name), std::move(t));
  }
  state.first_moment = state.params.zeros_like();
  state.second_moment = state.params.zeros_like();
  for (std::size_t s = 0; s < state.params.size(); ++s) r.values(state.first_moment[s].values(), "first moment");
  for (std::size_t s = 0; s < state.params.size(); ++s) r.values(state.second_moment[s].values(), "second moment");
  state.adam_step = r.u64("adam step");
  state.version = r.u64("version");
  if (in.peek() != std::char_traits<char>::eof()) throw CorruptArtifact("trailing bytes after checkpoint", r.offset());
  return state;
}

void save_checkpoint(const std::filesystem::path& path, const StoreState& state) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    write_checkpoint(out, state);
    if (!out) throw std::runtime_error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

StoreState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptArtifact("cannot open checkpoint " + path.string(), 0);
  return read_checkpoint(in);
}

}  // namespace foresit::nd
