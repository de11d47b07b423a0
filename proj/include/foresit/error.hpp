#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace foresit {

/// Tensor or parameter shapes disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration failed to parse or validate. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A persisted artifact (checkpoint, layout file) is malformed.
class CorruptArtifact : public std::runtime_error {
 public:
  CorruptArtifact(const std::string& message, std::uint64_t offset)
      : std::runtime_error(message + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace foresit
