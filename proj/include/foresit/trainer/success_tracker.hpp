#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>

namespace foresit::trainer {

/// Moving success rate over the last `window` episodes.
class SuccessTracker {
 public:
  explicit SuccessTracker(std::size_t window = 100);

  void record(bool success);
  /// Mean of the ring; 0 before any episode.
  double rate() const noexcept;
  std::size_t window() const noexcept { return window_; }
  std::size_t size() const noexcept { return ring_.size(); }
  std::uint64_t total() const noexcept { return total_; }

 private:
  std::size_t window_;
  std::deque<std::uint8_t> ring_;
  std::size_t successes_ = 0;
  std::uint64_t total_ = 0;
};

}  // namespace foresit::trainer
