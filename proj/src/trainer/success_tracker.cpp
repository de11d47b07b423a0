#include "foresit/trainer/success_tracker.hpp"

#include <stdexcept>

namespace foresit::trainer {

SuccessTracker::SuccessTracker(std::size_t window) : window_(window) {
  if (window == 0) throw std::invalid_argument("success window must be positive");
}

void SuccessTracker::record(bool success) {
  ring_.push_back(success ? 1 : 0);
  successes_ += success ? 1 : 0;
  if (ring_.size() > window_) {
    successes_ -= ring_.front();
    ring_.pop_front();
  }
  ++total_;
}

double SuccessTracker::rate() const noexcept {
  if (ring_.empty()) return 0.0;
  return static_cast<double>(successes_) / static_cast<double>(ring_.size());
}

}  // namespace foresit::trainer
