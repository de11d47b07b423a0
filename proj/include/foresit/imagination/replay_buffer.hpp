#pragma once

#include <cstddef>
#include <vector>

#include "foresit/imagination/imagination_net.hpp"
#include "foresit/ndgrad/params.hpp"

namespace foresit::imagination {

/// (s0, g, s_hat) from one successful episode.
struct SubgoalRecord {
  std::vector<double> s0;
  std::vector<double> goal;
  std::vector<double> subgoal;
};

/// Fixed-capacity buffer emptied after every training flush.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Appends and reports whether capacity has been reached. Throws
  /// std::length_error when already full.
  bool push(SubgoalRecord record);
  void clear() noexcept { records_.clear(); }

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool full() const noexcept { return records_.size() == capacity_; }
  bool empty() const noexcept { return records_.empty(); }
  const std::vector<SubgoalRecord>& records() const noexcept { return records_; }

 private:
  std::size_t capacity_;
  std::vector<SubgoalRecord> records_;
};

struct FlushResult {
  double first_epoch_loss = 0.0;
  double final_loss = 0.0;  // mean smooth-L1 over the last epoch
  std::size_t epochs = 0;
  std::vector<double> epoch_losses;
};

/// `epochs` passes over the buffer; each pass takes one Adam step of rate `lr`
/// per mini-batch (batch 1 by default) on the smooth-L1 loss between
/// f_w([s0 : g]) and the stored sub-goal. Epoch loss is the mean of the
/// per-record losses seen during that pass, before each step.
FlushResult train_imagination(const ReplayBuffer& buffer, nd::ParamStore& weights, const ImaginationDims& dims,
                              std::size_t epochs, double lr, std::size_t minibatch = 1);

/// Publish freshly trained weights to the shared store (one atomic replacement).
void sync_shared(nd::ParamStore& shared, const nd::ParamSet& trained);

}  // namespace foresit::imagination
