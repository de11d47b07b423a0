#include "foresit/imagination/replay_buffer.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "foresit/error.hpp"

namespace foresit::imagination {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  records_.reserve(capacity);
}

bool ReplayBuffer::push(SubgoalRecord record) {
  if (full()) throw std::length_error("replay buffer is full; flush before pushing");
  records_.push_back(std::move(record));
  return full();
}

FlushResult train_imagination(const ReplayBuffer& buffer, nd::ParamStore& weights, const ImaginationDims& dims,
                              std::size_t epochs, double lr, std::size_t minibatch) {
  if (buffer.empty()) throw std::invalid_argument("train_imagination: replay buffer is empty");
  if (epochs == 0) throw std::invalid_argument("train_imagination: epochs must be positive");
  minibatch = std::max<std::size_t>(1, minibatch);
  const auto& records = buffer.records();
  for (const auto& r : records) {
    if (r.s0.size() != dims.hidden || r.goal.size() != dims.goal || r.subgoal.size() != dims.hidden) {
      throw ShapeError("train_imagination: record shapes do not match imagination dims");
    }
  }

  FlushResult result;
  result.epochs = epochs;
  std::vector<double> input;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t start = 0; start < records.size(); start += minibatch) {
      const std::size_t stop = std::min(records.size(), start + minibatch);
      const nd::ParamSet w = weights.snapshot();
      nd::Tape tape(&w);
      nd::Var loss{};
      bool first = true;
      for (std::size_t i = start; i < stop; ++i) {
        input.assign(records[i].s0.begin(), records[i].s0.end());
        input.insert(input.end(), records[i].goal.begin(), records[i].goal.end());
        const nd::Var pred = imagination_forward(tape, dims, tape.constant(input));
        const nd::Var l = tape.smooth_l1(pred, tape.constant(records[i].subgoal));
        total += tape.scalar(l);
        loss = first ? l : tape.add(loss, l);
        first = false;
      }
      if (stop - start > 1) loss = tape.scale(loss, 1.0 / static_cast<double>(stop - start));
      weights.apply_gradients(tape.backward(loss), lr);
    }
    result.epoch_losses.push_back(total / static_cast<double>(records.size()));
  }
  result.first_epoch_loss = result.epoch_losses.front();
  result.final_loss = result.epoch_losses.back();
  return result;
}

void sync_shared(nd::ParamStore& shared, const nd::ParamSet& trained) { shared.replace(trained); }

}  // namespace foresit::imagination
