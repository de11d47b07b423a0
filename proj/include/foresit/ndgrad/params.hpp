#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "foresit/ndgrad/tensor.hpp"

namespace foresit::nd {

/// Ordered collection of named tensors. Slot ids are stable insertion indices.
class ParamSet {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t slot(std::string_view name) const;
  std::optional<std::size_t> find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }

  std::size_t size() const noexcept { return tensors_.size(); }
  const std::string& name(std::size_t slot) const { return names_.at(slot); }
  Tensor& operator[](std::size_t slot) { return tensors_.at(slot); }
  const Tensor& operator[](std::size_t slot) const { return tensors_.at(slot); }
  Tensor& at(std::string_view name) { return tensors_[slot(name)]; }
  const Tensor& at(std::string_view name) const { return tensors_[slot(name)]; }

  /// Same slot names and shapes in the same order.
  bool same_layout(const ParamSet& other) const;
  /// Zero-valued copy with identical layout.
  ParamSet zeros_like() const;
  std::size_t total_size() const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

/// Per-slot gradient buffers laid out like a ParamSet. Empty buffer means zero.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::size_t slots) : slots_(slots) {}

  std::size_t size() const noexcept { return slots_.size(); }
  std::vector<double>& operator[](std::size_t slot) { return slots_.at(slot); }
  const std::vector<double>& operator[](std::size_t slot) const { return slots_.at(slot); }

  /// Value of element `i` in slot `slot`, zero when the slot was never touched.
  double get(std::size_t slot, std::size_t i) const;
  bool all_finite() const;
  double global_norm() const;
  void scale(double factor);
  /// Rescale so the global L2 norm is at most `max_norm`. Returns the pre-clip norm.
  double clip_global_norm(double max_norm);

 private:
  std::vector<std::vector<double>> slots_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Full persistent state of a ParamStore, used by checkpoints.
struct StoreState {
  ParamSet params;
  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t adam_step = 0;
  std::uint64_t version = 0;
};

/// Shared parameter store with Adam moments.
///
/// Readers take a shared lock and copy; gradient application and whole-store
/// replacement take the exclusive lock, so a reader sees either the state
/// before or after a write and never a mix.
class ParamStore {
 public:
  explicit ParamStore(ParamSet init, AdamConfig adam = {});
  explicit ParamStore(StoreState state, AdamConfig adam = {});

  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  ParamSet snapshot() const;
  StoreState state() const;
  std::uint64_t version() const;
  std::uint64_t incidents() const noexcept { return incidents_.load(); }
  const AdamConfig& adam() const noexcept { return adam_; }

  /// One Adam step. Returns false (and counts an incident) when any gradient
  /// is non-finite; the store is left untouched in that case.
  bool apply_gradients(const Gradients& grads, double lr);

  /// Atomically replace every slot's values. Layout must match. Bumps version.
  void replace(const ParamSet& params);

 private:
  mutable std::shared_mutex mutex_;
  StoreState state_;
  AdamConfig adam_;
  std::atomic<std::uint64_t> incidents_{0};
};

}  // namespace foresit::nd
