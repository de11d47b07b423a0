#include "foresit/ndgrad/params.hpp"

#include <cmath>
#include <iostream>
#include <mutex>

#include <Eigen/Core>

#include "foresit/error.hpp"

namespace foresit::nd {

namespace {

using ArrayMap = Eigen::Map<Eigen::ArrayXd>;
using ConstArrayMap = Eigen::Map<const Eigen::ArrayXd>;

}  // namespace

std::size_t ParamSet::add(std::string name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter slot '" + name + "'");
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
  return tensors_.size() - 1;
}

std::optional<std::size_t> ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamSet::slot(std::string_view name) const {
  if (auto s = find(name)) return *s;
  throw std::out_of_range("no parameter slot named '" + std::string(name) + "'");
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].shape() != other.tensors_[i].shape()) return false;
  }
  return true;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (std::size_t i = 0; i < tensors_.size(); ++i) out.add(names_[i], Tensor(tensors_[i].shape()));
  return out;
}

std::size_t ParamSet::total_size() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

double Gradients::get(std::size_t slot, std::size_t i) const {
  const auto& g = slots_.at(slot);
  return g.empty() ? 0.0 : g.at(i);
}

bool Gradients::all_finite() const {
  for (const auto& g : slots_) {
    if (!ConstArrayMap(g.data(), static_cast<Eigen::Index>(g.size())).isFinite().all()) return false;
  }
  return true;
}

double Gradients::global_norm() const {
  double sq = 0.0;
  for (const auto& g : slots_) sq += ConstArrayMap(g.data(), static_cast<Eigen::Index>(g.size())).square().sum();
  return std::sqrt(sq);
}

void Gradients::scale(double factor) {
  for (auto& g : slots_) ArrayMap(g.data(), static_cast<Eigen::Index>(g.size())) *= factor;
}

double Gradients::clip_global_norm(double max_norm) {
  const double norm = global_norm();
  if (max_norm > 0.0 && norm > max_norm) scale(max_norm / norm);
  return norm;
}

ParamStore::ParamStore(ParamSet init, AdamConfig adam) : adam_(adam) {
  state_.first_moment = init.zeros_like();
  state_.second_moment = init.zeros_like();
  state_.params = std::move(init);
}

ParamStore::ParamStore(StoreState state, AdamConfig adam) : state_(std::move(state)), adam_(adam) {
  if (!state_.params.same_layout(state_.first_moment) || !state_.params.same_layout(state_.second_moment)) {
    throw ShapeError("parameter store moments do not match parameter layout");
  }
}

ParamSet ParamStore::snapshot() const {
  std::shared_lock lock(mutex_);
  return state_.params;
}

StoreState ParamStore::state() const {
  std::shared_lock lock(mutex_);
  return state_;
}

std::uint64_t ParamStore::version() const {
  std::shared_lock lock(mutex_);
  return state_.version;
}

bool ParamStore::apply_gradients(const Gradients& grads, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!grads.all_finite()) {
    incidents_.fetch_add(1);
    std::cerr << "[ndgrad] non-finite gradient, update skipped\n";
    return false;
  }
  std::unique_lock lock(mutex_);
  auto& params = state_.params;
  if (grads.size() != params.size()) {
    throw ShapeError("gradient has " + std::to_string(grads.size()) + " slots, store has " +
                     std::to_string(params.size()));
  }
  for (std::size_t s = 0; s < params.size(); ++s) {
    if (!grads[s].empty() && grads[s].size() != params[s].size()) {
      throw ShapeError("gradient for slot '" + params.name(s) + "' has " + std::to_string(grads[s].size()) +
                       " values, parameter is " + shape_str(params[s].shape()));
    }
  }

  const std::uint64_t step = ++state_.adam_step;
  const double b1 = adam_.beta1;
  const double b2 = adam_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t s = 0; s < params.size(); ++s) {
    auto pv = params[s].values();
    ArrayMap p(pv.data(), static_cast<Eigen::Index>(pv.size()));
    ArrayMap m(state_.first_moment[s].values().data(), p.size());
    ArrayMap v(state_.second_moment[s].values().data(), p.size());
    if (grads[s].empty()) {
      m *= b1;
      v *= b2;
    } else {
      ConstArrayMap g(grads[s].data(), p.size());
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g * g;
    }
    p -= lr * (m / bias1) / ((v / bias2).sqrt() + adam_.eps);
  }
  ++state_.version;
  return true;
}

void ParamStore::replace(const ParamSet& params) {
  std::unique_lock lock(mutex_);
  if (!params.same_layout(state_.params)) throw ShapeError("replacement parameters do not match store layout");
  state_.params = params;
  ++state_.version;
}

}  // namespace foresit::nd
