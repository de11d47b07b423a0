#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "foresit/ndgrad/params.hpp"
#include "foresit/ndgrad/tensor.hpp"

namespace foresit::nd {

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t index = 0;
  std::uint32_t tape = 0;
};

struct LstmOut {
  Var h;
  Var c;
};

/// Reverse-mode tape over vector-valued operations.
///
/// Every op appends one node; backward() walks the nodes in exact reverse
/// order and accumulates gradients additively, so a value consumed k times
/// receives the sum of its k contributions. Parameter leaves reference the
/// ParamSet passed at construction and are created at most once per slot.
class Tape {
 public:
  explicit Tape(const ParamSet* params = nullptr);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaves. Constants never receive gradients.
  Var constant(std::span<const double> values);
  Var constant(const Tensor& tensor);
  Var param(std::size_t slot);
  Var param(std::string_view name);

  std::span<const double> value(Var v) const;
  double scalar(Var v) const;
  std::size_t size(Var v) const;
  const Shape& shape(Var v) const;
  std::size_t node_count() const noexcept { return nodes_.size(); }

  /// W[m x n] * x[n] + b[m]
  Var linear(Var x, Var weight, Var bias);
  /// Gates ordered input, forget, candidate, output.
  LstmOut lstm_cell(Var x, Var h, Var c, Var w_ih, Var w_hh, Var bias);

  Var tanh(Var x);
  Var sigmoid(Var x);
  Var softmax(Var x);
  Var log_softmax(Var x);
  Var concat(std::span<const Var> parts);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, double factor);
  Var sum(Var x);
  Var dot(Var a, Var b);
  Var pick(Var x, std::size_t index);
  /// out[j] = q . keys[j]
  Var dots(Var q, std::span<const Var> keys);
  /// out = sum_j weights[j] * vecs[j]
  Var mix(Var weights, std::span<const Var> vecs);
  /// Mean Huber loss with threshold 1.
  Var smooth_l1(Var pred, Var target);

  /// Gradients of a scalar node with respect to every parameter leaf.
  /// Re-running backward on the same tape yields identical results.
  Gradients backward(Var loss);

 private:
  enum class Op : std::uint8_t {
    Constant, Param, Linear, LstmGates, LstmCell, LstmHidden, Tanh, Sigmoid, Softmax, LogSoftmax,
    Concat, Add, Sub, Mul, Scale, Sum, Dot, Pick, Dots, Mix, SmoothL1,
  };

  struct Node {
    Op op = Op::Constant;
    bool requires_grad = false;
    Shape shape;
    std::vector<std::uint32_t> inputs;
    std::vector<double> value;
    const Tensor* external = nullptr;
    std::vector<double> grad;
    double aux = 0.0;
    std::size_t slot = 0;
  };

  const Node& node(Var v) const;
  std::span<const double> val(std::uint32_t i) const;
  std::vector<double>& grad_of(std::uint32_t i);
  Var push(Node n);
  Var unary(Op op, Var x, std::vector<double> out);
  void backprop_node(std::uint32_t i);

  const ParamSet* params_;
  std::uint32_t tag_;
  std::vector<Node> nodes_;
  std::vector<std::int64_t> param_nodes_;
};

}  // namespace foresit::nd
