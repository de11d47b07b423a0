#include "foresit/ndgrad/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>

#include "foresit/error.hpp"

namespace foresit::nd {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<const RowMat>;
using MutMatMap = Eigen::Map<RowMat>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

std::atomic<std::uint32_t> g_next_tag{1};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (shape_numel(a) != shape_numel(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

VecMap vmap(std::span<const double> s) { return VecMap(s.data(), static_cast<Eigen::Index>(s.size())); }
MutVecMap vmap(std::vector<double>& s) { return MutVecMap(s.data(), static_cast<Eigen::Index>(s.size())); }

}  // namespace

Tape::Tape(const ParamSet* params) : params_(params), tag_(g_next_tag.fetch_add(1)) {
  if (params_) param_nodes_.assign(params_->size(), -1);
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != tag_ || v.index >= nodes_.size()) {
    throw std::invalid_argument("variable is not recorded on this tape");
  }
  return nodes_[v.index];
}

std::span<const double> Tape::val(std::uint32_t i) const {
  const Node& n = nodes_[i];
  if (n.external) return n.external->values();
  return n.value;
}

std::vector<double>& Tape::grad_of(std::uint32_t i) {
  Node& n = nodes_[i];
  if (n.grad.empty()) n.grad.assign(n.external ? n.external->size() : n.value.size(), 0.0);
  return n.grad;
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), tag_};
}

std::span<const double> Tape::value(Var v) const {
  node(v);
  return val(v.index);
}

double Tape::scalar(Var v) const {
  auto s = value(v);
  if (s.size() != 1) throw ShapeError("scalar(): node has shape " + shape_str(node(v).shape));
  return s[0];
}

std::size_t Tape::size(Var v) const { return value(v).size(); }

const Shape& Tape::shape(Var v) const { return node(v).shape; }

Var Tape::constant(std::span<const double> values) {
  if (values.empty()) throw ShapeError("constant(): empty value");
  Node n;
  n.op = Op::Constant;
  n.shape = {values.size()};
  n.value.assign(values.begin(), values.end());
  return push(std::move(n));
}

Var Tape::constant(const Tensor& tensor) {
  if (tensor.size() == 0) throw ShapeError("constant(): empty tensor");
  Node n;
  n.op = Op::Constant;
  n.shape = tensor.shape();
  n.value = tensor.storage();
  return push(std::move(n));
}

Var Tape::param(std::size_t slot) {
  if (!params_) throw std::logic_error("tape has no parameter set");
  if (slot >= params_->size()) throw std::out_of_range("parameter slot out of range");
  if (param_nodes_[slot] >= 0) return Var{static_cast<std::uint32_t>(param_nodes_[slot]), tag_};
  Node n;
  n.op = Op::Param;
  n.requires_grad = true;
  n.external = &(*params_)[slot];
  n.shape = n.external->shape();
  n.slot = slot;
  Var v = push(std::move(n));
  param_nodes_[slot] = v.index;
  return v;
}

Var Tape::param(std::string_view name) {
  if (!params_) throw std::logic_error("tape has no parameter set");
  return param(params_->slot(name));
}

Var Tape::linear(Var x, Var weight, Var bias) {
  const Node& xn = node(x);
  const Node& wn = node(weight);
  const Node& bn = node(bias);
  if (wn.shape.size() != 2 || xn.shape.size() != 1 || bn.shape.size() != 1 || wn.shape[1] != xn.shape[0] ||
      wn.shape[0] != bn.shape[0]) {
    throw ShapeError("linear: weight " + shape_str(wn.shape) + " incompatible with input " + shape_str(xn.shape) +
                     " and bias " + shape_str(bn.shape));
  }
  const auto m = static_cast<Eigen::Index>(wn.shape[0]);
  const auto k = static_cast<Eigen::Index>(wn.shape[1]);
  Node n;
  n.op = Op::Linear;
  n.shape = {wn.shape[0]};
  n.requires_grad = xn.requires_grad || wn.requires_grad || bn.requires_grad;
  n.inputs = {x.index, weight.index, bias.index};
  n.value.resize(wn.shape[0]);
  vmap(n.value) = MatMap(val(weight.index).data(), m, k) * vmap(val(x.index)) + vmap(val(bias.index));
  return push(std::move(n));
}

LstmOut Tape::lstm_cell(Var x, Var h, Var c, Var w_ih, Var w_hh, Var bias) {
  const Node& xn = node(x);
  const Node& hn = node(h);
  const Node& cn = node(c);
  const Node& wi = node(w_ih);
  const Node& wh = node(w_hh);
  const Node& bn = node(bias);
  const std::size_t d = hn.shape.at(0);
  if (hn.shape.size() != 1 || cn.shape != hn.shape || wi.shape.size() != 2 || wh.shape.size() != 2 ||
      wi.shape[0] != 4 * d || wh.shape[0] != 4 * d || wh.shape[1] != d || wi.shape[1] != xn.shape.at(0) ||
      bn.shape != Shape{4 * d}) {
    throw ShapeError("lstm_cell: input " + shape_str(xn.shape) + ", hidden " + shape_str(hn.shape) + ", cell " +
                     shape_str(cn.shape) + " incompatible with W_ih " + shape_str(wi.shape) + ", W_hh " +
                     shape_str(wh.shape) + ", bias " + shape_str(bn.shape));
  }
  const auto rows = static_cast<Eigen::Index>(4 * d);
  Node gates;
  gates.op = Op::LstmGates;
  gates.shape = {4 * d};
  gates.requires_grad = xn.requires_grad || hn.requires_grad || wi.requires_grad || wh.requires_grad || bn.requires_grad;
  gates.inputs = {x.index, h.index, w_ih.index, w_hh.index, bias.index};
  gates.value.resize(4 * d);
  auto pre = vmap(gates.value);
  pre = MatMap(val(w_ih.index).data(), rows, static_cast<Eigen::Index>(wi.shape[1])) * vmap(val(x.index)) +
        MatMap(val(w_hh.index).data(), rows, static_cast<Eigen::Index>(d)) * vmap(val(h.index)) +
        vmap(val(bias.index));
  for (std::size_t i = 0; i < 4 * d; ++i) {
    const bool candidate = i >= 2 * d && i < 3 * d;
    gates.value[i] = candidate ? std::tanh(gates.value[i]) : logistic(gates.value[i]);
  }
  const bool c_grad = cn.requires_grad;
  const Var g = push(std::move(gates));

  Node cell;
  cell.op = Op::LstmCell;
  cell.shape = {d};
  cell.requires_grad = nodes_[g.index].requires_grad || c_grad;
  cell.inputs = {g.index, c.index};
  cell.value.resize(d);
  {
    auto gv = val(g.index);
    auto cv = val(c.index);
    for (std::size_t j = 0; j < d; ++j) cell.value[j] = gv[d + j] * cv[j] + gv[j] * gv[2 * d + j];
  }
  const Var c_new = push(std::move(cell));

  Node hid;
  hid.op = Op::LstmHidden;
  hid.shape = {d};
  hid.requires_grad = nodes_[c_new.index].requires_grad;
  hid.inputs = {g.index, c_new.index};
  hid.value.resize(d);
  {
    auto gv = val(g.index);
    auto cv = val(c_new.index);
    for (std::size_t j = 0; j < d; ++j) hid.value[j] = gv[3 * d + j] * std::tanh(cv[j]);
  }
  const Var h_new = push(std::move(hid));
  return {h_new, c_new};
}

Var Tape::unary(Op op, Var x, std::vector<double> out) {
  const Node& xn = node(x);
  Node n;
  n.op = op;
  n.shape = xn.shape;
  n.requires_grad = xn.requires_grad;
  n.inputs = {x.index};
  n.value = std::move(out);
  return push(std::move(n));
}

Var Tape::tanh(Var x) {
  auto in = value(x);
  std::vector<double> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(), [](double v) { return std::tanh(v); });
  return unary(Op::Tanh, x, std::move(out));
}

Var Tape::sigmoid(Var x) {
  auto in = value(x);
  std::vector<double> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(), logistic);
  return unary(Op::Sigmoid, x, std::move(out));
}

Var Tape::softmax(Var x) {
  auto in = value(x);
  const double mx = *std::max_element(in.begin(), in.end());
  std::vector<double> out(in.size());
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) total += (out[i] = std::exp(in[i] - mx));
  for (double& v : out) v /= total;
  return unary(Op::Softmax, x, std::move(out));
}

Var Tape::log_softmax(Var x) {
  auto in = value(x);
  const double mx = *std::max_element(in.begin(), in.end());
  double total = 0.0;
  for (double v : in) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] - lse;
  return unary(Op::LogSoftmax, x, std::move(out));
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Node n;
  n.op = Op::Concat;
  for (Var p : parts) {
    const Node& pn = node(p);
    n.requires_grad = n.requires_grad || pn.requires_grad;
    n.inputs.push_back(p.index);
    auto v = val(p.index);
    n.value.insert(n.value.end(), v.begin(), v.end());
  }
  n.shape = {n.value.size()};
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  require_same(node(a).shape, node(b).shape, "add");
  auto av = value(a);
  auto bv = value(b);
  Node n;
  n.op = Op::Add;
  n.shape = node(a).shape;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.inputs = {a.index, b.index};
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] + bv[i];
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  require_same(node(a).shape, node(b).shape, "sub");
  auto av = value(a);
  auto bv = value(b);
  Node n;
  n.op = Op::Sub;
  n.shape = node(a).shape;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.inputs = {a.index, b.index};
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] - bv[i];
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  require_same(node(a).shape, node(b).shape, "mul");
  auto av = value(a);
  auto bv = value(b);
  Node n;
  n.op = Op::Mul;
  n.shape = node(a).shape;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.inputs = {a.index, b.index};
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] * bv[i];
  return push(std::move(n));
}

Var Tape::scale(Var x, double factor) {
  auto in = value(x);
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * factor;
  Var v = unary(Op::Scale, x, std::move(out));
  nodes_[v.index].aux = factor;
  return v;
}

Var Tape::sum(Var x) {
  auto in = value(x);
  double total = 0.0;
  for (double v : in) total += v;
  Var v = unary(Op::Sum, x, {total});
  nodes_[v.index].shape = {1};
  return v;
}

Var Tape::dot(Var a, Var b) {
  require_same(node(a).shape, node(b).shape, "dot");
  auto av = value(a);
  auto bv = value(b);
  Node n;
  n.op = Op::Dot;
  n.shape = {1};
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.inputs = {a.index, b.index};
  n.value = {vmap(av).dot(vmap(bv))};
  return push(std::move(n));
}

Var Tape::pick(Var x, std::size_t index) {
  auto in = value(x);
  if (index >= in.size()) {
    throw ShapeError("pick: index " + std::to_string(index) + " outside " + shape_str(node(x).shape));
  }
  Var v = unary(Op::Pick, x, {in[index]});
  nodes_[v.index].shape = {1};
  nodes_[v.index].aux = static_cast<double>(index);
  return v;
}

Var Tape::dots(Var q, std::span<const Var> keys) {
  if (keys.empty()) throw ShapeError("dots: no keys");
  const Node& qn = node(q);
  Node n;
  n.op = Op::Dots;
  n.shape = {keys.size()};
  n.requires_grad = qn.requires_grad;
  n.inputs.push_back(q.index);
  auto qv = vmap(val(q.index));
  for (Var k : keys) {
    const Node& kn = node(k);
    require_same(qn.shape, kn.shape, "dots");
    n.requires_grad = n.requires_grad || kn.requires_grad;
    n.inputs.push_back(k.index);
    n.value.push_back(qv.dot(vmap(val(k.index))));
  }
  return push(std::move(n));
}

Var Tape::mix(Var weights, std::span<const Var> vecs) {
  const Node& wn = node(weights);
  if (vecs.empty() || wn.shape != Shape{vecs.size()}) {
    throw ShapeError("mix: weights " + shape_str(wn.shape) + " for " + std::to_string(vecs.size()) + " vectors");
  }
  const Shape vshape = node(vecs[0]).shape;
  Node n;
  n.op = Op::Mix;
  n.shape = vshape;
  n.requires_grad = wn.requires_grad;
  n.inputs.push_back(weights.index);
  n.value.assign(shape_numel(vshape), 0.0);
  auto w = val(weights.index);
  auto out = vmap(n.value);
  for (std::size_t j = 0; j < vecs.size(); ++j) {
    const Node& vn = node(vecs[j]);
    require_same(vshape, vn.shape, "mix");
    n.requires_grad = n.requires_grad || vn.requires_grad;
    n.inputs.push_back(vecs[j].index);
    out += w[j] * vmap(val(vecs[j].index));
  }
  return push(std::move(n));
}

Var Tape::smooth_l1(Var pred, Var target) {
  const Node& pn = node(pred);
  const Node& tn = node(target);
  if (pn.shape != tn.shape) {
    throw ShapeError("smooth_l1: prediction " + shape_str(pn.shape) + " vs target " + shape_str(tn.shape));
  }
  auto p = val(pred.index);
  auto t = val(target.index);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    const double a = std::abs(d);
    total += a < 1.0 ? 0.5 * d * d : a - 0.5;
  }
  Node n;
  n.op = Op::SmoothL1;
  n.shape = {1};
  n.requires_grad = pn.requires_grad || tn.requires_grad;
  n.inputs = {pred.index, target.index};
  n.value = {total / static_cast<double>(p.size())};
  return push(std::move(n));
}

Gradients Tape::backward(Var loss) {
  const Node& ln = node(loss);
  if (shape_numel(ln.shape) != 1) throw ShapeError("backward: loss must be scalar, got " + shape_str(ln.shape));
  for (auto& n : nodes_) n.grad.clear();
  grad_of(loss.index)[0] = 1.0;
  for (std::int64_t i = loss.index; i >= 0; --i) backprop_node(static_cast<std::uint32_t>(i));

  Gradients out(params_ ? params_->size() : 0);
  for (std::size_t s = 0; s < param_nodes_.size(); ++s) {
    if (param_nodes_[s] >= 0) out[s] = nodes_[static_cast<std::size_t>(param_nodes_[s])].grad;
  }
  return out;
}

void Tape::backprop_node(std::uint32_t i) {
  Node& n = nodes_[i];
  if (!n.requires_grad || n.grad.empty()) return;
  const std::vector<double> g = n.grad;  // grad_of() below may touch other nodes only
  const auto& in = n.inputs;
  auto wants = [&](std::size_t k) { return nodes_[in[k]].requires_grad; };

  switch (n.op) {
    case Op::Constant:
    case Op::Param:
      break;
    case Op::Linear: {
      const auto& ws = nodes_[in[1]].shape;
      const auto m = static_cast<Eigen::Index>(ws[0]);
      const auto k = static_cast<Eigen::Index>(ws[1]);
      auto gv = vmap(std::span<const double>(g));
      if (wants(0)) vmap(grad_of(in[0])) += MatMap(val(in[1]).data(), m, k).transpose() * gv;
      if (wants(1)) MutMatMap(grad_of(in[1]).data(), m, k).noalias() += gv * vmap(val(in[0])).transpose();
      if (wants(2)) vmap(grad_of(in[2])) += gv;
      break;
    }
    case Op::LstmGates: {
      const std::size_t d4 = n.value.size();
      const std::size_t d = d4 / 4;
      std::vector<double> dpre(d4);
      for (std::size_t j = 0; j < d4; ++j) {
        const double a = n.value[j];
        const bool candidate = j >= 2 * d && j < 3 * d;
        dpre[j] = g[j] * (candidate ? 1.0 - a * a : a * (1.0 - a));
      }
      auto dp = vmap(std::span<const double>(dpre));
      const auto rows = static_cast<Eigen::Index>(d4);
      const auto nin = static_cast<Eigen::Index>(nodes_[in[2]].shape[1]);
      const auto nh = static_cast<Eigen::Index>(d);
      if (wants(0)) vmap(grad_of(in[0])) += MatMap(val(in[2]).data(), rows, nin).transpose() * dp;
      if (wants(1)) vmap(grad_of(in[1])) += MatMap(val(in[3]).data(), rows, nh).transpose() * dp;
      if (wants(2)) MutMatMap(grad_of(in[2]).data(), rows, nin).noalias() += dp * vmap(val(in[0])).transpose();
      if (wants(3)) MutMatMap(grad_of(in[3]).data(), rows, nh).noalias() += dp * vmap(val(in[1])).transpose();
      if (wants(4)) vmap(grad_of(in[4])) += dp;
      break;
    }
    case Op::LstmCell: {
      const std::size_t d = n.value.size();
      auto gates = val(in[0]);
      auto c = val(in[1]);
      if (wants(0)) {
        auto& gg = grad_of(in[0]);
        for (std::size_t j = 0; j < d; ++j) {
          gg[j] += g[j] * gates[2 * d + j];
          gg[d + j] += g[j] * c[j];
          gg[2 * d + j] += g[j] * gates[j];
        }
      }
      if (wants(1)) {
        auto& gc = grad_of(in[1]);
        for (std::size_t j = 0; j < d; ++j) gc[j] += g[j] * gates[d + j];
      }
      break;
    }
    case Op::LstmHidden: {
      const std::size_t d = n.value.size();
      auto gates = val(in[0]);
      auto c = val(in[1]);
      for (std::size_t j = 0; j < d; ++j) {
        const double tc = std::tanh(c[j]);
        if (wants(0)) grad_of(in[0])[3 * d + j] += g[j] * tc;
        if (wants(1)) grad_of(in[1])[j] += g[j] * gates[3 * d + j] * (1.0 - tc * tc);
      }
      break;
    }
    case Op::Tanh: {
      auto& gx = grad_of(in[0]);
      for (std::size_t j = 0; j < g.size(); ++j) gx[j] += g[j] * (1.0 - n.value[j] * n.value[j]);
      break;
    }
    case Op::Sigmoid: {
      auto& gx = grad_of(in[0]);
      for (std::size_t j = 0; j < g.size(); ++j) gx[j] += g[j] * n.value[j] * (1.0 - n.value[j]);
      break;
    }
    case Op::Softmax: {
      double inner = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) inner += g[j] * n.value[j];
      auto& gx = grad_of(in[0]);
      for (std::size_t j = 0; j < g.size(); ++j) gx[j] += n.value[j] * (g[j] - inner);
      break;
    }
    case Op::LogSoftmax: {
      double total = 0.0;
      for (double v : g) total += v;
      auto& gx = grad_of(in[0]);
      for (std::size_t j = 0; j < g.size(); ++j) gx[j] += g[j] - std::exp(n.value[j]) * total;
      break;
    }
    case Op::Concat: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < in.size(); ++k) {
        const std::size_t len = val(in[k]).size();
        if (wants(k)) {
          auto& gp = grad_of(in[k]);
          for (std::size_t j = 0; j < len; ++j) gp[j] += g[offset + j];
        }
        offset += len;
      }
      break;
    }
    case Op::Add:
    case Op::Sub: {
      const double sign = n.op == Op::Add ? 1.0 : -1.0;
      if (wants(0)) {
        auto& ga = grad_of(in[0]);
        for (std::size_t j = 0; j < g.size(); ++j) ga[j] += g[j];
      }
      if (wants(1)) {
        auto& gb = grad_of(in[1]);
        for (std::size_t j = 0; j < g.size(); ++j) gb[j] += sign * g[j];
      }
      break;
    }
    case Op::Mul: {
      auto a = val(in[0]);
      auto b = val(in[1]);
      if (wants(0)) {
        auto& ga = grad_of(in[0]);
        for (std::size_t j = 0; j < g.size(); ++j) ga[j] += g[j] * b[j];
      }
      if (wants(1)) {
        auto& gb = grad_of(in[1]);
        for (std::size_t j = 0; j < g.size(); ++j) gb[j] += g[j] * a[j];
      }
      break;
    }
    case Op::Scale: {
      auto& gx = grad_of(in[0]);
      for (std::size_t j = 0; j < g.size(); ++j) gx[j] += g[j] * n.aux;
      break;
    }
    case Op::Sum: {
      auto& gx = grad_of(in[0]);
      for (double& v : gx) v += g[0];
      break;
    }
    case Op::Dot: {
      auto a = val(in[0]);
      auto b = val(in[1]);
      if (wants(0)) {
        auto& ga = grad_of(in[0]);
        for (std::size_t j = 0; j < a.size(); ++j) ga[j] += g[0] * b[j];
      }
      if (wants(1)) {
        auto& gb = grad_of(in[1]);
        for (std::size_t j = 0; j < a.size(); ++j) gb[j] += g[0] * a[j];
      }
      break;
    }
    case Op::Pick:
      grad_of(in[0])[static_cast<std::size_t>(n.aux)] += g[0];
      break;
    case Op::Dots: {
      auto q = val(in[0]);
      for (std::size_t k = 1; k < in.size(); ++k) {
        const double gk = g[k - 1];
        if (wants(0)) vmap(grad_of(in[0])) += gk * vmap(val(in[k]));
        if (wants(k)) vmap(grad_of(in[k])) += gk * vmap(q);
      }
      break;
    }
    case Op::Mix: {
      auto w = val(in[0]);
      auto gv = vmap(std::span<const double>(g));
      for (std::size_t k = 1; k < in.size(); ++k) {
        if (wants(0)) grad_of(in[0])[k - 1] += gv.dot(vmap(val(in[k])));
        if (wants(k)) vmap(grad_of(in[k])) += w[k - 1] * gv;
      }
      break;
    }
    case Op::SmoothL1: {
      auto p = val(in[0]);
      auto t = val(in[1]);
      const double inv_n = 1.0 / static_cast<double>(p.size());
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double d = p[j] - t[j];
        const double dd = (std::abs(d) < 1.0 ? d : (d > 0 ? 1.0 : -1.0)) * inv_n * g[0];
        if (wants(0)) grad_of(in[0])[j] += dd;
        if (wants(1)) grad_of(in[1])[j] -= dd;
      }
      break;
    }
  }
}

}  // namespace foresit::nd
