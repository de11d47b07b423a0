#include "foresit/imagination/imagination_net.hpp"

#include <cmath>
#include <string>

#include "foresit/error.hpp"

namespace foresit::imagination {

namespace {

std::string weight_slot(std::size_t layer) { return "imagination.w" + std::to_string(layer); }
std::string bias_slot(std::size_t layer) { return "imagination.b" + std::to_string(layer); }

}  // namespace

std::array<std::size_t, kLayers + 1> ImaginationDims::widths() const {
  return {hidden + goal, hidden, hidden / 2, bottleneck, hidden / 2, hidden, hidden};
}

ImaginationDims imagination_dims(std::size_t hidden, std::size_t goal, std::size_t bottleneck) {
  if (hidden < 4 || goal == 0) throw ShapeError("imagination net needs hidden >= 4 and a non-empty goal");
  return {hidden, goal, bottleneck == 0 ? hidden / 4 : bottleneck};
}

nd::ParamSet init_imagination_params(const ImaginationDims& dims, std::uint64_t seed) {
  // Glorot-uniform weights, zero biases: keeps activations out of tanh
  // saturation and away from zero through all six layers.
  Rng rng(seed);
  const auto w = dims.widths();
  nd::ParamSet p;
  for (std::size_t l = 0; l < kLayers; ++l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w[l] + w[l + 1]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    nd::Tensor weight(nd::Shape{w[l + 1], w[l]});
    for (double& v : weight.values()) v = dist(rng);
    p.add(weight_slot(l), std::move(weight));
    p.add(bias_slot(l), nd::Tensor(nd::Shape{w[l + 1]}));
  }
  return p;
}

nd::Var imagination_forward(nd::Tape& tape, const ImaginationDims& dims, nd::Var input) {
  if (tape.size(input) != dims.hidden + dims.goal) {
    throw ShapeError("imagination input [" + std::to_string(tape.size(input)) + "] expected [" +
                     std::to_string(dims.hidden + dims.goal) + "]");
  }
  nd::Var x = input;
  for (std::size_t l = 0; l < kLayers; ++l) {
    x = tape.tanh(tape.linear(x, tape.param(weight_slot(l)), tape.param(bias_slot(l))));
  }
  return x;
}

std::vector<double> imagine_clean(const nd::ParamSet& weights, const ImaginationDims& dims,
                                  std::span<const double> s0, std::span<const double> goal) {
  nd::Tape tape(&weights);
  std::vector<double> input(s0.begin(), s0.end());
  input.insert(input.end(), goal.begin(), goal.end());
  const nd::Var out = imagination_forward(tape, dims, tape.constant(input));
  const auto v = tape.value(out);
  return {v.begin(), v.end()};
}

std::vector<double> imagine(const nd::ParamSet& weights, const ImaginationDims& dims, std::span<const double> s0,
                            std::span<const double> goal, double sigma2, Rng& rng) {
  if (sigma2 < 0.0) throw std::invalid_argument("imagination noise variance must be non-negative");
  auto out = imagine_clean(weights, dims, s0, goal);
  if (sigma2 > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
    for (double& v : out) v += noise(rng);
  }
  return out;
}

std::vector<double> rnd_imagination(std::size_t hidden, double variance, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(variance));
  std::vector<double> out(hidden);
  for (double& v : out) v = std::tanh(dist(rng));
  return out;
}

}  // namespace foresit::imagination
