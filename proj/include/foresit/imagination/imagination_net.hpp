#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "foresit/ndgrad/params.hpp"
#include "foresit/ndgrad/tape.hpp"
#include "foresit/rng.hpp"

namespace foresit::imagination {

inline constexpr std::size_t kLayers = 6;

/// Hourglass MLP [hidden+goal, hidden, hidden/2, bottleneck, hidden/2, hidden, hidden]
/// with tanh after every layer.
struct ImaginationDims {
  std::size_t hidden = 128;
  std::size_t goal = 10;
  std::size_t bottleneck = 32;

  std::array<std::size_t, kLayers + 1> widths() const;
};

/// bottleneck == 0 selects hidden/4.
ImaginationDims imagination_dims(std::size_t hidden, std::size_t goal, std::size_t bottleneck = 0);

/// Glorot-uniform weights, zero biases.
nd::ParamSet init_imagination_params(const ImaginationDims& dims, std::uint64_t seed);

/// f_w on a tape; `input` is [s0 : g].
nd::Var imagination_forward(nd::Tape& tape, const ImaginationDims& dims, nd::Var input);

/// f_w([s0 : g]) evaluated without recording gradients.
std::vector<double> imagine_clean(const nd::ParamSet& weights, const ImaginationDims& dims,
                                  std::span<const double> s0, std::span<const double> goal);

/// f_w([s0 : g]) + eta, eta ~ N(0, sigma2 I). sigma2 == 0 draws nothing.
std::vector<double> imagine(const nd::ParamSet& weights, const ImaginationDims& dims, std::span<const double> s0,
                            std::span<const double> goal, double sigma2, Rng& rng);

/// tanh(z), z ~ N(0, variance I): the uninformative imagination used by the RND ablation.
std::vector<double> rnd_imagination(std::size_t hidden, double variance, Rng& rng);

}  // namespace foresit::imagination
