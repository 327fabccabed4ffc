#pragma once

// Two-layer per-position reconstruction decoder:
//   out(p) = w2 * relu(w1 * in(p) + b1) + b2
// applied independently at every spatial position of the last pyramid level.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "teachctl/feature_masking.hpp"

namespace teachctl {

struct DecoderParams {
  std::size_t channels = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;  // hidden x channels, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // channels x hidden, row-major
  std::vector<double> b2;  // channels

  static DecoderParams zeros(std::size_t channels, std::size_t hidden);
  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
  static DecoderParams init_uniform(std::size_t channels, std::size_t hidden, std::uint64_t seed);

  std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + b2.size(); }
  // Flat view in the order w1, b1, w2, b2.
  double& param(std::size_t i);
  double param(std::size_t i) const;

  void validate() const;
  bool operator==(const DecoderParams&) const = default;
};

// Gradients share the parameter layout.
using DecoderGrads = DecoderParams;

// Lighter than the encoder: half the channel count, at least one unit.
std::size_t default_hidden_dim(std::size_t channels) noexcept;

FeatureMap forward(const DecoderParams& params, const FeatureMap& masked);

struct LossAndGrad {
  double loss = 0.0;
  DecoderGrads grads;
};

// Exact gradient of mse_loss(forward(params, masked), target).
LossAndGrad loss_and_grad(const DecoderParams& params, const FeatureMap& masked, const FeatureMap& target);

DecoderParams sgd_step(DecoderParams params, const DecoderGrads& grads, double lr);

}  // namespace teachctl
