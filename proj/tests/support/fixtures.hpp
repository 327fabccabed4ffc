#pragma once
// Shared fixed inputs for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>

#include "teachctl/feature_masking.hpp"
#include "teachctl/recon_decoder.hpp"

namespace fixture {

// 16-channel 8x8 map: four smooth spatial sources mixed into the channels,
// plus a per-channel offset.
inline teachctl::FeatureMap reconstruction_target() {
  constexpr std::size_t kC = 16, kH = 8, kW = 8, kRank = 4;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double mix[kC][kRank];
  double offset[kC];
  for (auto& row : mix) {
    for (double& v : row) v = u(rng);
  }
  for (double& v : offset) v = u(rng);
  teachctl::FeatureMap f(2, kC, kH, kW);
  for (std::size_t y = 0; y < kH; ++y) {
    for (std::size_t x = 0; x < kW; ++x) {
      const double fy = static_cast<double>(y) / kH, fx = static_cast<double>(x) / kW;
      const double src[kRank] = {std::sin(6.283 * fx), std::cos(6.283 * fy), fx * fy, std::sin(3.1416 * (fx + fy))};
      for (std::size_t c = 0; c < kC; ++c) {
        double v = offset[c];
        for (std::size_t r = 0; r < kRank; ++r) v += mix[c][r] * src[r];
        f.at(c, y, x) = v;
      }
    }
  }
  return f;
}

struct ReconRun {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> losses;  // loss before each step
};

// 200 SGD steps at lr 1e-2 on the fixed target with half the positions
// hidden behind a zero token.
inline ReconRun reconstruction_run(std::size_t steps = 200, double lr = 1e-2) {
  const auto target = reconstruction_target();
  const auto plan = teachctl::generate_mask(target.height, target.width, 0.5, 99, target.level);
  const auto masked = teachctl::apply_mask(target, plan, 0.0);
  auto params = teachctl::DecoderParams::init_uniform(target.channels, teachctl::default_hidden_dim(target.channels), 5);
  ReconRun run;
  for (std::size_t i = 0; i < steps; ++i) {
    auto lg = teachctl::loss_and_grad(params, masked, target);
    run.losses.push_back(lg.loss);
    params = teachctl::sgd_step(params, lg.grads, lr);
  }
  run.initial_loss = run.losses.front();
  run.final_loss = teachctl::mse_loss(teachctl::forward(params, masked), target);
  return run;
}

}  // namespace fixture
