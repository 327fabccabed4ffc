#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace teachctl {

// Dense C x H x W grid, row-major with channel as the slowest axis.
struct FeatureMap {
  std::size_t level = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(std::size_t level, std::size_t channels, std::size_t height, std::size_t width,
             double fill = 0.0);

  std::size_t positions() const noexcept { return height * width; }
  std::size_t size() const noexcept { return values.size(); }
  bool same_shape(const FeatureMap& other) const noexcept {
    return channels == other.channels && height == other.height && width == other.width;
  }

  double& at(std::size_t c, std::size_t y, std::size_t x) { return values[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * height + y) * width + x];
  }

  // Throws ErrorKind::Input if a dimension is zero, the buffer size disagrees
  // with the shape, or a value is not finite.
  void validate() const;

  bool operator==(const FeatureMap&) const = default;
};

// Binary spatial mask; 1 marks a hidden position.
struct MaskPlan {
  std::size_t level = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> mask;
  double ratio_used = 0.0;
  std::uint64_t seed = 0;

  std::size_t masked_count() const noexcept;
  bool operator==(const MaskPlan&) const = default;
};

struct LossPair {
  double l_mask = 0.0;
  double l_teach = 0.0;
  double total = 0.0;
};

// floor(mu * h * w)
std::size_t mask_count(std::size_t h, std::size_t w, double mu);

// Seed for one pyramid level at one training step.
std::uint64_t derive_mask_seed(std::uint64_t run_seed, std::size_t level, std::uint64_t step);

// Picks exactly mask_count(h, w, mu) positions uniformly without replacement.
MaskPlan generate_mask(std::size_t h, std::size_t w, double mu, std::uint64_t seed, std::size_t level = 0);

// One plan per level, all at the same ratio.
std::vector<MaskPlan> generate_pyramid_masks(const std::vector<FeatureMap>& pyramid, double mu,
                                             std::uint64_t run_seed, std::uint64_t step);

// Replaces every channel at masked positions with `token`.
FeatureMap apply_mask(const FeatureMap& f, const MaskPlan& plan, double token = 0.0);

// Mean squared error over all C*H*W elements.
double mse_loss(const FeatureMap& recon, const FeatureMap& target);

LossPair total_loss(double l_mask, double l_teach);

}  // namespace teachctl
