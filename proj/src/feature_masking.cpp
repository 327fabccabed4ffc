#include "teachctl/feature_masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "teachctl/error.hpp"

namespace teachctl {

FeatureMap::FeatureMap(std::size_t level, std::size_t channels, std::size_t height, std::size_t width,
                       double fill)
    : level(level), channels(channels), height(height), width(width),
      values(channels * height * width, fill) {}

void FeatureMap::validate() const {
  if (channels == 0 || height == 0 || width == 0) {
    fail(ErrorKind::Input, "feature map dimensions must be >= 1");
  }
  if (values.size() != channels * height * width) {
    fail(ErrorKind::Input, "feature map buffer has " + std::to_string(values.size()) +
                               " values, shape needs " + std::to_string(channels * height * width));
  }
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    fail(ErrorKind::Input, "feature map contains non-finite values");
  }
}

std::size_t MaskPlan::masked_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::size_t mask_count(std::size_t h, std::size_t w, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) {
    fail(ErrorKind::Domain, "mask ratio " + std::to_string(mu) + " outside [0, 1]");
  }
  return static_cast<std::size_t>(std::floor(mu * static_cast<double>(h * w)));
}

std::uint64_t derive_mask_seed(std::uint64_t run_seed, std::size_t level, std::uint64_t step) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(step >> 32), 0x6d61736bu};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

MaskPlan generate_mask(std::size_t h, std::size_t w, double mu, std::uint64_t seed, std::size_t level) {
  const std::size_t count = mask_count(h, w, mu);
  MaskPlan plan;
  plan.level = level;
  plan.height = h;
  plan.width = w;
  plan.ratio_used = mu;
  plan.seed = seed;
  plan.mask.assign(h * w, 0);

  std::vector<std::size_t> order(h * w);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < count; ++i) plan.mask[order[i]] = 1;
  return plan;
}

std::vector<MaskPlan> generate_pyramid_masks(const std::vector<FeatureMap>& pyramid, double mu,
                                             std::uint64_t run_seed, std::uint64_t step) {
  std::vector<MaskPlan> plans;
  plans.reserve(pyramid.size());
  for (const auto& f : pyramid) {
    plans.push_back(generate_mask(f.height, f.width, mu, derive_mask_seed(run_seed, f.level, step), f.level));
  }
  return plans;
}

FeatureMap apply_mask(const FeatureMap& f, const MaskPlan& plan, double token) {
  if (plan.height != f.height || plan.width != f.width || plan.mask.size() != f.positions()) {
    fail(ErrorKind::Input, "mask plan " + std::to_string(plan.height) + "x" + std::to_string(plan.width) +
                               " does not match feature map " + std::to_string(f.height) + "x" +
                               std::to_string(f.width));
  }
  FeatureMap out = f;
  const std::size_t hw = f.positions();
  for (std::size_t p = 0; p < hw; ++p) {
    if (!plan.mask[p]) continue;
    for (std::size_t c = 0; c < f.channels; ++c) out.values[c * hw + p] = token;
  }
  return out;
}

double mse_loss(const FeatureMap& recon, const FeatureMap& target) {
  if (!recon.same_shape(target) || recon.size() != target.size() || target.size() == 0) {
    fail(ErrorKind::Input, "mse_loss: shape mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = recon.values[i] - target.values[i];
    sum += d * d;
  }
  return sum / static_cast<double>(target.size());
}

LossPair total_loss(double l_mask, double l_teach) {
  if (!std::isfinite(l_mask) || !std::isfinite(l_teach) || l_mask < 0.0 || l_teach < 0.0) {
    fail(ErrorKind::Input, "losses must be finite and >= 0");
  }
  return {l_mask, l_teach, l_mask + l_teach};
}

}  // namespace teachctl
