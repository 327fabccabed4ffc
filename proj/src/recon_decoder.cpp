#include "teachctl/recon_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "teachctl/error.hpp"

namespace teachctl {

namespace {

void check_input(const DecoderParams& params, const FeatureMap& masked) {
  if (masked.channels != params.channels) {
    fail(ErrorKind::Input, "decoder expects " + std::to_string(params.channels) + " channels, got " +
                               std::to_string(masked.channels));
  }
  if (masked.size() != masked.channels * masked.positions()) {
    fail(ErrorKind::Input, "feature map buffer does not match its shape");
  }
}

// Hidden pre-activations and outputs for one position.
void forward_position(const DecoderParams& p, const FeatureMap& in, std::size_t pos,
                      std::vector<double>& x, std::vector<double>& pre, std::vector<double>& out) {
  const std::size_t hw = in.positions();
  for (std::size_t c = 0; c < p.channels; ++c) x[c] = in.values[c * hw + pos];
  for (std::size_t j = 0; j < p.hidden; ++j) {
    double s = p.b1[j];
    const double* row = &p.w1[j * p.channels];
    for (std::size_t c = 0; c < p.channels; ++c) s += row[c] * x[c];
    pre[j] = s;
  }
  for (std::size_t c = 0; c < p.channels; ++c) {
    double s = p.b2[c];
    const double* row = &p.w2[c * p.hidden];
    for (std::size_t j = 0; j < p.hidden; ++j) s += row[j] * std::max(pre[j], 0.0);
    out[c] = s;
  }
}

}  // namespace

DecoderParams DecoderParams::zeros(std::size_t channels, std::size_t hidden) {
  if (channels == 0 || hidden == 0) fail(ErrorKind::Input, "decoder dimensions must be >= 1");
  DecoderParams p;
  p.channels = channels;
  p.hidden = hidden;
  p.w1.assign(hidden * channels, 0.0);
  p.b1.assign(hidden, 0.0);
  p.w2.assign(channels * hidden, 0.0);
  p.b2.assign(channels, 0.0);
  return p;
}

DecoderParams DecoderParams::init_uniform(std::size_t channels, std::size_t hidden, std::uint64_t seed) {
  DecoderParams p = zeros(channels, hidden);
  std::mt19937_64 rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(channels));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> u1(-bound1, bound1);
  std::uniform_real_distribution<double> u2(-bound2, bound2);
  for (auto& v : p.w1) v = u1(rng);
  for (auto& v : p.b1) v = u1(rng);
  for (auto& v : p.w2) v = u2(rng);
  for (auto& v : p.b2) v = u2(rng);
  return p;
}

double& DecoderParams::param(std::size_t i) {
  if (i < w1.size()) return w1[i];
  i -= w1.size();
  if (i < b1.size()) return b1[i];
  i -= b1.size();
  if (i < w2.size()) return w2[i];
  i -= w2.size();
  if (i < b2.size()) return b2[i];
  fail(ErrorKind::Input, "decoder parameter index out of range");
}

double DecoderParams::param(std::size_t i) const { return const_cast<DecoderParams&>(*this).param(i); }

void DecoderParams::validate() const {
  if (channels == 0 || hidden == 0 || w1.size() != hidden * channels || b1.size() != hidden ||
      w2.size() != channels * hidden || b2.size() != channels) {
    fail(ErrorKind::Input, "decoder parameter shapes are inconsistent");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(w1) || !finite(b1) || !finite(w2) || !finite(b2)) {
    fail(ErrorKind::Input, "decoder parameters contain non-finite values");
  }
}

std::size_t default_hidden_dim(std::size_t channels) noexcept { return std::max<std::size_t>(1, channels / 2); }

FeatureMap forward(const DecoderParams& params, const FeatureMap& masked) {
  check_input(params, masked);
  FeatureMap out(masked.level, masked.channels, masked.height, masked.width);
  std::vector<double> x(params.channels), pre(params.hidden), y(params.channels);
  const std::size_t hw = masked.positions();
  for (std::size_t pos = 0; pos < hw; ++pos) {
    forward_position(params, masked, pos, x, pre, y);
    for (std::size_t c = 0; c < params.channels; ++c) out.values[c * hw + pos] = y[c];
  }
  return out;
}

LossAndGrad loss_and_grad(const DecoderParams& params, const FeatureMap& masked, const FeatureMap& target) {
  check_input(params, masked);
  if (!masked.same_shape(target) || target.size() != masked.size()) {
    fail(ErrorKind::Input, "loss_and_grad: input and target shapes differ");
  }
  LossAndGrad result{0.0, DecoderParams::zeros(params.channels, params.hidden)};
  DecoderGrads& g = result.grads;

  const std::size_t hw = masked.positions();
  const double scale = 2.0 / static_cast<double>(target.size());
  std::vector<double> x(params.channels), pre(params.hidden), y(params.channels);
  std::vector<double> d_out(params.channels), d_pre(params.hidden);
  double sum_sq = 0.0;

  for (std::size_t pos = 0; pos < hw; ++pos) {
    forward_position(params, masked, pos, x, pre, y);
    for (std::size_t c = 0; c < params.channels; ++c) {
      const double r = y[c] - target.values[c * hw + pos];
      sum_sq += r * r;
      d_out[c] = scale * r;
    }
    for (std::size_t j = 0; j < params.hidden; ++j) d_pre[j] = 0.0;
    for (std::size_t c = 0; c < params.channels; ++c) {
      g.b2[c] += d_out[c];
      double* grow = &g.w2[c * params.hidden];
      const double* wrow = &params.w2[c * params.hidden];
      for (std::size_t j = 0; j < params.hidden; ++j) {
        grow[j] += d_out[c] * std::max(pre[j], 0.0);
        d_pre[j] += wrow[j] * d_out[c];
      }
    }
    for (std::size_t j = 0; j < params.hidden; ++j) {
      if (pre[j] <= 0.0) continue;
      g.b1[j] += d_pre[j];
      double* grow = &g.w1[j * params.channels];
      for (std::size_t c = 0; c < params.channels; ++c) grow[c] += d_pre[j] * x[c];
    }
  }
  result.loss = sum_sq / static_cast<double>(target.size());
  return result;
}

DecoderParams sgd_step(DecoderParams params, const DecoderGrads& grads, double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorKind::Input, "learning rate must be > 0");
  if (grads.parameter_count() != params.parameter_count() || grads.channels != params.channels ||
      grads.hidden != params.hidden) {
    fail(ErrorKind::Input, "gradient shape does not match parameters");
  }
  auto step = [lr](std::vector<double>& p, const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  };
  step(params.w1, grads.w1);
  step(params.b1, grads.b1);
  step(params.w2, grads.w2);
  step(params.b2, grads.b2);
  return params;
}

}  // namespace teachctl
