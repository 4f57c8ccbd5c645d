#pragma once

#include <algorithm>
#include <cmath>

#include "hloc/nn/pointer.hpp"
#include "hloc/rng.hpp"

namespace hloc::testing {

struct GradCheckResult {
  double max_relative_error = 0.0;
  double head_max_relative_error = 0.0;  // head.* parameters only
  std::size_t entries = 0;
};

inline double pointer_loss(nn::PointerNetwork& net, const nn::Mat& x, int target) {
  nn::Graph g;
  return g.value(g.softmax_cross_entropy(net.forward(g, x), target))(0, 0);
}

/// Compares backprop against central differences on every parameter entry.
inline GradCheckResult check_pointer_gradients(const nn::EncoderConfig& config, int input_dim,
                                               int length, std::uint64_t seed) {
  Rng rng(seed);
  nn::PointerNetwork net(config, input_dim, rng);
  nn::Mat x(length, input_dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  const int target = static_cast<int>(rng.below(static_cast<std::uint64_t>(length)));

  for (nn::Parameter& p : net.parameters()) p.zero_grad();
  nn::Graph g;
  g.backward(g.softmax_cross_entropy(net.forward(g, x), target));

  constexpr double h = 1e-5;
  GradCheckResult result;
  for (nn::Parameter& p : net.parameters()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double saved = p.value(i);
      p.value(i) = saved + h;
      const double up = pointer_loss(net, x, target);
      p.value(i) = saved - h;
      const double down = pointer_loss(net, x, target);
      p.value(i) = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p.grad(i);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / denom;
      result.max_relative_error = std::max(result.max_relative_error, rel);
      if (p.name.rfind("head.", 0) == 0) result.head_max_relative_error = std::max(result.head_max_relative_error, rel);
      ++result.entries;
    }
  }
  return result;
}

inline nn::EncoderConfig tiny_config(nn::EncoderKind kind) {
  nn::EncoderConfig c;
  c.kind = kind;
  c.hidden = 8;
  c.layers = 2;
  c.heads = 2;
  c.ff_hidden = 16;
  c.kernel = 3;
  return c;
}

}  // namespace hloc::testing
