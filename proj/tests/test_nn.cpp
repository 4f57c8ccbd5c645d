#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "hloc/nn/graph.hpp"
#include "hloc/nn/pointer.hpp"

using namespace hloc;
using namespace hloc::nn;

TEST_CASE("encoder gradients match central differences") {
  for (EncoderKind kind : {EncoderKind::Recurrent, EncoderKind::Convolutional, EncoderKind::Attention}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto r = hloc::testing::check_pointer_gradients(hloc::testing::tiny_config(kind), 5, 6, seed);
      INFO(to_string(kind), " seed ", seed);
      CHECK(r.entries > 0);
      CHECK(r.max_relative_error <= 1e-4);
    }
  }
  EncoderConfig gru = hloc::testing::tiny_config(EncoderKind::Recurrent);
  gru.cell = RecurrentCell::Gru;
  CHECK(hloc::testing::check_pointer_gradients(gru, 5, 6, 9).max_relative_error <= 1e-4);
}

TEST_CASE("uniform logits give ln L loss and a normalized softmax") {
  Graph g;
  const Graph::Id z = g.constant(Mat::Zero(7, 1));
  CHECK(g.value(g.softmax_cross_entropy(z, 3))(0, 0) == doctest::Approx(std::log(7.0)));
  const Graph::Id s = g.softmax_rows(g.constant(Mat::Random(3, 5)));
  for (Eigen::Index r = 0; r < 3; ++r) CHECK(std::abs(g.value(s).row(r).sum() - 1.0) < 1e-12);
}

TEST_CASE("layer norm and binary cross-entropy gradients") {
  Rng rng(4);
  Parameter gamma{"g", Mat::Random(1, 4), {}};
  Parameter beta{"b", Mat::Random(1, 4), {}};
  Parameter w{"w", Mat::Random(4, 1), {}};
  Mat x = Mat::Random(3, 4);
  Eigen::VectorXd y(3);
  y << 1, 0, 1;
  auto loss = [&]() {
    Graph g;
    const auto ln = g.layer_norm_rows(g.constant(x), g.param(gamma), g.param(beta));
    const auto out = g.bce_with_logits(g.matmul(g.gelu(ln), g.param(w)), y);
    return std::make_pair(std::move(g), out);
  };
  for (Parameter* p : {&gamma, &beta, &w}) p->zero_grad();
  {
    auto [g, out] = loss();
    g.backward(out);
  }
  for (Parameter* p : {&gamma, &beta, &w}) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double saved = p->value(i);
      p->value(i) = saved + 1e-6;
      auto up = loss();
      p->value(i) = saved - 1e-6;
      auto down = loss();
      p->value(i) = saved;
      const double numeric = (up.first.value(up.second)(0, 0) - down.first.value(down.second)(0, 0)) / 2e-6;
      CHECK(p->grad(i) == doctest::Approx(numeric).epsilon(1e-6));
    }
  }
}
