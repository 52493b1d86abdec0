#include <doctest.h>

#include <cmath>
#include <vector>

#include "layerwise/errors.hpp"
#include "layerwise/optim.hpp"
#include "support.hpp"

using lw::Tensor;

TEST_CASE("sgd subtracts lr times the gradient") {
  Tensor p = Tensor::vector({1.0, -2.0, 0.5});
  const Tensor g = Tensor::vector({0.5, 1.0, -4.0});
  const double sq = lw::sgd_update(p, g, 0.1);
  CHECK(p[0] == 1.0 - 0.1 * 0.5);
  CHECK(p[1] == -2.0 - 0.1 * 1.0);
  CHECK(p[2] == 0.5 - 0.1 * -4.0);
  CHECK(sq == doctest::Approx(0.05 * 0.05 + 0.1 * 0.1 + 0.4 * 0.4));
  CHECK_THROWS_AS(lw::sgd_update(p, Tensor({2}), 0.1), lw::DimensionError);
}

TEST_CASE("adam matches a scalar reference over several steps") {
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Tensor p = Tensor::vector({0.3, -0.7});
  lw::AdamMoments mom{Tensor({2}), Tensor({2}), 0};
  double ref[2] = {0.3, -0.7}, m[2] = {0, 0}, v[2] = {0, 0};
  const double grads[4][2] = {{0.2, -1.0}, {0.1, 0.5}, {-0.3, 0.25}, {0.05, -0.05}};
  for (int step = 0; step < 4; ++step) {
    const Tensor g = Tensor::vector({grads[step][0], grads[step][1]});
    lw::adam_update(mom, lw::AdamHyper{}, p, g, lr);
    const int t = step + 1;
    for (int i = 0; i < 2; ++i) {
      m[i] = b1 * m[i] + (1 - b1) * grads[step][i];
      v[i] = b2 * v[i] + (1 - b2) * grads[step][i] * grads[step][i];
      const double mh = m[i] / (1 - std::pow(b1, t));
      const double vh = v[i] / (1 - std::pow(b2, t));
      ref[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
    CHECK(p[0] == doctest::Approx(ref[0]).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(ref[1]).epsilon(1e-14));
  }
  CHECK(mom.t == 4);
}

TEST_CASE("first adam step moves each weight by about lr") {
  Tensor p({3}, 1.0);
  lw::AdamMoments mom{Tensor({3}), Tensor({3}), 0};
  lw::adam_update(mom, lw::AdamHyper{}, p, Tensor::vector({3.0, -0.01, 100.0}), 1e-3);
  CHECK(p[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-9));
  CHECK(p[1] == doctest::Approx(1.0 + 1e-3).epsilon(1e-9));
  CHECK(p[2] == doctest::Approx(1.0 - 1e-3).epsilon(1e-9));
}

TEST_CASE("network-level updates honour per-layer multipliers and per-tensor time steps") {
  const std::vector<std::size_t> dims{4, 3, 2};
  lw::Network net = lw::build_mlp(dims, lw::Activation::kTanh, 1);
  const lw::Network start = net;
  lw::Gradients g = lw::Gradients::zeros_like(net);
  for (std::size_t l = 0; l < 2; ++l) {
    g.weights[l] = lwtest::random_tensor(net.layer(l).weights.shape(), l + 1);
    g.biases[l] = lwtest::random_tensor(net.layer(l).bias.shape(), l + 10);
  }

  lw::Optimizer sgd = lw::Optimizer::sgd();
  sgd.apply(net, g, lw::StepSize(0.5, {0.0, 1.0}));
  CHECK(net.layer(0).weights == start.layer(0).weights);
  CHECK(net.layer(1).weights == lw::subtract(start.layer(1).weights, lw::scale(g.weights[1], 0.5)));

  lw::Optimizer adam = lw::Optimizer::adam(net);
  adam.apply(net, g, 1e-3);
  adam.apply_layer(net, 1, g.weights[1], g.biases[1], 1e-3);
  CHECK(adam.adam_state().slots[0].t == 1);
  CHECK(adam.adam_state().slots[1].t == 1);
  CHECK(adam.adam_state().slots[2].t == 2);
  CHECK(adam.adam_state().slots[3].t == 2);

  const double norm = lw::Optimizer::sgd().apply_layer(net, 0, g.weights[0], g.biases[0], 0.1);
  CHECK(norm == doctest::Approx(0.1 * std::sqrt(lw::dot(g.weights[0], g.weights[0]) + lw::dot(g.biases[0], g.biases[0]))));
  CHECK(lw::parse_optimizer("adam") == lw::OptimizerKind::kAdam);
  CHECK_THROWS_AS(lw::parse_optimizer("rmsprop"), lw::ConfigError);
}
