#include <doctest.h>

#include <cmath>
#include <vector>

#include "layerwise/checkpoint.hpp"
#include "layerwise/errors.hpp"
#include "layerwise/io.hpp"
#include "layerwise/nn.hpp"
#include "support.hpp"

using lw::Activation;
using lw::Layer;
using lw::Network;
using lw::Shape;
using lw::Tensor;

namespace {

std::vector<std::size_t> dims(std::initializer_list<std::size_t> d) { return d; }

Network tiny_cnn(std::uint64_t seed) {
  Network net({1, 6, 6}, {Layer::conv2d(1, 2, 3, 3, Activation::kReLU), Layer::maxpool2d(2), Layer::flatten(),
                          Layer::dense(8, 3, Activation::kSoftmax)});
  lw::Rng rng(seed, lw::Stream::kInit);
  net.initialize(rng);
  return net;
}

}  // namespace

TEST_CASE("network validates the shape chain") {
  CHECK_NOTHROW(Network({4}, {Layer::dense(4, 3, Activation::kReLU), Layer::dense(3, 2, Activation::kSoftmax)}));
  CHECK_THROWS_AS(Network({4}, {Layer::dense(5, 3, Activation::kReLU)}), lw::DimensionError);
  CHECK_THROWS_AS(Network({4}, {Layer::dense(4, 3, Activation::kSoftmax), Layer::dense(3, 2, Activation::kIdentity)}),
                  lw::ConfigError);
  CHECK_THROWS_AS(Network({1, 5, 5}, {Layer::conv2d(1, 2, 3, 3, Activation::kReLU), Layer::maxpool2d(2)}),
                  lw::DimensionError);

  const Network cnn = tiny_cnn(1);
  CHECK(cnn.output_shape(0) == Shape{2, 4, 4});
  CHECK(cnn.output_shape(1) == Shape{2, 2, 2});
  CHECK(cnn.output_shape(2) == Shape{8});
  CHECK(cnn.output_shape() == Shape{3});
  CHECK(cnn.parameterized_layers() == std::vector<std::size_t>{0, 3});
  CHECK(cnn.parameter_count() == 2 * 9 + 2 + 8 * 3 + 3);
}

TEST_CASE("CNN has the documented layer stack") {
  const Network mnist = lw::build_cnn({1, 28, 28}, 10, 0);
  REQUIRE(mnist.depth() == 6);
  CHECK(mnist.output_shape(0) == Shape{32, 26, 26});
  CHECK(mnist.output_shape(1) == Shape{64, 24, 24});
  CHECK(mnist.output_shape(2) == Shape{64, 12, 12});
  CHECK(mnist.output_shape(3) == Shape{9216});
  CHECK(mnist.output_shape(4) == Shape{512});
  CHECK(mnist.output_shape(5) == Shape{10});
  CHECK(mnist.layer(5).activation == Activation::kSoftmax);

  const Network cifar = lw::build_cnn({3, 32, 32}, 10, 0);
  CHECK(cifar.output_shape(3) == Shape{64 * 14 * 14});
  CHECK_THROWS_AS(lw::build_cnn({1, 30, 30}, 10, 0), lw::ConfigError);
}

TEST_CASE("initialization follows He and Xavier bounds, biases start at zero") {
  const auto d = dims({50, 40, 10});
  const Network relu = lw::build_mlp(d, Activation::kReLU, 3);
  const double he = std::sqrt(6.0 / 50.0);
  double largest = 0;
  for (double w : relu.layer(0).weights.data()) {
    CHECK(std::abs(w) <= he);
    largest = std::max(largest, std::abs(w));
  }
  CHECK(largest > 0.9 * he);
  const double xavier_out = std::sqrt(6.0 / (40.0 + 10.0));
  for (double w : relu.layer(1).weights.data()) CHECK(std::abs(w) <= xavier_out);
  for (double b : relu.layer(0).bias.data()) CHECK(b == 0.0);

  const Network tanh = lw::build_mlp(d, Activation::kTanh, 3);
  const double xavier_hidden = std::sqrt(6.0 / 90.0);
  for (double w : tanh.layer(0).weights.data()) CHECK(std::abs(w) <= xavier_hidden);

  CHECK(lw::build_mlp(d, Activation::kReLU, 3).same_parameters(relu));
  CHECK_FALSE(lw::build_mlp(d, Activation::kReLU, 4).same_parameters(relu));
  CHECK_THROWS_AS(lw::build_mlp(dims({5}), Activation::kReLU, 0), lw::ConfigError);
  CHECK_THROWS_AS(lw::build_mlp(dims({5, 3}), Activation::kSoftmax, 0), lw::ConfigError);
}

TEST_CASE("softmax rows sum to one and survive large logits") {
  const Tensor z = Tensor::matrix({{1000, 1001, 999}, {-5, 0, 5}});
  const Tensor h = lw::activation(Activation::kSoftmax, z);
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(std::isfinite(h.at(r, c)));
      s += h.at(r, c);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  }
  const double e = std::exp(1.0);
  CHECK(h.at(0, 1) == doctest::Approx(e / (1 + e + 1 / e)));
}

TEST_CASE("activation derivatives agree with central differences") {
  const Tensor z({6}, std::vector<double>{-2.0, -0.7, -0.1, 0.2, 0.9, 3.0});
  for (Activation f : {Activation::kSigmoid, Activation::kTanh, Activation::kReLU, Activation::kIdentity}) {
    const Tensor h = lw::activation(f, z);
    const Tensor d = lw::activation_derivative(f, z, h);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double eps = 1e-6;
      Tensor zp = z, zm = z;
      zp[i] += eps;
      zm[i] -= eps;
      const double fd = (lw::activation(f, zp)[i] - lw::activation(f, zm)[i]) / (2 * eps);
      CHECK(d[i] == doctest::Approx(fd).epsilon(1e-8));
    }
  }
  CHECK(lw::activation_derivative(Activation::kReLU, Tensor::vector({0.0}), Tensor::vector({0.0}))[0] == 0.0);
  CHECK_THROWS_AS(lw::activation_derivative(Activation::kSoftmax, z, z), lw::ContractViolation);
}

TEST_CASE("forward pass caches every layer and matches predict") {
  const Network net = tiny_cnn(2);
  const Tensor x = lwtest::random_tensor({3, 1, 6, 6}, 9, 0, 1);
  const lw::ForwardCache cache = lw::forward_pass(net, x);
  CHECK(cache.depth() == 4);
  CHECK(cache.post[0].shape() == Shape{3, 2, 4, 4});
  CHECK(cache.pool[1].window_offset.size() == 3 * 2 * 2 * 2);
  CHECK(cache.output() == lw::predict(net, x));
  CHECK(cache.version == net.version());
  CHECK_THROWS_AS(lw::forward_pass(net, Tensor({1, 6, 6})), lw::DimensionError);

  // Dense layer: h = f(x W^T + b) row by row.
  const auto d = dims({3, 2});
  Network lin = lw::build_mlp(d, Activation::kReLU, 0);
  lin.mutable_layer(0).weights = Tensor::matrix({{1, 2, 3}, {0, -1, 1}});
  lin.mutable_layer(0).bias = Tensor::vector({0.5, -0.5});
  const Tensor in = Tensor::matrix({{1, 1, 1}});
  const lw::ForwardCache c = lw::forward_pass(lin, in);
  CHECK(c.pre[0] == Tensor::matrix({{6.5, -0.5}}));
}

TEST_CASE("mutable access bumps the version") {
  Network net = tiny_cnn(0);
  const auto before = net.version();
  net.mutable_layer(0);
  CHECK(net.version() > before);
}

TEST_CASE("checkpoint round-trips bitwise and detects corruption") {
  const Network net = tiny_cnn(5);
  const std::string bytes = lw::encode_checkpoint(net);
  CHECK(bytes.substr(0, 8) == std::string("LWCKPT\0\0", 8));
  const Network back = lw::decode_checkpoint(bytes);
  CHECK(back.same_parameters(net));
  CHECK(lw::encode_checkpoint(back) == bytes);

  std::string flipped = bytes;
  flipped[bytes.size() - 20] ^= 0x01;
  CHECK_THROWS_AS(lw::decode_checkpoint(flipped), lw::FormatError);
  CHECK_THROWS_AS(lw::decode_checkpoint(bytes.substr(0, bytes.size() - 3)), lw::FormatError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(lw::decode_checkpoint(bad_magic), lw::FormatError);

  const auto dir = lwtest::scratch_dir("ckpt");
  lw::save_checkpoint(net, dir / "sub" / "net.ckpt");
  CHECK(lw::load_checkpoint(dir / "sub" / "net.ckpt").same_parameters(net));
  CHECK_FALSE(std::filesystem::exists(dir / "sub" / "net.ckpt.tmp"));
}
