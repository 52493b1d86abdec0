#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layerwise/rng.hpp"
#include "layerwise/tensor.hpp"

namespace lw {

enum class Activation { kReLU, kSigmoid, kTanh, kSoftmax, kIdentity };
enum class LayerKind { kDense, kConv2D, kMaxPool2D, kFlatten };

/// kAuto picks He scaling for ReLU layers and Xavier scaling otherwise.
enum class InitScheme { kAuto, kHe, kXavier };

std::string_view to_string(Activation activation);
std::string_view to_string(LayerKind kind);
std::string_view to_string(InitScheme scheme);
Activation parse_activation(std::string_view name);
LayerKind parse_layer_kind(std::string_view name);
InitScheme parse_init_scheme(std::string_view name);

/// One layer of a sequential network.
///
/// Dense weights are [out, in] with bias [out]; Conv2D weights are
/// [filters, channels, kh, kw] with bias [filters]. Pooling and flatten
/// layers carry no parameters and always use the identity activation.
struct Layer {
  LayerKind kind = LayerKind::kDense;
  Activation activation = Activation::kIdentity;
  Tensor weights;
  Tensor bias;
  std::size_t pool = 2;

  static Layer dense(std::size_t in, std::size_t out, Activation activation);
  static Layer conv2d(std::size_t in_channels, std::size_t filters, std::size_t kh, std::size_t kw,
                      Activation activation);
  static Layer maxpool2d(std::size_t pool = 2);
  static Layer flatten();

  bool has_parameters() const noexcept { return kind == LayerKind::kDense || kind == LayerKind::kConv2D; }
  std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }
};

/// Ordered stack of layers over a fixed per-sample input shape.
///
/// The constructor validates that every layer's input matches the previous
/// layer's output and that softmax only appears on the last layer. Any
/// mutable access to a layer bumps version(), which lets trainers detect a
/// forward cache recorded against older parameters.
class Network {
 public:
  Network(Shape input_shape, std::vector<Layer> layers);

  const Shape& input_shape() const noexcept { return input_shape_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Layer& layer(std::size_t index) const { return layers_.at(index); }
  Layer& mutable_layer(std::size_t index);
  std::size_t depth() const noexcept { return layers_.size(); }

  /// Per-sample output shape of layer `index`.
  const Shape& output_shape(std::size_t index) const { return output_shapes_.at(index); }
  const Shape& output_shape() const { return output_shapes_.back(); }
  /// Per-sample input shape of layer `index`.
  const Shape& layer_input_shape(std::size_t index) const;

  std::size_t parameter_count() const;
  std::vector<std::size_t> parameterized_layers() const;
  std::uint64_t version() const noexcept { return version_; }

  void initialize(Rng& rng, InitScheme scheme = InitScheme::kAuto);

  /// True when shapes, activations and every parameter are bitwise equal.
  bool same_parameters(const Network& other) const;

 private:
  Shape input_shape_;
  std::vector<Layer> layers_;
  std::vector<Shape> output_shapes_;
  std::uint64_t version_ = 0;
};

/// Pre-activations z_l and activations h_l of every layer for one batch.
struct ForwardCache {
  Tensor input;
  std::vector<Tensor> pre;
  std::vector<Tensor> post;
  /// Filled for pooling layers only.
  std::vector<ArgmaxIndices> pool;
  std::uint64_t version = 0;

  std::size_t depth() const noexcept { return post.size(); }
  const Tensor& output() const { return post.back(); }
  /// h_{l-1}: the tensor layer l consumed.
  const Tensor& layer_input(std::size_t index) const { return index == 0 ? input : post.at(index - 1); }
  std::size_t batch_size() const { return input.dim(0); }
};

/// Runs a batch [N, input_shape...] through the network, recording every layer.
ForwardCache forward_pass(const Network& net, const Tensor& batch);

/// Network output for a batch without keeping intermediate tensors.
Tensor predict(const Network& net, const Tensor& batch);

/// Elementwise activation; softmax normalizes each row of a [N, K] tensor
/// (or the whole vector for rank 1) after subtracting the row maximum.
Tensor activation(Activation f, const Tensor& z);

/// f'(z) from the cached pair (z, h = f(z)). Softmax has no elementwise
/// derivative here; it is fused into the cross-entropy output error.
Tensor activation_derivative(Activation f, const Tensor& z, const Tensor& h);

/// Conv(32,3x3,ReLU) -> Conv(64,3x3,ReLU) -> MaxPool(2) -> Flatten ->
/// Dense(512,ReLU) -> Dense(num_classes,Softmax) for a [1,28,28] or
/// [3,32,32] input.
Network build_cnn(const Shape& input_shape, std::size_t num_classes, std::uint64_t seed,
                  InitScheme scheme = InitScheme::kAuto);

/// Chain of dense layers over dims[0] inputs with a softmax output layer.
Network build_mlp(std::span<const std::size_t> dims, Activation hidden, std::uint64_t seed,
                  InitScheme scheme = InitScheme::kAuto);

}  // namespace lw
