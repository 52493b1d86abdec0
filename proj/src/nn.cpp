#include "layerwise/nn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "layerwise/errors.hpp"

namespace lw {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kReLU: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kSoftmax: return "softmax";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kConv2D: return "conv2d";
    case LayerKind::kMaxPool2D: return "maxpool2d";
    case LayerKind::kFlatten: return "flatten";
  }
  return "?";
}

std::string_view to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::kAuto: return "auto";
    case InitScheme::kHe: return "he";
    case InitScheme::kXavier: return "xavier";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  for (Activation a : {Activation::kReLU, Activation::kSigmoid, Activation::kTanh, Activation::kSoftmax,
                       Activation::kIdentity}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

LayerKind parse_layer_kind(std::string_view name) {
  for (LayerKind k : {LayerKind::kDense, LayerKind::kConv2D, LayerKind::kMaxPool2D, LayerKind::kFlatten}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

InitScheme parse_init_scheme(std::string_view name) {
  for (InitScheme s : {InitScheme::kAuto, InitScheme::kHe, InitScheme::kXavier}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown init scheme '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Layer

Layer Layer::dense(std::size_t in, std::size_t out, Activation activation) {
  if (in == 0 || out == 0) throw ConfigError("dense layer needs positive in/out sizes");
  return Layer{LayerKind::kDense, activation, Tensor({out, in}), Tensor({out}), 0};
}

Layer Layer::conv2d(std::size_t in_channels, std::size_t filters, std::size_t kh, std::size_t kw,
                    Activation activation) {
  if (in_channels == 0 || filters == 0 || kh == 0 || kw == 0) throw ConfigError("conv2d layer needs positive sizes");
  return Layer{LayerKind::kConv2D, activation, Tensor({filters, in_channels, kh, kw}), Tensor({filters}), 0};
}

Layer Layer::maxpool2d(std::size_t pool) {
  if (pool == 0) throw ConfigError("maxpool2d needs a positive pool size");
  return Layer{LayerKind::kMaxPool2D, Activation::kIdentity, Tensor(), Tensor(), pool};
}

Layer Layer::flatten() {
  return Layer{LayerKind::kFlatten, Activation::kIdentity, Tensor(), Tensor(), 0};
}

// ---------------------------------------------------------------------------
// Network

namespace {

std::string layer_label(std::size_t index, const Layer& layer) {
  return "layer " + std::to_string(index) + " (" + std::string(to_string(layer.kind)) + ")";
}

Shape chain_layer(std::size_t index, const Layer& layer, const Shape& in) {
  switch (layer.kind) {
    case LayerKind::kDense: {
      if (layer.weights.rank() != 2 || layer.bias.shape() != Shape{layer.weights.dim(0)}) {
        throw DimensionError(layer_label(index, layer) + ": weights " + to_string(layer.weights.shape()) +
                             " and bias " + to_string(layer.bias.shape()) + " are inconsistent");
      }
      if (in.size() != 1 || in[0] != layer.weights.dim(1)) {
        throw DimensionError(layer_label(index, layer) + " expects input [" + std::to_string(layer.weights.dim(1)) +
                             "] but receives " + to_string(in));
      }
      return {layer.weights.dim(0)};
    }
    case LayerKind::kConv2D: {
      if (layer.weights.rank() != 4 || layer.bias.shape() != Shape{layer.weights.dim(0)}) {
        throw DimensionError(layer_label(index, layer) + ": kernels " + to_string(layer.weights.shape()) +
                             " and bias " + to_string(layer.bias.shape()) + " are inconsistent");
      }
      const auto& k = layer.weights.shape();
      if (in.size() != 3 || in[0] != k[1] || k[2] > in[1] || k[3] > in[2]) {
        throw DimensionError(layer_label(index, layer) + " with kernels " + to_string(k) +
                             " cannot consume input " + to_string(in));
      }
      return {k[0], in[1] - k[2] + 1, in[2] - k[3] + 1};
    }
    case LayerKind::kMaxPool2D: {
      if (in.size() != 3 || layer.pool == 0 || in[1] % layer.pool != 0 || in[2] % layer.pool != 0) {
        throw DimensionError(layer_label(index, layer) + " with pool " + std::to_string(layer.pool) +
                             " cannot consume input " + to_string(in));
      }
      return {in[0], in[1] / layer.pool, in[2] / layer.pool};
    }
    case LayerKind::kFlatten:
      return {element_count(in)};
  }
  throw ContractViolation("unreachable layer kind");
}

}  // namespace

Network::Network(Shape input_shape, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("a network needs at least one layer");
  if (input_shape_.empty() || element_count(input_shape_) == 0) {
    throw ConfigError("network input shape " + to_string(input_shape_) + " is empty");
  }
  Shape current = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    if (!layer.has_parameters() && layer.activation != Activation::kIdentity) {
      throw ConfigError(layer_label(i, layer) + " must use the identity activation");
    }
    if (layer.activation == Activation::kSoftmax && i + 1 != layers_.size()) {
      throw ConfigError(layer_label(i, layer) + ": softmax is only allowed on the final layer");
    }
    current = chain_layer(i, layer, current);
    if (layer.activation == Activation::kSoftmax && current.size() != 1) {
      throw ConfigError(layer_label(i, layer) + ": softmax needs a vector output, got " + to_string(current));
    }
    output_shapes_.push_back(current);
  }
}

Layer& Network::mutable_layer(std::size_t index) {
  ++version_;
  return layers_.at(index);
}

const Shape& Network::layer_input_shape(std::size_t index) const {
  return index == 0 ? input_shape_ : output_shapes_.at(index - 1);
}

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer.parameter_count();
  return total;
}

std::vector<std::size_t> Network::parameterized_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].has_parameters()) out.push_back(i);
  }
  return out;
}

void Network::initialize(Rng& rng, InitScheme scheme) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& layer = mutable_layer(i);
    if (!layer.has_parameters()) continue;
    std::size_t fan_in = 0, fan_out = 0;
    if (layer.kind == LayerKind::kDense) {
      fan_in = layer.weights.dim(1);
      fan_out = layer.weights.dim(0);
    } else {
      const std::size_t receptive = layer.weights.dim(2) * layer.weights.dim(3);
      fan_in = layer.weights.dim(1) * receptive;
      fan_out = layer.weights.dim(0) * receptive;
    }
    bool he = scheme == InitScheme::kHe;
    if (scheme == InitScheme::kAuto) he = layer.activation == Activation::kReLU;
    const double bound = he ? std::sqrt(6.0 / static_cast<double>(fan_in))
                            : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : layer.weights.data()) w = rng.uniform(-bound, bound);
    std::fill(layer.bias.data().begin(), layer.bias.data().end(), 0.0);
  }
}

bool Network::same_parameters(const Network& other) const {
  if (input_shape_ != other.input_shape_ || layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& a = layers_[i];
    const Layer& b = other.layers_[i];
    if (a.kind != b.kind || a.activation != b.activation || a.pool != b.pool) return false;
    if (!(a.weights == b.weights) || !(a.bias == b.bias)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Activations

Tensor activation(Activation f, const Tensor& z) {
  Tensor h = z;
  switch (f) {
    case Activation::kIdentity:
      break;
    case Activation::kReLU:
      for (double& v : h.data()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kSigmoid:
      for (double& v : h.data()) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::kTanh:
      for (double& v : h.data()) v = std::tanh(v);
      break;
    case Activation::kSoftmax: {
      if (z.rank() != 1 && z.rank() != 2) {
        throw DimensionError("softmax expects a vector or a batch of vectors, got " + to_string(z.shape()));
      }
      const std::size_t width = z.rank() == 1 ? z.size() : z.dim(1);
      const std::size_t rows = width ? z.size() / width : 0;
      for (std::size_t r = 0; r < rows; ++r) {
        double* row = h.raw() + r * width;
        const double peak = *std::max_element(row, row + width);
        double total = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          row[j] = std::exp(row[j] - peak);
          total += row[j];
        }
        for (std::size_t j = 0; j < width; ++j) row[j] /= total;
      }
      break;
    }
  }
  return h;
}

Tensor activation_derivative(Activation f, const Tensor& z, const Tensor& h) {
  if (z.shape() != h.shape()) {
    throw DimensionError("activation_derivative: z " + to_string(z.shape()) + " and h " + to_string(h.shape()) +
                         " differ");
  }
  Tensor d(z.shape());
  switch (f) {
    case Activation::kIdentity:
      std::fill(d.data().begin(), d.data().end(), 1.0);
      break;
    case Activation::kReLU:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = z[i] > 0.0 ? 1.0 : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = h[i] * (1.0 - h[i]);
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = 1.0 - h[i] * h[i];
      break;
    case Activation::kSoftmax:
      throw ContractViolation("softmax has no elementwise derivative; use the cross-entropy output error");
  }
  return d;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

void require_batch_shape(const Network& net, const Tensor& batch) {
  const Shape& in = net.input_shape();
  const Shape& got = batch.shape();
  if (got.size() != in.size() + 1 || !std::equal(in.begin(), in.end(), got.begin() + 1)) {
    throw DimensionError("network expects batches [N" + std::string(in.empty() ? "" : ",") +
                         to_string(in).substr(1) + " but received " + to_string(got));
  }
}

// Computes z for one layer; pooling also reports its argmax routing.
Tensor pre_activation(const Layer& layer, const Tensor& input, ArgmaxIndices* argmax) {
  switch (layer.kind) {
    case LayerKind::kDense: {
      Tensor z = matmul_transposed_b(input, layer.weights);
      const std::size_t rows = z.dim(0), cols = z.dim(1);
      for (std::size_t r = 0; r < rows; ++r) {
        double* row = z.raw() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) row[c] += layer.bias[c];
      }
      return z;
    }
    case LayerKind::kConv2D:
      return conv2d_forward(input, layer.weights, layer.bias);
    case LayerKind::kMaxPool2D: {
      PoolResult pooled = maxpool2d(input, layer.pool);
      if (argmax) *argmax = std::move(pooled.argmax);
      return std::move(pooled.output);
    }
    case LayerKind::kFlatten:
      return flatten_batch(input);
  }
  throw ContractViolation("unreachable layer kind");
}

}  // namespace

ForwardCache forward_pass(const Network& net, const Tensor& batch) {
  require_batch_shape(net, batch);
  ForwardCache cache;
  cache.input = batch;
  cache.version = net.version();
  cache.pre.reserve(net.depth());
  cache.post.reserve(net.depth());
  cache.pool.resize(net.depth());
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const Layer& layer = net.layer(l);
    Tensor z = pre_activation(layer, cache.layer_input(l), &cache.pool[l]);
    Tensor h = activation(layer.activation, z);
    cache.pre.push_back(std::move(z));
    cache.post.push_back(std::move(h));
  }
  return cache;
}

Tensor predict(const Network& net, const Tensor& batch) {
  require_batch_shape(net, batch);
  Tensor h = batch;
  for (const Layer& layer : net.layers()) h = activation(layer.activation, pre_activation(layer, h, nullptr));
  return h;
}

// ---------------------------------------------------------------------------
// Builders

Network build_cnn(const Shape& input_shape, std::size_t num_classes, std::uint64_t seed, InitScheme scheme) {
  if (input_shape != Shape{1, 28, 28} && input_shape != Shape{3, 32, 32}) {
    throw ConfigError("the CNN supports [1x28x28] or [3x32x32] inputs, got " + to_string(input_shape));
  }
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
  const std::size_t channels = input_shape[0];
  const std::size_t pooled = (input_shape[1] - 4) / 2;
  std::vector<Layer> layers;
  layers.push_back(Layer::conv2d(channels, 32, 3, 3, Activation::kReLU));
  layers.push_back(Layer::conv2d(32, 64, 3, 3, Activation::kReLU));
  layers.push_back(Layer::maxpool2d(2));
  layers.push_back(Layer::flatten());
  layers.push_back(Layer::dense(64 * pooled * pooled, 512, Activation::kReLU));
  layers.push_back(Layer::dense(512, num_classes, Activation::kSoftmax));
  Network net(input_shape, std::move(layers));
  Rng rng(seed, Stream::kInit);
  net.initialize(rng, scheme);
  return net;
}

Network build_mlp(std::span<const std::size_t> dims, Activation hidden, std::uint64_t seed, InitScheme scheme) {
  if (dims.size() < 2) throw ConfigError("an MLP needs at least an input and an output size");
  if (std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end()) {
    throw ConfigError("MLP layer sizes must be positive");
  }
  if (hidden == Activation::kSoftmax) throw ConfigError("softmax cannot be a hidden activation");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    layers.push_back(Layer::dense(dims[i], dims[i + 1], last ? Activation::kSoftmax : hidden));
  }
  Network net({dims[0]}, std::move(layers));
  Rng rng(seed, Stream::kInit);
  net.initialize(rng, scheme);
  return net;
}

}  // namespace lw
