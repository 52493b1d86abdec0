#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "layerwise/nn.hpp"
#include "layerwise/tensor.hpp"

namespace lw {

/// Per-layer parameter gradients; entries for parameter-free layers are empty.
struct Gradients {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  std::size_t depth() const noexcept { return weights.size(); }
  static Gradients zeros_like(const Network& net);
};

/// Base learning rate with an optional per-layer multiplier.
struct StepSize {
  double base = 1e-3;
  std::vector<double> layer_scale;

  StepSize(double rate) : base(rate) {}  // NOLINT(google-explicit-constructor)
  StepSize(double rate, std::vector<double> scale) : base(rate), layer_scale(std::move(scale)) {}

  double for_layer(std::size_t layer) const { return layer_scale.empty() ? base : base * layer_scale.at(layer); }
};

enum class OptimizerKind { kSgd, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments for one parameter tensor.
struct AdamMoments {
  Tensor m;
  Tensor v;
  std::uint64_t t = 0;
};

/// One AdamMoments per parameter tensor, indexed [2 * layer] for weights
/// and [2 * layer + 1] for biases.
struct AdamState {
  AdamHyper hyper;
  std::vector<AdamMoments> slots;

  static AdamState for_network(const Network& net, AdamHyper hyper = {});
};

/// p <- p - lr * g. Returns the squared L2 norm of the applied step.
double sgd_update(Tensor& param, const Tensor& grad, double lr);

/// Bias-corrected Adam step on one tensor; increments moments.t once.
/// Returns the squared L2 norm of the applied step.
double adam_update(AdamMoments& moments, const AdamHyper& hyper, Tensor& param, const Tensor& grad, double lr);

void sgd_update(Network& net, const Gradients& grads, const StepSize& lr);
void adam_update(AdamState& state, Network& net, const Gradients& grads, const StepSize& lr);

/// Either optimizer behind one interface, updating a whole network or one layer.
class Optimizer {
 public:
  static Optimizer sgd();
  static Optimizer adam(const Network& net, AdamHyper hyper = {});

  OptimizerKind kind() const noexcept { return kind_; }
  const AdamState& adam_state() const noexcept { return adam_; }

  /// Updates layer `index` in place and returns the L2 norm of the step.
  double apply_layer(Network& net, std::size_t index, const Tensor& grad_weights, const Tensor& grad_bias, double lr);
  void apply(Network& net, const Gradients& grads, const StepSize& lr);

 private:
  OptimizerKind kind_ = OptimizerKind::kSgd;
  AdamState adam_;
};

}  // namespace lw
