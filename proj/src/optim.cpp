#include "layerwise/optim.hpp"

#include <cmath>

#include "layerwise/errors.hpp"

namespace lw {

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const Layer& layer : net.layers()) {
    g.weights.push_back(layer.has_parameters() ? Tensor(layer.weights.shape()) : Tensor());
    g.biases.push_back(layer.has_parameters() ? Tensor(layer.bias.shape()) : Tensor());
  }
  return g;
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

AdamState AdamState::for_network(const Network& net, AdamHyper hyper) {
  AdamState state;
  state.hyper = hyper;
  for (const Layer& layer : net.layers()) {
    state.slots.push_back({Tensor(layer.weights.shape()), Tensor(layer.weights.shape()), 0});
    state.slots.push_back({Tensor(layer.bias.shape()), Tensor(layer.bias.shape()), 0});
  }
  return state;
}

namespace {

void require_match(const Tensor& param, const Tensor& grad, const char* what) {
  if (param.shape() != grad.shape()) {
    throw DimensionError(std::string(what) + ": parameter " + to_string(param.shape()) + " and gradient " +
                         to_string(grad.shape()) + " differ");
  }
}

void require_layers(const Network& net, const Gradients& grads) {
  if (grads.weights.size() != net.depth() || grads.biases.size() != net.depth()) {
    throw DimensionError("gradients cover " + std::to_string(grads.weights.size()) + " layers, network has " +
                         std::to_string(net.depth()));
  }
}

}  // namespace

double sgd_update(Tensor& param, const Tensor& grad, double lr) {
  require_match(param, grad, "sgd_update");
  double step_sq = 0.0;
  double* p = param.raw();
  const double* g = grad.raw();
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double step = lr * g[i];
    p[i] -= step;
    step_sq += step * step;
  }
  return step_sq;
}

double adam_update(AdamMoments& moments, const AdamHyper& hyper, Tensor& param, const Tensor& grad, double lr) {
  require_match(param, grad, "adam_update");
  require_match(moments.m, grad, "adam_update (first moment)");
  require_match(moments.v, grad, "adam_update (second moment)");
  ++moments.t;
  const double t = static_cast<double>(moments.t);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  double* p = param.raw();
  double* m = moments.m.raw();
  double* v = moments.v.raw();
  const double* g = grad.raw();
  double step_sq = 0.0;
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    const double step = lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    p[i] -= step;
    step_sq += step * step;
  }
  return step_sq;
}

void sgd_update(Network& net, const Gradients& grads, const StepSize& lr) {
  require_layers(net, grads);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (!net.layer(l).has_parameters()) continue;
    Layer& layer = net.mutable_layer(l);
    sgd_update(layer.weights, grads.weights[l], lr.for_layer(l));
    sgd_update(layer.bias, grads.biases[l], lr.for_layer(l));
  }
}

void adam_update(AdamState& state, Network& net, const Gradients& grads, const StepSize& lr) {
  require_layers(net, grads);
  if (state.slots.size() != 2 * net.depth()) throw DimensionError("Adam state does not match the network depth");
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (!net.layer(l).has_parameters()) continue;
    Layer& layer = net.mutable_layer(l);
    adam_update(state.slots[2 * l], state.hyper, layer.weights, grads.weights[l], lr.for_layer(l));
    adam_update(state.slots[2 * l + 1], state.hyper, layer.bias, grads.biases[l], lr.for_layer(l));
  }
}

Optimizer Optimizer::sgd() {
  return Optimizer{};
}

Optimizer Optimizer::adam(const Network& net, AdamHyper hyper) {
  Optimizer opt;
  opt.kind_ = OptimizerKind::kAdam;
  opt.adam_ = AdamState::for_network(net, hyper);
  return opt;
}

double Optimizer::apply_layer(Network& net, std::size_t index, const Tensor& grad_weights, const Tensor& grad_bias,
                              double lr) {
  if (!net.layer(index).has_parameters()) return 0.0;
  Layer& layer = net.mutable_layer(index);
  double step_sq = 0.0;
  if (kind_ == OptimizerKind::kSgd) {
    step_sq += sgd_update(layer.weights, grad_weights, lr);
    step_sq += sgd_update(layer.bias, grad_bias, lr);
  } else {
    if (adam_.slots.size() != 2 * net.depth()) throw DimensionError("Adam state does not match the network depth");
    step_sq += adam_update(adam_.slots[2 * index], adam_.hyper, layer.weights, grad_weights, lr);
    step_sq += adam_update(adam_.slots[2 * index + 1], adam_.hyper, layer.bias, grad_bias, lr);
  }
  return std::sqrt(step_sq);
}

void Optimizer::apply(Network& net, const Gradients& grads, const StepSize& lr) {
  require_layers(net, grads);
  for (std::size_t l = 0; l < net.depth(); ++l) apply_layer(net, l, grads.weights[l], grads.biases[l], lr.for_layer(l));
}

}  // namespace lw
