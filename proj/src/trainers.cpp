#include "layerwise/trainers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "layerwise/errors.hpp"
#include "layerwise/metrics.hpp"

namespace lw {

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::kBackprop: return "bp";
    case Rule::kDfa: return "dfa";
    case Rule::kLayerwiseInstant: return "layerwise";
  }
  return "?";
}

std::string_view to_string(SnapshotMode mode) {
  return mode == SnapshotMode::kPostUpdate ? "post" : "pre";
}

std::string_view to_string(Loss loss) {
  return loss == Loss::kSoftmaxCrossEntropy ? "softmax_cross_entropy" : "mse";
}

Rule parse_rule(std::string_view name) {
  if (name == "bp" || name == "backprop") return Rule::kBackprop;
  if (name == "dfa") return Rule::kDfa;
  if (name == "layerwise" || name == "lw") return Rule::kLayerwiseInstant;
  throw ConfigError("unknown rule '" + std::string(name) + "' (expected bp, dfa or layerwise)");
}

SnapshotMode parse_snapshot_mode(std::string_view name) {
  if (name == "post") return SnapshotMode::kPostUpdate;
  if (name == "pre") return SnapshotMode::kPreUpdate;
  throw ConfigError("unknown snapshot mode '" + std::string(name) + "' (expected pre or post)");
}

// ---------------------------------------------------------------------------
// Output error

OutputError output_error(const Tensor& output, const Tensor& target, Loss loss, Activation output_activation,
                         const Tensor& pre_activation) {
  if (output.shape() != target.shape()) {
    throw DimensionError("output_error: output " + to_string(output.shape()) + " and target " +
                         to_string(target.shape()) + " differ");
  }
  const double rows = output.rank() >= 2 ? static_cast<double>(output.dim(0)) : 1.0;
  OutputError out;
  out.delta = subtract(output, target);
  if (loss == Loss::kSoftmaxCrossEntropy) {
    if (output_activation != Activation::kSoftmax) {
      throw ContractViolation("softmax cross-entropy needs a softmax output layer, got " +
                              std::string(to_string(output_activation)));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
      if (target[i] != 0.0) total -= target[i] * std::log(std::max(output[i], 1e-12));
    }
    out.loss = total / rows;
  } else {
    if (pre_activation.shape() != output.shape()) {
      throw DimensionError("output_error (mse): pre-activation " + to_string(pre_activation.shape()) +
                           " does not match output " + to_string(output.shape()));
    }
    out.loss = 0.5 * dot(out.delta, out.delta) / rows;
    out.delta = hadamard(out.delta, activation_derivative(output_activation, pre_activation, output));
  }
  return out;
}

OutputError output_error(const Network& net, const ForwardCache& cache, const Tensor& target, Loss loss) {
  const std::size_t last = net.depth() - 1;
  return output_error(cache.output(), target, loss, net.layer(last).activation, cache.pre.at(last));
}

// ---------------------------------------------------------------------------
// Feedback matrices

FeedbackMatrices::FeedbackMatrices(std::vector<Tensor> matrices) : matrices_(std::move(matrices)) {
  for (const Tensor& b : matrices_) transposed_.push_back(b.empty() ? Tensor() : transpose(b));
}

FeedbackMatrices FeedbackMatrices::random(const Network& net, std::uint64_t seed) {
  const std::size_t out_dim = element_count(net.output_shape());
  const double bound = 1.0 / std::sqrt(static_cast<double>(out_dim));
  Rng rng(seed, Stream::kFeedback);
  std::vector<Tensor> matrices;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (!net.layer(l).has_parameters() || l + 1 == net.depth()) {
      matrices.emplace_back();
      continue;
    }
    Tensor b({element_count(net.output_shape(l)), out_dim});
    for (double& v : b.data()) v = rng.uniform(-bound, bound);
    matrices.push_back(std::move(b));
  }
  return FeedbackMatrices(std::move(matrices));
}

void FeedbackMatrices::check(const Network& net) const {
  const std::size_t out_dim = element_count(net.output_shape());
  for (std::size_t l = 0; l + 1 < net.depth(); ++l) {
    if (!net.layer(l).has_parameters()) continue;
    const Shape want{element_count(net.output_shape(l)), out_dim};
    if (l >= matrices_.size() || matrices_[l].shape() != want) {
      throw ConfigError("feedback matrix for layer " + std::to_string(l) + " must be " + to_string(want) + ", got " +
                        (l < matrices_.size() ? to_string(matrices_[l].shape()) : std::string("none")));
    }
  }
}

Tensor FeedbackMatrices::project(std::size_t layer, const Tensor& output_delta, const Shape& layer_shape) const {
  Tensor projected = matmul(output_delta, transposed_.at(layer));
  return std::move(projected).reshaped(layer_shape);
}

// ---------------------------------------------------------------------------
// Error propagation

namespace {

Shape batched(std::size_t n, const Shape& sample) {
  Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

void check_cache(const Network& net, const ForwardCache& cache) {
  if (cache.depth() != net.depth() || cache.pre.size() != net.depth()) {
    throw ContractViolation("forward cache has " + std::to_string(cache.depth()) + " layers, network has " +
                            std::to_string(net.depth()));
  }
  if (cache.version != net.version()) {
    throw ContractViolation("forward cache is stale: parameters changed since the forward pass");
  }
  const std::size_t n = cache.batch_size();
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (cache.post[l].shape() != batched(n, net.output_shape(l))) {
      throw ContractViolation("forward cache layer " + std::to_string(l) + " has shape " +
                              to_string(cache.post[l].shape()) + ", network expects " +
                              to_string(batched(n, net.output_shape(l))));
    }
  }
}

void check_output_delta(const ForwardCache& cache, const Tensor& output_delta) {
  if (output_delta.shape() != cache.output().shape()) {
    throw DimensionError("output error " + to_string(output_delta.shape()) + " does not match network output " +
                         to_string(cache.output().shape()));
  }
}

// dLoss/dh_{l-1} from dLoss/dz_l through layer l.
Tensor propagate_down(const Layer& layer, const Tensor& delta, const ForwardCache& cache, std::size_t l) {
  const Tensor& input = cache.layer_input(l);
  switch (layer.kind) {
    case LayerKind::kDense:
      return matmul(delta, layer.weights);
    case LayerKind::kConv2D:
      return conv2d_backward_input(delta, layer.weights, input.shape());
    case LayerKind::kMaxPool2D:
      return maxpool2d_backward(delta, cache.pool.at(l));
    case LayerKind::kFlatten:
      return delta.reshaped(input.shape());
  }
  throw ContractViolation("unreachable layer kind");
}

// dLoss/dz_l from dLoss/dh_l.
Tensor through_activation(const Layer& layer, Tensor grad_h, const ForwardCache& cache, std::size_t l) {
  if (layer.activation == Activation::kIdentity) return grad_h;
  return hadamard(grad_h, activation_derivative(layer.activation, cache.pre[l], cache.post[l]));
}

void layer_gradients(const Layer& layer, const Tensor& input, const Tensor& delta, Tensor& grad_w, Tensor& grad_b) {
  const double n = static_cast<double>(delta.dim(0));
  if (layer.kind == LayerKind::kDense) {
    grad_w = matmul_transposed_a(delta, input);
    grad_b = sum_rows(delta);
  } else {
    ConvParamGrads g = conv2d_backward_params(input, delta, layer.weights.shape());
    grad_w = std::move(g.kernels);
    grad_b = std::move(g.bias);
  }
  for (double& v : grad_w.data()) v /= n;
  for (double& v : grad_b.data()) v /= n;
}

}  // namespace

ErrorSignal backprop_errors(const Network& net, const ForwardCache& cache, const Tensor& output_delta) {
  check_cache(net, cache);
  check_output_delta(cache, output_delta);
  ErrorSignal errors;
  errors.deltas.resize(net.depth());
  errors.deltas.back() = output_delta;
  for (std::size_t l = net.depth() - 1; l > 0; --l) {
    Tensor grad_h = propagate_down(net.layer(l), errors.deltas[l], cache, l);
    errors.deltas[l - 1] = through_activation(net.layer(l - 1), std::move(grad_h), cache, l - 1);
  }
  return errors;
}

ErrorSignal dfa_errors(const Network& net, const ForwardCache& cache, const Tensor& output_delta,
                       const FeedbackMatrices& feedback) {
  check_cache(net, cache);
  check_output_delta(cache, output_delta);
  feedback.check(net);
  const std::size_t n = cache.batch_size();
  const Tensor flat_delta = flatten_batch(output_delta);
  ErrorSignal errors;
  errors.deltas.resize(net.depth());
  errors.deltas.back() = output_delta;
  for (std::size_t l = 0; l + 1 < net.depth(); ++l) {
    if (!net.layer(l).has_parameters()) continue;
    Tensor projected = feedback.project(l, flat_delta, batched(n, net.output_shape(l)));
    errors.deltas[l] = through_activation(net.layer(l), std::move(projected), cache, l);
  }
  return errors;
}

Gradients assemble_gradients(const Network& net, const ForwardCache& cache, const ErrorSignal& errors) {
  if (errors.deltas.size() != net.depth()) {
    throw ContractViolation("error signal covers " + std::to_string(errors.deltas.size()) + " layers, network has " +
                            std::to_string(net.depth()));
  }
  Gradients grads;
  grads.weights.resize(net.depth());
  grads.biases.resize(net.depth());
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const Layer& layer = net.layer(l);
    if (!layer.has_parameters()) continue;
    if (errors.deltas[l].empty()) throw ContractViolation("no error signal for parameterized layer " + std::to_string(l));
    layer_gradients(layer, cache.layer_input(l), errors.deltas[l], grads.weights[l], grads.biases[l]);
  }
  return grads;
}

SweepResult backprop_sweep(const Network& net, const ForwardCache& cache, const Tensor& target, Loss loss) {
  check_cache(net, cache);
  OutputError out = output_error(net, cache, target, loss);
  SweepResult result;
  result.loss = out.loss;
  result.errors = backprop_errors(net, cache, out.delta);
  result.grads = assemble_gradients(net, cache, result.errors);
  return result;
}

SweepResult dfa_sweep(const Network& net, const ForwardCache& cache, const Tensor& target,
                      const FeedbackMatrices& feedback, Loss loss) {
  check_cache(net, cache);
  OutputError out = output_error(net, cache, target, loss);
  SweepResult result;
  result.loss = out.loss;
  result.errors = dfa_errors(net, cache, out.delta, feedback);
  result.grads = assemble_gradients(net, cache, result.errors);
  return result;
}

std::vector<double> error_norms(const ErrorSignal& errors) {
  std::vector<double> norms;
  norms.reserve(errors.deltas.size());
  for (const Tensor& d : errors.deltas) {
    if (d.empty()) {
      norms.push_back(0.0);
    } else {
      norms.push_back(std::sqrt(dot(d, d) / static_cast<double>(d.dim(0))));
    }
  }
  return norms;
}

UpdateReport layerwise_instant_sweep(Network& net, const ForwardCache& cache, const Tensor& target, Optimizer& optimizer,
                                     const StepSize& lr, SnapshotMode mode, Loss loss) {
  check_cache(net, cache);
  OutputError out = output_error(net, cache, target, loss);
  UpdateReport report;
  report.loss = out.loss;
  report.errors.deltas.resize(net.depth());
  report.update_norms.assign(net.depth(), 0.0);

  Tensor delta = std::move(out.delta);
  for (std::size_t l = net.depth(); l-- > 0;) {
    Tensor grad_h;
    if (net.layer(l).has_parameters()) {
      Tensor grad_w, grad_b;
      layer_gradients(net.layer(l), cache.layer_input(l), delta, grad_w, grad_b);
      if (l > 0 && mode == SnapshotMode::kPreUpdate) grad_h = propagate_down(net.layer(l), delta, cache, l);
      report.update_norms[l] = optimizer.apply_layer(net, l, grad_w, grad_b, lr.for_layer(l));
      if (l > 0 && mode == SnapshotMode::kPostUpdate) grad_h = propagate_down(net.layer(l), delta, cache, l);
    } else if (l > 0) {
      grad_h = propagate_down(net.layer(l), delta, cache, l);
    }
    report.errors.deltas[l] = std::move(delta);
    if (l > 0) delta = through_activation(net.layer(l - 1), std::move(grad_h), cache, l - 1);
  }
  report.error_norms = error_norms(report.errors);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (!net.layer(l).has_parameters()) report.error_norms[l] = 0.0;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Training loop

void TrainerConfig::validate(const Network& net) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive, got " + std::to_string(learning_rate));
  }
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!layer_lr_scale.empty()) {
    if (layer_lr_scale.size() != net.depth()) {
      throw ConfigError("layer_lr_scale has " + std::to_string(layer_lr_scale.size()) + " entries, network has " +
                        std::to_string(net.depth()) + " layers");
    }
    for (double s : layer_lr_scale) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("layer_lr_scale entries must be finite and >= 0");
    }
  }
  const Activation out_act = net.layer(net.depth() - 1).activation;
  if (loss == Loss::kSoftmaxCrossEntropy && out_act != Activation::kSoftmax) {
    throw ConfigError("cross-entropy training needs a softmax output layer");
  }
  if (loss == Loss::kMse && out_act == Activation::kSoftmax) {
    throw ConfigError("MSE training needs a non-softmax output layer");
  }
  if (net.output_shape().size() != 1) throw ConfigError("training needs a vector-output network");
}

TrainingRun train(Network& net, const Dataset& train_set, const Dataset& val_set, const TrainerConfig& config,
                  const TrainObserver& observer) {
  config.validate(net);
  if (train_set.size() == 0) throw ConfigError("training set is empty");
  if (val_set.size() == 0) throw ConfigError("validation set is empty");
  const std::size_t num_classes = net.output_shape()[0];
  train_set.validate(num_classes);
  val_set.validate(num_classes);

  Optimizer optimizer = config.optimizer == OptimizerKind::kAdam ? Optimizer::adam(net, config.adam) : Optimizer::sgd();
  FeedbackMatrices feedback;
  if (config.rule == Rule::kDfa) feedback = FeedbackMatrices::random(net, config.seed);
  const StepSize lr(config.learning_rate, config.layer_lr_scale);
  const std::vector<std::size_t> param_layers = net.parameterized_layers();

  TrainingRun run{{}, net, 0, 0.0, false};
  double best_accuracy = -1.0;
  std::size_t since_improvement = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    auto order = batches(train_set, config.batch_size, config.seed + epoch * 0x9E3779B97F4A7C15ULL, true);
    if (config.max_batches_per_epoch > 0 && order.size() > config.max_batches_per_epoch) {
      order.resize(config.max_batches_per_epoch);
    }

    double loss_sum = 0.0;
    std::size_t samples = 0;
    std::vector<double> norm_sums(net.depth(), 0.0);
    for (std::size_t b = 0; b < order.size(); ++b) {
      const auto& idx = order[b];
      const Tensor inputs = train_set.batch(idx, net.input_shape());
      const Tensor target = one_hot(train_set.labels, idx, num_classes);
      const ForwardCache cache = forward_pass(net, inputs);

      double batch_loss = 0.0;
      std::vector<double> norms;
      switch (config.rule) {
        case Rule::kBackprop: {
          SweepResult s = backprop_sweep(net, cache, target, config.loss);
          batch_loss = s.loss;
          norms = error_norms(s.errors);
          if (std::isfinite(batch_loss)) optimizer.apply(net, s.grads, lr);
          break;
        }
        case Rule::kDfa: {
          SweepResult s = dfa_sweep(net, cache, target, feedback, config.loss);
          batch_loss = s.loss;
          norms = error_norms(s.errors);
          if (std::isfinite(batch_loss)) optimizer.apply(net, s.grads, lr);
          break;
        }
        case Rule::kLayerwiseInstant: {
          UpdateReport r = layerwise_instant_sweep(net, cache, target, optimizer, lr, config.snapshot, config.loss);
          batch_loss = r.loss;
          norms = std::move(r.error_norms);
          break;
        }
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", batch " << b + 1;
        throw DivergenceError(epoch, b + 1, msg.str());
      }
      if (observer.on_batch) observer.on_batch(epoch, b + 1, batch_loss);
      loss_sum += batch_loss * static_cast<double>(idx.size());
      samples += idx.size();
      for (std::size_t l = 0; l < norm_sums.size(); ++l) norm_sums[l] += norms[l];
    }

    const Evaluation val = evaluate_detailed(net, val_set);
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(samples);
    record.val_loss = val.mean_loss;
    record.val_accuracy = val.report.accuracy;
    for (std::size_t l : param_layers) record.error_norms.push_back(norm_sums[l] / static_cast<double>(order.size()));
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.history.push_back(record);

    if (record.val_accuracy > best_accuracy) {
      best_accuracy = record.val_accuracy;
      run.best = net;
      run.best_epoch = epoch;
      run.best_val_accuracy = record.val_accuracy;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (observer.on_epoch) observer.on_epoch(record);
    if (config.patience > 0 && since_improvement >= config.patience) {
      run.stopped_early = epoch < config.epochs;
      break;
    }
  }
  return run;
}

}  // namespace lw
