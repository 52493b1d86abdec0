#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "layerwise/data.hpp"
#include "layerwise/nn.hpp"
#include "layerwise/optim.hpp"

namespace lw {

enum class Rule { kBackprop, kDfa, kLayerwiseInstant };

/// Which weights of layer l+1 the instant rule reads when computing layer l's error.
enum class SnapshotMode {
  kPostUpdate,  ///< weights already updated earlier in the same sweep
  kPreUpdate,   ///< weights as they were when the sweep started
};

enum class Loss { kSoftmaxCrossEntropy, kMse };

std::string_view to_string(Rule rule);
std::string_view to_string(SnapshotMode mode);
std::string_view to_string(Loss loss);
Rule parse_rule(std::string_view name);
SnapshotMode parse_snapshot_mode(std::string_view name);

/// delta[l] is dLoss/dz_l per sample, shaped like h_l. Layers a rule does
/// not assign an error to hold an empty tensor.
struct ErrorSignal {
  std::vector<Tensor> deltas;
};

struct OutputError {
  double loss = 0.0;  ///< mean over the batch
  Tensor delta;       ///< per-sample dLoss/dz_L
};

/// Softmax + cross-entropy gives delta = h - T and loss = -sum T log h
/// (h clamped at 1e-12); MSE gives delta = (h - T) * f'(z) and loss =
/// 0.5 |h - T|^2. Losses are averaged over the batch rows.
OutputError output_error(const Tensor& output, const Tensor& target, Loss loss,
                         Activation output_activation = Activation::kSoftmax, const Tensor& pre_activation = {});

/// output_error for the last layer recorded in `cache`.
OutputError output_error(const Network& net, const ForwardCache& cache, const Tensor& target, Loss loss);

/// Fixed random feedback matrices for direct feedback alignment.
///
/// B_l has shape [dim(h_l), dim(output)] for every parameterized layer
/// below the output layer; entries are uniform in +-1/sqrt(dim(output)).
class FeedbackMatrices {
 public:
  FeedbackMatrices() = default;
  explicit FeedbackMatrices(std::vector<Tensor> matrices);
  static FeedbackMatrices random(const Network& net, std::uint64_t seed);

  const std::vector<Tensor>& matrices() const noexcept { return matrices_; }
  /// B_l * delta_out for each row of a [N, K] output error, reshaped like h_l.
  Tensor project(std::size_t layer, const Tensor& output_delta, const Shape& layer_shape) const;
  /// Throws ConfigError if a hidden parameterized layer lacks a correctly shaped B_l.
  void check(const Network& net) const;

 private:
  std::vector<Tensor> matrices_;
  std::vector<Tensor> transposed_;
};

/// Chain-rule errors: delta_l = (W_{l+1}^T delta_{l+1}) * f'(z_l), routing through pooling argmax.
ErrorSignal backprop_errors(const Network& net, const ForwardCache& cache, const Tensor& output_delta);

/// Direct projection: delta_l = (B_l delta_L) * f'(z_l) for hidden parameterized layers.
ErrorSignal dfa_errors(const Network& net, const ForwardCache& cache, const Tensor& output_delta,
                       const FeedbackMatrices& feedback);

/// Batch-mean parameter gradients delta_l h_{l-1}^T (and their conv analogues).
Gradients assemble_gradients(const Network& net, const ForwardCache& cache, const ErrorSignal& errors);

struct SweepResult {
  double loss = 0.0;
  ErrorSignal errors;
  Gradients grads;
};

/// Backpropagation gradients; parameters are not modified.
SweepResult backprop_sweep(const Network& net, const ForwardCache& cache, const Tensor& target,
                           Loss loss = Loss::kSoftmaxCrossEntropy);

/// Direct feedback alignment gradients; parameters are not modified.
SweepResult dfa_sweep(const Network& net, const ForwardCache& cache, const Tensor& target,
                      const FeedbackMatrices& feedback, Loss loss = Loss::kSoftmaxCrossEntropy);

struct UpdateReport {
  double loss = 0.0;
  ErrorSignal errors;
  /// Per layer: sqrt(sum delta^2 / N), i.e. the RMS over the batch of the
  /// per-sample error norms; 0 for parameter-free layers.
  std::vector<double> error_norms;
  /// Per layer: L2 norm of the applied parameter step.
  std::vector<double> update_norms;
};

/// Layer-wise instant update: one top-down sweep in which every
/// parameterized layer is updated as soon as its error is known. In
/// kPostUpdate mode the error handed to layer l-1 is computed with layer l's
/// freshly updated weights; in kPreUpdate mode with the weights the sweep
/// started from. Throws ContractViolation if `cache` is stale.
UpdateReport layerwise_instant_sweep(Network& net, const ForwardCache& cache, const Tensor& target, Optimizer& optimizer,
                                     const StepSize& lr, SnapshotMode mode = SnapshotMode::kPostUpdate,
                                     Loss loss = Loss::kSoftmaxCrossEntropy);

/// RMS over the batch of per-sample L2 norms for each layer's delta.
std::vector<double> error_norms(const ErrorSignal& errors);

struct TrainerConfig {
  Rule rule = Rule::kBackprop;
  SnapshotMode snapshot = SnapshotMode::kPostUpdate;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  std::vector<double> layer_lr_scale;
  AdamHyper adam;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  /// Stop after this many epochs without a validation-accuracy improvement; 0 disables.
  std::size_t patience = 10;
  /// Cap on batches per epoch; 0 means the whole training set.
  std::size_t max_batches_per_epoch = 0;
  Loss loss = Loss::kSoftmaxCrossEntropy;

  void validate(const Network& net) const;
};

struct EpochRecord {
  std::size_t epoch = 0;  ///< 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  /// Mean over batches of error_norms for each parameterized layer, bottom to top.
  std::vector<double> error_norms;
  double wall_seconds = 0.0;
};

struct TrainingRun {
  std::vector<EpochRecord> history;
  Network best;
  std::size_t best_epoch = 0;  ///< 0 when no epoch ran
  double best_val_accuracy = 0.0;
  bool stopped_early = false;
};

struct TrainObserver {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(std::size_t epoch, std::size_t batch, double loss)> on_batch;
};

/// Epoch loop: seeded shuffle, per-batch update with the configured rule,
/// validation, best-model checkpoint on improved validation accuracy, and
/// patience-based early stopping. `net` ends with the final parameters.
/// Throws DivergenceError on a non-finite batch loss.
TrainingRun train(Network& net, const Dataset& train_set, const Dataset& val_set, const TrainerConfig& config,
                  const TrainObserver& observer = {});

}  // namespace lw
