#pragma once

#include <functional>
#include <string>
#include <vector>

#include "layerwise/nn.hpp"
#include "layerwise/optim.hpp"
#include "layerwise/trainers.hpp"

namespace lw {

/// (f(x + eps) - f(x - eps)) / 2eps.
double central_difference(const std::function<double(double)>& f, double x, double eps);

/// Per-parameter flags marking elements left out of a comparison. Same
/// layout as Gradients; empty vectors for parameter-free layers.
struct ExclusionMask {
  std::vector<std::vector<bool>> weights;
  std::vector<std::vector<bool>> biases;
  std::size_t excluded = 0;
};

struct NumericGradients {
  Gradients grads;
  ExclusionMask mask;
  bool ok = true;       ///< false when a probe produced a non-finite loss
  std::string failure;  ///< which probe failed
};

/// Central-difference gradient of the batch-mean loss for every parameter,
/// computed on a private copy of `net`.
///
/// A parameter in layer l is masked when a ReLU unit in any layer >= l has
/// |z| < 10 eps at the base point, or when either probe flips a ReLU unit's
/// sign or moves a pooling argmax.
NumericGradients finite_difference_grads(const Network& net, const Tensor& inputs, const Tensor& target,
                                         Loss loss = Loss::kSoftmaxCrossEntropy, double eps = 1e-5);

struct TensorCheck {
  std::size_t layer = 0;
  bool bias = false;
  std::size_t elements = 0;
  std::size_t compared = 0;  ///< elements not masked out
  double max_abs = 0.0;
  /// Largest |a - n| / max(|a|, |n|) over elements where max(|a|, |n|) >= 1e-6.
  double max_rel = 0.0;
  std::size_t worst_index = 0;  ///< flat index with the largest |a - n|
  bool pass = true;

  std::string name() const;
};

/// pass <=> every compared element satisfies |a - n| <= atol + rtol |n|.
struct GradCheckReport {
  double rtol = 0.0;
  double atol = 0.0;
  std::vector<TensorCheck> tensors;
  std::size_t excluded = 0;
  bool pass = true;
  std::string failure;

  double max_rel() const;
  double max_abs() const;
};

/// Throws ContractViolation if the two gradient sets differ in structure.
GradCheckReport compare_grads(const Gradients& analytic, const Gradients& numeric, double rtol, double atol,
                              const ExclusionMask* mask = nullptr);

std::string to_table(const GradCheckReport& report);

/// Angle in degrees between the flattened (weights, bias) gradients of each
/// parameterized layer, bottom to top. Throws std::domain_error when either
/// side of a layer has zero norm.
std::vector<double> alignment_angle(const Gradients& a, const Gradients& b);

}  // namespace lw
