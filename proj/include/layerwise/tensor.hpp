#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lw {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// Invariant: element_count(shape()) == data().size(). A default-constructed
/// tensor has shape {0} and no elements.
class Tensor {
 public:
  Tensor() : shape_{0} {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const double* raw() const noexcept { return data_.data(); }
  double* raw() noexcept { return data_.data(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  /// Rank-2 element access.
  double at(std::size_t row, std::size_t col) const;
  double& at(std::size_t row, std::size_t col);

  /// Same data under a new shape with the same element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  /// Exact equality of shape and every element (NaN never compares equal).
  bool operator==(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Linear algebra. All kernels use a fixed accumulation order, so identical
// inputs give bit-identical outputs.

Tensor matmul(const Tensor& a, const Tensor& b);
/// a^T b without materializing a^T.
Tensor matmul_transposed_a(const Tensor& a, const Tensor& b);
/// a b^T.
Tensor matmul_transposed_b(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise arithmetic on equal shapes.

Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// y += alpha * x
void axpy(double alpha, const Tensor& x, Tensor& y);

/// Flatten every axis after the first: [N, ...] -> [N, prod(...)].
Tensor flatten_batch(const Tensor& a);
/// Column sums of a rank-2 tensor: [N, K] -> [K].
Tensor sum_rows(const Tensor& a);

double sum(const Tensor& a);
double frobenius_norm(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& a);

// Convolution: cross-correlation, stride 1, valid padding.
// Inputs are [C,H,W] or batched [N,C,H,W]; kernels are [F,C,kh,kw]; bias is [F].

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);

/// Gradient w.r.t. the input given the gradient w.r.t. the output.
Tensor conv2d_backward_input(const Tensor& grad_output, const Tensor& kernels, const Shape& input_shape);

struct ConvParamGrads {
  Tensor kernels;
  Tensor bias;
};

/// Kernel and bias gradients summed over the batch.
ConvParamGrads conv2d_backward_params(const Tensor& input, const Tensor& grad_output, const Shape& kernel_shape);

// Max pooling over non-overlapping pool x pool windows on the last two axes.

struct ArgmaxIndices {
  Shape input_shape;
  std::size_t pool = 2;
  /// Row-major position of the winner inside its window, one per output cell.
  std::vector<std::size_t> window_offset;
};

struct PoolResult {
  Tensor output;
  ArgmaxIndices argmax;
};

/// Ties go to the first maximum in row-major scan order. Odd spatial extents are rejected.
PoolResult maxpool2d(const Tensor& input, std::size_t pool = 2);
/// Routes each output gradient to its window's winning input position.
Tensor maxpool2d_backward(const Tensor& grad_output, const ArgmaxIndices& argmax);

}  // namespace lw
