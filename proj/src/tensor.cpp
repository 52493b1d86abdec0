#include "layerwise/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "layerwise/errors.hpp"

namespace lw {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + to_string(shape_) + " holds " + std::to_string(element_count(shape_)) +
                         " elements but " + std::to_string(data_.size()) + " were given");
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(n_rows * n_cols);
  for (const auto& row : rows) {
    if (row.size() != n_cols) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({n_rows, n_cols}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (rank() != 2) throw DimensionError("at(row, col) needs a rank-2 tensor, got " + to_string(shape_));
  return data_.at(row * shape_[1] + col);
}

double& Tensor::at(std::size_t row, std::size_t col) {
  if (rank() != 2) throw DimensionError("at(row, col) needs a rank-2 tensor, got " + to_string(shape_));
  return data_.at(row * shape_[1] + col);
}

Tensor Tensor::reshaped(Shape shape) const& {
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::reshaped(Shape shape) && {
  return Tensor(std::move(shape), std::move(data_));
}

bool Tensor::operator==(const Tensor& other) const {
  return shape_ == other.shape_ && data_ == other.data_;
}

namespace {

void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw DimensionError(std::string(what) + " needs a rank-2 tensor, got " + to_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

// c[m x n] += a[m x k] * b[k x n]. Each output element accumulates over p in
// ascending order; the four-row blocking only changes memory traffic.
void gemm_accumulate(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      const double s0 = a0[p], s1 = a1[p], s2 = a2[p], s3 = a3[p];
      for (std::size_t j = 0; j < n; ++j) {
        const double bj = brow[j];
        c0[j] += s0 * bj;
        c1[j] += s1 * bj;
        c2[j] += s2 * bj;
        c3[j] += s3 * bj;
      }
    }
  }
  for (; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      const double s = arow[p];
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

// c[k x n] += a[m x k]^T * b[m x n], accumulating over rows of a in order.
void gemm_tn_accumulate(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) {
    const double* arow = a + r * k;
    const double* brow = b + r * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = arow[p];
      double* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

void transpose_into(const double* src, double* dst, std::size_t rows, std::size_t cols) {
  constexpr std::size_t block = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += block) {
    const std::size_t i1 = std::min(rows, i0 + block);
    for (std::size_t j0 = 0; j0 < cols; j0 += block) {
      const std::size_t j1 = std::min(cols, j0 + block);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
      }
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions disagree for " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  Tensor out({a.dim(0), b.dim(1)});
  gemm_accumulate(a.raw(), b.raw(), out.raw(), a.dim(0), a.dim(1), b.dim(1));
  return out;
}

Tensor matmul_transposed_a(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_transposed_a");
  require_rank2(b, "matmul_transposed_a");
  if (a.dim(0) != b.dim(0)) {
    throw DimensionError("matmul_transposed_a: row counts disagree for " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  Tensor out({a.dim(1), b.dim(1)});
  gemm_tn_accumulate(a.raw(), b.raw(), out.raw(), a.dim(0), a.dim(1), b.dim(1));
  return out;
}

Tensor matmul_transposed_b(const Tensor& a, const Tensor& b) {
  require_rank2(b, "matmul_transposed_b");
  return matmul(a, transpose(b));
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose needs a rank-2 tensor, got rank " + std::to_string(a.rank()));
  Tensor out({a.dim(1), a.dim(0)});
  transpose_into(a.raw(), out.raw(), a.dim(0), a.dim(1));
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = a;
  for (double& v : out.data()) v *= factor;
  return out;
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
  require_same_shape(x, y, "axpy");
  const double* xs = x.raw();
  double* ys = y.raw();
  for (std::size_t i = 0; i < y.size(); ++i) ys[i] += alpha * xs[i];
}

Tensor flatten_batch(const Tensor& a) {
  if (a.rank() < 1) throw DimensionError("flatten_batch needs a leading batch axis");
  const std::size_t n = a.dim(0);
  return a.reshaped({n, n ? a.size() / n : 0});
}

Tensor sum_rows(const Tensor& a) {
  require_rank2(a, "sum_rows");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  Tensor out({cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = a.raw() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c];
  }
  return out;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

double frobenius_norm(const Tensor& a) {
  return std::sqrt(dot(a, a));
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: element counts differ for " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(const Tensor& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

struct ConvGeometry {
  std::size_t batch, channels, height, width;
  std::size_t filters, kh, kw;
  std::size_t out_h, out_w;
  bool batched;

  std::size_t patch() const { return channels * kh * kw; }
  std::size_t out_plane() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Shape& input_shape, const Shape& kernel_shape) {
  if (kernel_shape.size() != 4) throw DimensionError("conv2d kernels must be [F,C,kh,kw], got " + to_string(kernel_shape));
  ConvGeometry g{};
  if (input_shape.size() == 3) {
    g.batched = false;
    g.batch = 1;
    g.channels = input_shape[0];
    g.height = input_shape[1];
    g.width = input_shape[2];
  } else if (input_shape.size() == 4) {
    g.batched = true;
    g.batch = input_shape[0];
    g.channels = input_shape[1];
    g.height = input_shape[2];
    g.width = input_shape[3];
  } else {
    throw DimensionError("conv2d input must be [C,H,W] or [N,C,H,W], got " + to_string(input_shape));
  }
  g.filters = kernel_shape[0];
  g.kh = kernel_shape[2];
  g.kw = kernel_shape[3];
  if (kernel_shape[1] != g.channels) {
    throw DimensionError("conv2d: kernels " + to_string(kernel_shape) + " expect " + std::to_string(kernel_shape[1]) +
                         " channels but input " + to_string(input_shape) + " has " + std::to_string(g.channels));
  }
  if (g.kh == 0 || g.kw == 0 || g.kh > g.height || g.kw > g.width) {
    throw DimensionError("conv2d: kernel " + to_string(kernel_shape) + " does not fit input " + to_string(input_shape));
  }
  g.out_h = g.height - g.kh + 1;
  g.out_w = g.width - g.kw + 1;
  return g;
}

// One sample [C,H,W] -> columns [C*kh*kw, out_h*out_w].
void im2col(const double* image, const ConvGeometry& g, double* cols) {
  const std::size_t plane = g.out_plane();
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* channel = image + c * g.height * g.width;
    for (std::size_t dy = 0; dy < g.kh; ++dy) {
      for (std::size_t dx = 0; dx < g.kw; ++dx) {
        double* dst = cols + ((c * g.kh + dy) * g.kw + dx) * plane;
        for (std::size_t y = 0; y < g.out_h; ++y) {
          const double* src = channel + (y + dy) * g.width + dx;
          std::copy(src, src + g.out_w, dst + y * g.out_w);
        }
      }
    }
  }
}

void col2im_accumulate(const double* cols, const ConvGeometry& g, double* image) {
  const std::size_t plane = g.out_plane();
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* channel = image + c * g.height * g.width;
    for (std::size_t dy = 0; dy < g.kh; ++dy) {
      for (std::size_t dx = 0; dx < g.kw; ++dx) {
        const double* src = cols + ((c * g.kh + dy) * g.kw + dx) * plane;
        for (std::size_t y = 0; y < g.out_h; ++y) {
          double* dst = channel + (y + dy) * g.width + dx;
          const double* row = src + y * g.out_w;
          for (std::size_t x = 0; x < g.out_w; ++x) dst[x] += row[x];
        }
      }
    }
  }
}

Shape conv_output_shape(const ConvGeometry& g) {
  if (g.batched) return {g.batch, g.filters, g.out_h, g.out_w};
  return {g.filters, g.out_h, g.out_w};
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  const ConvGeometry g = conv_geometry(input.shape(), kernels.shape());
  if (bias.size() != g.filters) {
    throw DimensionError("conv2d: bias " + to_string(bias.shape()) + " does not match " + std::to_string(g.filters) +
                         " filters");
  }
  Tensor out(conv_output_shape(g));
  const std::size_t plane = g.out_plane();
  std::vector<double> cols(g.patch() * plane);
  for (std::size_t n = 0; n < g.batch; ++n) {
    im2col(input.raw() + n * g.channels * g.height * g.width, g, cols.data());
    double* dst = out.raw() + n * g.filters * plane;
    for (std::size_t f = 0; f < g.filters; ++f) std::fill(dst + f * plane, dst + (f + 1) * plane, bias[f]);
    gemm_accumulate(kernels.raw(), cols.data(), dst, g.filters, g.patch(), plane);
  }
  return out;
}

Tensor conv2d_backward_input(const Tensor& grad_output, const Tensor& kernels, const Shape& input_shape) {
  const ConvGeometry g = conv_geometry(input_shape, kernels.shape());
  if (grad_output.shape() != conv_output_shape(g)) {
    throw DimensionError("conv2d_backward_input: gradient " + to_string(grad_output.shape()) + " does not match output " +
                         to_string(conv_output_shape(g)));
  }
  Tensor grad_input(input_shape);
  const std::size_t plane = g.out_plane();
  std::vector<double> cols(g.patch() * plane);
  for (std::size_t n = 0; n < g.batch; ++n) {
    std::fill(cols.begin(), cols.end(), 0.0);
    gemm_tn_accumulate(kernels.raw(), grad_output.raw() + n * g.filters * plane, cols.data(), g.filters, g.patch(),
                       plane);
    col2im_accumulate(cols.data(), g, grad_input.raw() + n * g.channels * g.height * g.width);
  }
  return grad_input;
}

ConvParamGrads conv2d_backward_params(const Tensor& input, const Tensor& grad_output, const Shape& kernel_shape) {
  const ConvGeometry g = conv_geometry(input.shape(), kernel_shape);
  if (grad_output.shape() != conv_output_shape(g)) {
    throw DimensionError("conv2d_backward_params: gradient " + to_string(grad_output.shape()) +
                         " does not match output " + to_string(conv_output_shape(g)));
  }
  ConvParamGrads grads{Tensor(kernel_shape), Tensor({g.filters})};
  const std::size_t plane = g.out_plane();
  std::vector<double> cols(g.patch() * plane);
  std::vector<double> cols_t(cols.size());
  for (std::size_t n = 0; n < g.batch; ++n) {
    im2col(input.raw() + n * g.channels * g.height * g.width, g, cols.data());
    transpose_into(cols.data(), cols_t.data(), g.patch(), plane);
    const double* go = grad_output.raw() + n * g.filters * plane;
    gemm_accumulate(go, cols_t.data(), grads.kernels.raw(), g.filters, plane, g.patch());
    for (std::size_t f = 0; f < g.filters; ++f) {
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += go[f * plane + i];
      grads.bias[f] += s;
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Max pooling

namespace {

struct PoolGeometry {
  std::size_t planes, height, width, out_h, out_w;
};

PoolGeometry pool_geometry(const Shape& shape, std::size_t pool) {
  if (shape.size() < 2) throw DimensionError("maxpool2d needs at least [H,W], got " + to_string(shape));
  if (pool == 0) throw DimensionError("maxpool2d: pool size must be positive");
  PoolGeometry g{};
  g.height = shape[shape.size() - 2];
  g.width = shape[shape.size() - 1];
  if (g.height % pool != 0 || g.width % pool != 0) {
    throw DimensionError("maxpool2d: spatial extent " + std::to_string(g.height) + "x" + std::to_string(g.width) +
                         " is not divisible by pool " + std::to_string(pool));
  }
  g.planes = element_count(shape) / (g.height * g.width);
  g.out_h = g.height / pool;
  g.out_w = g.width / pool;
  return g;
}

}  // namespace

PoolResult maxpool2d(const Tensor& input, std::size_t pool) {
  const PoolGeometry g = pool_geometry(input.shape(), pool);
  Shape out_shape = input.shape();
  out_shape[out_shape.size() - 2] = g.out_h;
  out_shape[out_shape.size() - 1] = g.out_w;

  PoolResult result{Tensor(out_shape), ArgmaxIndices{input.shape(), pool, {}}};
  result.argmax.window_offset.resize(result.output.size());
  std::size_t o = 0;
  for (std::size_t p = 0; p < g.planes; ++p) {
    const double* plane = input.raw() + p * g.height * g.width;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox, ++o) {
        std::size_t best_offset = 0;
        double best = plane[(oy * pool) * g.width + ox * pool];
        for (std::size_t dy = 0; dy < pool; ++dy) {
          for (std::size_t dx = 0; dx < pool; ++dx) {
            const double v = plane[(oy * pool + dy) * g.width + ox * pool + dx];
            if (v > best) {
              best = v;
              best_offset = dy * pool + dx;
            }
          }
        }
        result.output[o] = best;
        result.argmax.window_offset[o] = best_offset;
      }
    }
  }
  return result;
}

Tensor maxpool2d_backward(const Tensor& grad_output, const ArgmaxIndices& argmax) {
  const std::size_t pool = argmax.pool;
  const PoolGeometry g = pool_geometry(argmax.input_shape, pool);
  if (grad_output.size() != argmax.window_offset.size() || grad_output.size() != g.planes * g.out_h * g.out_w) {
    throw DimensionError("maxpool2d_backward: gradient " + to_string(grad_output.shape()) +
                         " does not match pooled input " + to_string(argmax.input_shape));
  }
  Tensor grad_input(argmax.input_shape);
  std::size_t o = 0;
  for (std::size_t p = 0; p < g.planes; ++p) {
    double* plane = grad_input.raw() + p * g.height * g.width;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox, ++o) {
        const std::size_t dy = argmax.window_offset[o] / pool;
        const std::size_t dx = argmax.window_offset[o] % pool;
        plane[(oy * pool + dy) * g.width + ox * pool + dx] += grad_output[o];
      }
    }
  }
  return grad_input;
}

}  // namespace lw
