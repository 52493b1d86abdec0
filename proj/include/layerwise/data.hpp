#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "layerwise/tensor.hpp"

namespace lw {

/// Labelled image set.
///
/// Pixels stay as the raw source bytes; `normalized` selects whether they
/// are exposed as byte/255 or as the byte value itself. Image tensors are
/// materialized per batch, which keeps 60k-sample sets at one byte per pixel.
struct Dataset {
  std::string name;
  Shape sample_shape;                // [C, H, W]
  std::vector<std::uint8_t> pixels;  // size() * element_count(sample_shape), sample-major
  std::vector<int> labels;
  bool normalized = false;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t sample_size() const { return element_count(sample_shape); }
  double pixel(std::size_t sample, std::size_t offset) const;

  /// All images as [N, C, H, W].
  Tensor images() const;
  /// Selected images as [n, sample...]. A non-empty `as_shape` with the same
  /// element count re-labels each sample (e.g. [1,28,28] -> [784]).
  Tensor batch(std::span<const std::size_t> indices, const Shape& as_shape = {}) const;
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Throws ValidationError when labels/pixels are inconsistent.
  void validate(std::size_t num_classes = 10) const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 32 * 32;

/// Big-endian IDX image/label pair (MNIST layout, 28x28 images).
Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Concatenation of CIFAR-10 binary batch files (3073-byte records).
Dataset load_cifar10(std::span<const std::filesystem::path> batch_files);

void write_mnist_idx(const Dataset& ds, const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path);
void write_cifar10(const Dataset& ds, const std::filesystem::path& path);

/// Rescales pixels to [0, 1] by dividing by 255. Normalizing twice is a ContractViolation.
Dataset normalize(Dataset ds);

/// Seeded permutation, then the first floor(ratio * N) samples go to the first set.
std::pair<Dataset, Dataset> split(const Dataset& ds, double ratio, std::uint64_t seed);

/// Index batches covering [0, N) once. With shuffle the order is a seeded
/// permutation; the last batch may be short.
std::vector<std::vector<std::size_t>> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t seed,
                                              bool shuffle);
std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, std::uint64_t seed,
                                              bool shuffle);

/// Class-conditional toy images for fixtures and smoke runs: each class
/// lights a square block at its own grid position (and, with three
/// channels, its own colour mix) over uniform background noise, with a
/// little positional jitter. Labels cycle 0..num_classes-1 in a seeded order.
Dataset synthetic_dataset(std::string name, std::size_t n, const Shape& sample_shape, std::uint64_t seed,
                          std::size_t num_classes = 10);

/// One-hot rows [n, num_classes] for labels[indices].
Tensor one_hot(std::span<const int> labels, std::span<const std::size_t> indices, std::size_t num_classes);

}  // namespace lw
