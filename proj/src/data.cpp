#include "layerwise/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "layerwise/errors.hpp"
#include "layerwise/io.hpp"
#include "layerwise/rng.hpp"

namespace lw {

double Dataset::pixel(std::size_t sample, std::size_t offset) const {
  const double raw = pixels[sample * sample_size() + offset];
  return normalized ? raw / 255.0 : raw;
}

Tensor Dataset::images() const {
  std::vector<std::size_t> all(size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return batch(all);
}

Tensor Dataset::batch(std::span<const std::size_t> indices, const Shape& as_shape) const {
  const std::size_t per = sample_size();
  Shape shape{indices.size()};
  if (as_shape.empty()) {
    shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  } else {
    if (element_count(as_shape) != per) {
      throw DimensionError("cannot view samples " + to_string(sample_shape) + " as " + to_string(as_shape));
    }
    shape.insert(shape.end(), as_shape.begin(), as_shape.end());
  }
  Tensor out(shape);
  double* dst = out.raw();
  for (std::size_t idx : indices) {
    if (idx >= size()) throw DimensionError("sample index " + std::to_string(idx) + " out of range");
    const std::uint8_t* src = pixels.data() + idx * per;
    if (normalized) {
      for (std::size_t i = 0; i < per; ++i) dst[i] = src[i] / 255.0;
    } else {
      for (std::size_t i = 0; i < per; ++i) dst[i] = src[i];
    }
    dst += per;
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{name, sample_shape, {}, {}, normalized};
  const std::size_t per = sample_size();
  out.pixels.reserve(indices.size() * per);
  out.labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= size()) throw DimensionError("sample index " + std::to_string(idx) + " out of range");
    out.pixels.insert(out.pixels.end(), pixels.begin() + static_cast<std::ptrdiff_t>(idx * per),
                      pixels.begin() + static_cast<std::ptrdiff_t>((idx + 1) * per));
    out.labels.push_back(labels[idx]);
  }
  return out;
}

void Dataset::validate(std::size_t num_classes) const {
  if (pixels.size() != size() * sample_size()) {
    throw ValidationError("dataset '" + name + "' holds " + std::to_string(pixels.size()) + " pixel bytes for " +
                          std::to_string(size()) + " samples of " + to_string(sample_shape));
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw ValidationError("dataset '" + name + "' has label " + std::to_string(label) + " outside [0," +
                            std::to_string(num_classes) + ")");
    }
  }
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::uint32_t read_be32(const std::string& bytes, std::size_t pos) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + 3]));
}

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>(v & 0xFF));
}

std::string hex32(std::uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof(buf), "0x%08X", v);
  return buf;
}

void check_magic(const std::filesystem::path& path, std::uint32_t expected, std::uint32_t found) {
  if (found != expected) {
    throw FormatError(path.string() + ": bad IDX magic, expected " + hex32(expected) + " but found " + hex32(found));
  }
}

}  // namespace

Dataset load_mnist_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const std::string images = read_file(images_path);
  const std::string labels = read_file(labels_path);
  if (images.size() < 16) throw FormatError(images_path.string() + ": truncated IDX header");
  if (labels.size() < 8) throw FormatError(labels_path.string() + ": truncated IDX header");
  check_magic(images_path, kIdxImageMagic, read_be32(images, 0));
  check_magic(labels_path, kIdxLabelMagic, read_be32(labels, 0));

  const std::size_t count = read_be32(images, 4);
  const std::size_t rows = read_be32(images, 8);
  const std::size_t cols = read_be32(images, 12);
  const std::size_t label_count = read_be32(labels, 4);
  if (count != label_count) {
    throw FormatError("IDX image count " + std::to_string(count) + " differs from label count " +
                      std::to_string(label_count));
  }
  const std::size_t expected_image_bytes = 16 + count * rows * cols;
  if (images.size() != expected_image_bytes) {
    throw FormatError(images_path.string() + ": length " + std::to_string(images.size()) + " bytes, header implies " +
                      std::to_string(expected_image_bytes));
  }
  if (labels.size() != 8 + count) {
    throw FormatError(labels_path.string() + ": length " + std::to_string(labels.size()) + " bytes, header implies " +
                      std::to_string(8 + count));
  }

  Dataset ds;
  ds.name = "mnist";
  ds.sample_shape = {1, rows, cols};
  ds.pixels.assign(images.begin() + 16, images.end());
  ds.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<unsigned char>(labels[8 + i]);
    if (label > 9) throw FormatError(labels_path.string() + ": label " + std::to_string(label) + " at " + std::to_string(i));
    ds.labels.push_back(label);
  }
  return ds;
}

void write_mnist_idx(const Dataset& ds, const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path) {
  if (ds.sample_shape.size() != 3 || ds.sample_shape[0] != 1) {
    throw DimensionError("IDX images must be single-channel, got " + to_string(ds.sample_shape));
  }
  std::string images;
  put_be32(images, kIdxImageMagic);
  put_be32(images, static_cast<std::uint32_t>(ds.size()));
  put_be32(images, static_cast<std::uint32_t>(ds.sample_shape[1]));
  put_be32(images, static_cast<std::uint32_t>(ds.sample_shape[2]));
  images.append(ds.pixels.begin(), ds.pixels.end());
  std::string labels;
  put_be32(labels, kIdxLabelMagic);
  put_be32(labels, static_cast<std::uint32_t>(ds.size()));
  for (int label : ds.labels) labels.push_back(static_cast<char>(label));
  write_file_atomic(images_path, images);
  write_file_atomic(labels_path, labels);
}

// ---------------------------------------------------------------------------
// CIFAR-10

Dataset load_cifar10(std::span<const std::filesystem::path> batch_files) {
  if (batch_files.empty()) throw ConfigError("load_cifar10 needs at least one batch file");
  Dataset ds;
  ds.name = "cifar10";
  ds.sample_shape = {3, 32, 32};
  for (const auto& path : batch_files) {
    const std::string bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
      throw FormatError(path.string() + ": length " + std::to_string(bytes.size()) + " is not a multiple of " +
                        std::to_string(kCifarRecordBytes) + "-byte records");
    }
    const std::size_t records = bytes.size() / kCifarRecordBytes;
    ds.pixels.reserve(ds.pixels.size() + records * (kCifarRecordBytes - 1));
    for (std::size_t r = 0; r < records; ++r) {
      const std::size_t base = r * kCifarRecordBytes;
      const int label = static_cast<unsigned char>(bytes[base]);
      if (label > 9) throw FormatError(path.string() + ": label " + std::to_string(label) + " in record " + std::to_string(r));
      ds.labels.push_back(label);
      ds.pixels.insert(ds.pixels.end(), bytes.begin() + static_cast<std::ptrdiff_t>(base + 1),
                       bytes.begin() + static_cast<std::ptrdiff_t>(base + kCifarRecordBytes));
    }
  }
  return ds;
}

void write_cifar10(const Dataset& ds, const std::filesystem::path& path) {
  if (ds.sample_shape != Shape{3, 32, 32}) {
    throw DimensionError("CIFAR-10 records are [3x32x32], got " + to_string(ds.sample_shape));
  }
  std::string bytes;
  bytes.reserve(ds.size() * kCifarRecordBytes);
  const std::size_t per = ds.sample_size();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    bytes.push_back(static_cast<char>(ds.labels[i]));
    bytes.append(ds.pixels.begin() + static_cast<std::ptrdiff_t>(i * per),
                 ds.pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
  }
  write_file_atomic(path, bytes);
}

// ---------------------------------------------------------------------------
// Preparation

Dataset synthetic_dataset(std::string name, std::size_t n, const Shape& sample_shape, std::uint64_t seed,
                          std::size_t num_classes) {
  if (sample_shape.size() != 3 || sample_shape[1] < 8 || sample_shape[2] < 8) {
    throw ConfigError("synthetic images need a [C,H,W] shape of at least 8x8, got " + to_string(sample_shape));
  }
  if (num_classes == 0 || num_classes > 10) throw ConfigError("synthetic data supports 1..10 classes");
  const std::size_t channels = sample_shape[0], h = sample_shape[1], w = sample_shape[2];
  Rng rng(seed, Stream::kSynthetic);
  Dataset ds;
  ds.name = std::move(name);
  ds.sample_shape = sample_shape;
  ds.pixels.resize(n * ds.sample_size());
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<int>(i % num_classes);
  shuffle(std::span<int>(ds.labels), rng);

  const std::size_t block = std::max<std::size_t>(2, std::min(h, w) / 6);
  const std::size_t cell_h = h / 2, cell_w = w / 5;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint8_t* img = ds.pixels.data() + i * ds.sample_size();
    for (std::size_t p = 0; p < ds.sample_size(); ++p) img[p] = static_cast<std::uint8_t>(rng.below(48));
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    const std::size_t jitter = cell_w > block ? cell_w - block : 1;
    const std::size_t y0 = (c / 5) * cell_h + rng.below(std::min(cell_h - block, jitter) + 1);
    const std::size_t x0 = (c % 5) * cell_w + rng.below(jitter);
    const std::uint8_t peak = static_cast<std::uint8_t>(180 + rng.below(76));
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const double gain = channels == 1 ? 1.0 : 0.35 + 0.65 * static_cast<double>((c + ch) % 3 == 0);
      for (std::size_t y = y0; y < std::min(h, y0 + block); ++y) {
        for (std::size_t x = x0; x < std::min(w, x0 + block); ++x) {
          img[(ch * h + y) * w + x] = static_cast<std::uint8_t>(gain * peak);
        }
      }
    }
  }
  return ds;
}

Dataset normalize(Dataset ds) {
  if (ds.normalized) throw ContractViolation("dataset '" + ds.name + "' is already normalized");
  ds.normalized = true;
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1), got " + std::to_string(ratio));
  const std::size_t n = ds.size();
  const auto first = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  if (first == 0 || first == n) {
    throw ConfigError("split of " + std::to_string(n) + " samples at ratio " + std::to_string(ratio) +
                      " leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, Stream::kSplit);
  shuffle(std::span<std::size_t>(order), rng);
  const std::span<const std::size_t> all(order);
  return {ds.subset(all.subspan(0, first)), ds.subset(all.subspan(first))};
}

std::vector<std::vector<std::size_t>> batches(std::size_t count, std::size_t batch_size, std::uint64_t seed,
                                              bool shuffle_order) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_order) {
    Rng rng(seed, Stream::kShuffle);
    shuffle(std::span<std::size_t>(order), rng);
  }
  std::vector<std::vector<std::size_t>> out;
  out.reserve((count + batch_size - 1) / batch_size);
  for (std::size_t begin = 0; begin < count; begin += batch_size) {
    const std::size_t end = std::min(count, begin + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<std::vector<std::size_t>> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t seed,
                                              bool shuffle_order) {
  return batches(ds.size(), batch_size, seed, shuffle_order);
}

Tensor one_hot(std::span<const int> labels, std::span<const std::size_t> indices, std::size_t num_classes) {
  Tensor out({indices.size(), num_classes});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int label = labels[indices[r]];
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw ValidationError("label " + std::to_string(label) + " outside [0," + std::to_string(num_classes) + ")");
    }
    out[r * num_classes + static_cast<std::size_t>(label)] = 1.0;
  }
  return out;
}

}  // namespace lw
