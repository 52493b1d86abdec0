#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "layerwise/rng.hpp"
#include "layerwise/tensor.hpp"

namespace lwtest {

inline lw::Tensor random_tensor(const lw::Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  lw::Tensor t(shape);
  lw::Rng rng(seed, lw::Stream::kSynthetic, 77);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("layerwise-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path fixture_dir() { return LAYERWISE_FIXTURE_DIR; }

}  // namespace lwtest
