#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerwise/data.hpp"
#include "layerwise/nn.hpp"

namespace lw {

/// k x k counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  void add(std::size_t truth, std::size_t predicted);
  std::size_t num_classes() const noexcept { return k_; }
  std::uint64_t count(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * k_ + predicted); }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t column_sum(std::size_t predicted) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels,
                                 std::size_t num_classes);

/// Per-class values plus their unweighted (macro) mean.
struct ClassAverage {
  std::vector<double> per_class;
  double macro = 0.0;
};

// A class with no predictions gets precision 0; a class with no true samples
// gets recall 0; F1 is 0 whenever precision + recall is 0. All of these
// throw ValidationError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);
ClassAverage precision(const ConfusionMatrix& cm);
ClassAverage recall(const ConfusionMatrix& cm);
ClassAverage f1(const ConfusionMatrix& cm);

struct MetricsReport {
  ConfusionMatrix confusion{1};
  std::uint64_t samples = 0;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  ClassAverage precision;
  ClassAverage recall;
  ClassAverage f1;
  /// Classes whose precision (no predictions) or recall (no samples) was defined as 0.
  std::vector<std::size_t> undefined_precision;
  std::vector<std::size_t> undefined_recall;
};

MetricsReport make_report(const ConfusionMatrix& cm);

nlohmann::json to_json(const MetricsReport& report);
/// Aligned text table: one row per class plus a macro row.
std::string to_table(const MetricsReport& report);

struct Evaluation {
  MetricsReport report;
  /// Mean cross-entropy of the softmax outputs against the labels.
  double mean_loss = 0.0;
  std::vector<int> predictions;
};

/// Argmax predictions over `ds`, evaluated in chunks of `chunk` samples.
Evaluation evaluate_detailed(const Network& net, const Dataset& ds, std::size_t chunk = 500);
MetricsReport evaluate(const Network& net, const Dataset& ds);

}  // namespace lw
