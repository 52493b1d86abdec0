#include "layerwise/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "layerwise/errors.hpp"

namespace lw {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes) : k_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw ValidationError("a confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= k_ || predicted >= k_) {
    throw ValidationError("class pair (" + std::to_string(truth) + ", " + std::to_string(predicted) +
                          ") outside [0," + std::to_string(k_) + ")");
  }
  ++counts_[truth * k_ + predicted];
  ++total_;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t c = 0; c < k_; ++c) t += counts_[c * k_ + c];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < k_; ++p) s += counts_.at(truth * k_ + p);
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < k_; ++t) s += counts_.at(t * k_ + predicted);
  return s;
}

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels,
                                 std::size_t num_classes) {
  if (predictions.size() != labels.size()) {
    throw ValidationError("confusion_matrix: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || predictions[i] < 0) {
      throw ValidationError("negative class label at position " + std::to_string(i));
    }
    cm.add(static_cast<std::size_t>(labels[i]), static_cast<std::size_t>(predictions[i]));
  }
  return cm;
}

namespace {

void require_nonempty(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("metrics are undefined for an empty confusion matrix");
}

double ratio_or_zero(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double mean(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

double accuracy(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  return static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
}

ClassAverage precision(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  ClassAverage out;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) out.per_class.push_back(ratio_or_zero(cm.count(c, c), cm.column_sum(c)));
  out.macro = mean(out.per_class);
  return out;
}

ClassAverage recall(const ConfusionMatrix& cm) {
  require_nonempty(cm);
  ClassAverage out;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) out.per_class.push_back(ratio_or_zero(cm.count(c, c), cm.row_sum(c)));
  out.macro = mean(out.per_class);
  return out;
}

ClassAverage f1(const ConfusionMatrix& cm) {
  const ClassAverage p = precision(cm);
  const ClassAverage r = recall(cm);
  ClassAverage out;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    const double s = p.per_class[c] + r.per_class[c];
    out.per_class.push_back(s == 0.0 ? 0.0 : 2.0 * p.per_class[c] * r.per_class[c] / s);
  }
  out.macro = mean(out.per_class);
  return out;
}

MetricsReport make_report(const ConfusionMatrix& cm) {
  MetricsReport report;
  report.confusion = cm;
  report.samples = cm.total();
  report.accuracy = accuracy(cm);
  report.precision = precision(cm);
  report.recall = recall(cm);
  report.f1 = f1(cm);
  report.macro_precision = report.precision.macro;
  report.macro_recall = report.recall.macro;
  report.macro_f1 = report.f1.macro;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    if (cm.column_sum(c) == 0) report.undefined_precision.push_back(c);
    if (cm.row_sum(c) == 0) report.undefined_recall.push_back(c);
  }
  return report;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["samples"] = report.samples;
  j["accuracy"] = report.accuracy;
  j["precision"] = report.macro_precision;
  j["recall"] = report.macro_recall;
  j["f1"] = report.macro_f1;
  j["per_class"] = nlohmann::json::array();
  for (std::size_t c = 0; c < report.confusion.num_classes(); ++c) {
    j["per_class"].push_back({{"class", c},
                              {"precision", report.precision.per_class[c]},
                              {"recall", report.recall.per_class[c]},
                              {"f1", report.f1.per_class[c]},
                              {"support", report.confusion.row_sum(c)}});
  }
  j["undefined_precision"] = report.undefined_precision;
  j["undefined_recall"] = report.undefined_recall;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < report.confusion.num_classes(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < report.confusion.num_classes(); ++p) row.push_back(report.confusion.count(t, p));
    rows.push_back(std::move(row));
  }
  j["confusion"] = std::move(rows);
  return j;
}

std::string to_table(const MetricsReport& report) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-7s %10s %10s %10s %9s\n", "class", "precision", "recall", "f1", "support");
  out += line;
  for (std::size_t c = 0; c < report.confusion.num_classes(); ++c) {
    const bool flagged = std::find(report.undefined_precision.begin(), report.undefined_precision.end(), c) !=
                         report.undefined_precision.end();
    std::snprintf(line, sizeof(line), "%-7zu %10.4f %10.4f %10.4f %9llu%s\n", c, report.precision.per_class[c],
                  report.recall.per_class[c], report.f1.per_class[c],
                  static_cast<unsigned long long>(report.confusion.row_sum(c)), flagged ? "  (no predictions)" : "");
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-7s %10.4f %10.4f %10.4f %9llu\n", "macro", report.macro_precision,
                report.macro_recall, report.macro_f1, static_cast<unsigned long long>(report.samples));
  out += line;
  std::snprintf(line, sizeof(line), "accuracy %.4f\n", report.accuracy);
  out += line;
  return out;
}

Evaluation evaluate_detailed(const Network& net, const Dataset& ds, std::size_t chunk) {
  const Shape& out_shape = net.output_shape();
  if (out_shape.size() != 1) throw ConfigError("evaluation needs a vector-output network, got " + to_string(out_shape));
  const std::size_t k = out_shape[0];
  if (ds.size() == 0) throw ValidationError("cannot evaluate on an empty dataset");
  if (element_count(net.input_shape()) != ds.sample_size()) {
    throw ConfigError("network input " + to_string(net.input_shape()) + " does not match samples " +
                      to_string(ds.sample_shape));
  }
  for (int label : ds.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw ConfigError("dataset label " + std::to_string(label) + " exceeds the network's " + std::to_string(k) +
                        " outputs");
    }
  }
  Evaluation eval;
  eval.predictions.reserve(ds.size());
  double loss_sum = 0.0;
  std::vector<std::size_t> indices;
  for (std::size_t begin = 0; begin < ds.size(); begin += chunk) {
    const std::size_t end = std::min(ds.size(), begin + chunk);
    indices.resize(end - begin);
    std::iota(indices.begin(), indices.end(), begin);
    const Tensor out = predict(net, ds.batch(indices, net.input_shape()));
    for (std::size_t r = 0; r < indices.size(); ++r) {
      const double* row = out.raw() + r * k;
      const auto best = static_cast<int>(std::max_element(row, row + k) - row);
      eval.predictions.push_back(best);
      const int label = ds.labels[indices[r]];
      loss_sum -= std::log(std::max(row[label], 1e-12));
    }
  }
  eval.mean_loss = loss_sum / static_cast<double>(ds.size());
  eval.report = make_report(confusion_matrix(eval.predictions, ds.labels, k));
  return eval;
}

MetricsReport evaluate(const Network& net, const Dataset& ds) {
  return evaluate_detailed(net, ds).report;
}

}  // namespace lw
