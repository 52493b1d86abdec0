#include "layerwise/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "layerwise/errors.hpp"

namespace lw {

double central_difference(const std::function<double(double)>& f, double x, double eps) {
  if (!(eps > 0.0)) throw ContractViolation("central_difference: eps must be positive");
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

namespace {

// ReLU on/off pattern and pooling winners, per layer.
struct Pattern {
  std::vector<std::vector<bool>> relu;
  std::vector<std::vector<std::size_t>> pool;

  bool same_from(const Pattern& other, std::size_t first) const {
    for (std::size_t l = first; l < relu.size(); ++l) {
      if (relu[l] != other.relu[l] || pool[l] != other.pool[l]) return false;
    }
    return true;
  }
};

Pattern pattern_of(const Network& net, const ForwardCache& cache) {
  Pattern p;
  p.relu.resize(net.depth());
  p.pool.resize(net.depth());
  for (std::size_t l = 0; l < net.depth(); ++l) {
    if (net.layer(l).activation == Activation::kReLU) {
      const Tensor& z = cache.pre[l];
      p.relu[l].resize(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) p.relu[l][i] = z[i] > 0.0;
    }
    if (net.layer(l).kind == LayerKind::kMaxPool2D) p.pool[l] = cache.pool[l].window_offset;
  }
  return p;
}

double probe_loss(const Network& net, const Tensor& inputs, const Tensor& target, Loss loss, Pattern* pattern) {
  const ForwardCache cache = forward_pass(net, inputs);
  if (pattern != nullptr) *pattern = pattern_of(net, cache);
  return output_error(net, cache, target, loss).loss;
}

}  // namespace

NumericGradients finite_difference_grads(const Network& net, const Tensor& inputs, const Tensor& target, Loss loss,
                                         double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ContractViolation("finite_difference_grads: eps must be positive");
  for (const Layer& layer : net.layers()) {
    if (!all_finite(layer.weights) || !all_finite(layer.bias)) {
      throw ContractViolation("finite_difference_grads: network parameters must be finite");
    }
  }

  Network probe = net;
  const ForwardCache base_cache = forward_pass(probe, inputs);
  const Pattern base = pattern_of(probe, base_cache);

  // Lowest layer index whose ReLU units sit near the kink; a parameter in
  // layer l is masked if any such unit lives in a layer >= l.
  std::size_t near_kink_top = 0;
  bool any_near_kink = false;
  for (std::size_t l = 0; l < probe.depth(); ++l) {
    if (probe.layer(l).activation != Activation::kReLU) continue;
    for (double z : base_cache.pre[l].data()) {
      if (std::abs(z) < 10.0 * eps) {
        near_kink_top = l;
        any_near_kink = true;
        break;
      }
    }
  }

  NumericGradients out;
  out.grads = Gradients::zeros_like(net);
  out.mask.weights.resize(net.depth());
  out.mask.biases.resize(net.depth());

  for (std::size_t l = 0; l < net.depth() && out.ok; ++l) {
    if (!net.layer(l).has_parameters()) continue;
    const bool layer_near_kink = any_near_kink && near_kink_top >= l;
    for (int which = 0; which < 2 && out.ok; ++which) {
      Tensor& grad = which == 0 ? out.grads.weights[l] : out.grads.biases[l];
      std::vector<bool>& mask = which == 0 ? out.mask.weights[l] : out.mask.biases[l];
      mask.assign(grad.size(), false);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        Layer& layer = probe.mutable_layer(l);
        double& slot = which == 0 ? layer.weights[i] : layer.bias[i];
        const double saved = slot;
        bool flipped = false;
        bool finite = true;
        const auto loss_at = [&](double value) {
          probe.mutable_layer(l);
          slot = value;
          Pattern seen;
          const double v = probe_loss(probe, inputs, target, loss, &seen);
          if (!seen.same_from(base, l)) flipped = true;
          if (!std::isfinite(v)) finite = false;
          return v;
        };
        grad[i] = central_difference(loss_at, saved, eps);
        slot = saved;
        if (!finite) {
          out.ok = false;
          out.failure = "non-finite loss while probing layer " + std::to_string(l) + (which == 0 ? " weight " : " bias ") +
                        std::to_string(i);
          break;
        }
        if (layer_near_kink || flipped) {
          mask[i] = true;
          ++out.mask.excluded;
        }
      }
    }
  }
  return out;
}

std::string TensorCheck::name() const {
  return "layer" + std::to_string(layer) + (bias ? ".bias" : ".weights");
}

double GradCheckReport::max_rel() const {
  double m = 0.0;
  for (const TensorCheck& t : tensors) m = std::max(m, t.max_rel);
  return m;
}

double GradCheckReport::max_abs() const {
  double m = 0.0;
  for (const TensorCheck& t : tensors) m = std::max(m, t.max_abs);
  return m;
}

namespace {

void require_same_structure(const Gradients& a, const Gradients& b) {
  if (a.weights.size() != b.weights.size() || a.biases.size() != b.biases.size() ||
      a.weights.size() != a.biases.size()) {
    throw ContractViolation("gradient sets cover different numbers of layers");
  }
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l].shape() != b.weights[l].shape() || a.biases[l].shape() != b.biases[l].shape()) {
      throw ContractViolation("gradient shapes differ at layer " + std::to_string(l));
    }
  }
}

TensorCheck check_tensor(const Tensor& a, const Tensor& n, const std::vector<bool>* mask, double rtol, double atol) {
  TensorCheck t;
  t.elements = a.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (mask != nullptr && i < mask->size() && (*mask)[i]) continue;
    ++t.compared;
    const double diff = std::abs(a[i] - n[i]);
    if (!(diff <= atol + rtol * std::abs(n[i]))) t.pass = false;
    if (diff > t.max_abs || std::isnan(diff)) {
      t.max_abs = diff;
      t.worst_index = i;
    }
    const double scale = std::max(std::abs(a[i]), std::abs(n[i]));
    if (scale >= 1e-6) t.max_rel = std::max(t.max_rel, diff / scale);
  }
  return t;
}

}  // namespace

GradCheckReport compare_grads(const Gradients& analytic, const Gradients& numeric, double rtol, double atol,
                              const ExclusionMask* mask) {
  require_same_structure(analytic, numeric);
  GradCheckReport report;
  report.rtol = rtol;
  report.atol = atol;
  if (mask != nullptr) report.excluded = mask->excluded;
  for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
    if (analytic.weights[l].empty() && analytic.biases[l].empty()) continue;
    for (int which = 0; which < 2; ++which) {
      const bool bias = which == 1;
      const std::vector<bool>* m = nullptr;
      if (mask != nullptr) {
        const auto& masks = bias ? mask->biases : mask->weights;
        if (l < masks.size()) m = &masks[l];
      }
      TensorCheck t = check_tensor(bias ? analytic.biases[l] : analytic.weights[l],
                                   bias ? numeric.biases[l] : numeric.weights[l], m, rtol, atol);
      t.layer = l;
      t.bias = bias;
      report.pass = report.pass && t.pass;
      report.tensors.push_back(t);
    }
  }
  return report;
}

std::string to_table(const GradCheckReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %9s %9s %12s %12s %8s  %s\n", "tensor", "elements", "compared", "max_abs",
                "max_rel", "worst", "status");
  out += line;
  for (const TensorCheck& t : report.tensors) {
    std::snprintf(line, sizeof(line), "%-16s %9zu %9zu %12.4e %12.4e %8zu  %s\n", t.name().c_str(), t.elements,
                  t.compared, t.max_abs, t.max_rel, t.worst_index, t.pass ? "ok" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof(line), "rtol %.1e  atol %.1e  excluded %zu  max_rel %.4e  -> %s\n", report.rtol,
                report.atol, report.excluded, report.max_rel(), report.pass ? "PASS" : "FAIL");
  out += line;
  if (!report.failure.empty()) out += "oracle failure: " + report.failure + "\n";
  return out;
}

std::vector<double> alignment_angle(const Gradients& a, const Gradients& b) {
  require_same_structure(a, b);
  std::vector<double> angles;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l].empty() && a.biases[l].empty()) continue;
    const double ab = dot(a.weights[l], b.weights[l]) + dot(a.biases[l], b.biases[l]);
    const double aa = dot(a.weights[l], a.weights[l]) + dot(a.biases[l], a.biases[l]);
    const double bb = dot(b.weights[l], b.weights[l]) + dot(b.biases[l], b.biases[l]);
    if (aa == 0.0 || bb == 0.0) {
      throw std::domain_error("alignment angle undefined: zero gradient at layer " + std::to_string(l));
    }
    const double c = std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
    angles.push_back(std::acos(c) * 180.0 / std::numbers::pi);
  }
  return angles;
}

}  // namespace lw
