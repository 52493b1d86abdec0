#include "layerwise/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "layerwise/checkpoint.hpp"
#include "layerwise/errors.hpp"
#include "layerwise/gradcheck.hpp"
#include "layerwise/io.hpp"

namespace lw {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (dataset != "mnist" && dataset != "cifar10") {
    throw ConfigError("dataset must be mnist or cifar10, got '" + dataset + "'");
  }
  if (model != "cnn" && model.rfind("mlp:", 0) != 0) {
    throw ConfigError("model must be cnn or mlp:<dims>, got '" + model + "'");
  }
  const Activation hidden = parse_activation(hidden_activation);
  if (hidden == Activation::kSoftmax) throw ConfigError("hidden_activation cannot be softmax");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("lr must be a positive number");
  for (double s : layer_lr_scale) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("layer_lr_scale entries must be finite and >= 0");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (validation != "test" && validation != "split") {
    throw ConfigError("validation must be test or split, got '" + validation + "'");
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must lie in (0, 1)");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

json ExperimentConfig::to_json() const {
  return json{{"dataset", dataset},
              {"data_dir", data_dir},
              {"model", model},
              {"hidden_activation", hidden_activation},
              {"init", std::string(to_string(init))},
              {"rule", std::string(to_string(rule))},
              {"mode", std::string(to_string(snapshot))},
              {"optimizer", std::string(to_string(optimizer))},
              {"lr", learning_rate},
              {"layer_lr_scale", layer_lr_scale},
              {"batch_size", batch_size},
              {"epochs", epochs},
              {"seed", seed},
              {"patience", patience},
              {"max_batches", max_batches},
              {"validation", validation},
              {"split_ratio", split_ratio},
              {"train_limit", train_limit},
              {"test_limit", test_limit},
              {"out_dir", out_dir}};
}

namespace {

const json& typed(const json& value, const std::string& key, json::value_t want) {
  const bool ok = want == json::value_t::number_float ? value.is_number()
                  : want == json::value_t::number_unsigned
                      ? value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0)
                      : value.type() == want;
  if (!ok) throw ConfigError("config key '" + key + "' has the wrong type");
  return value;
}

std::string get_string(const json& v, const std::string& key) {
  return typed(v, key, json::value_t::string).get<std::string>();
}

std::size_t get_count(const json& v, const std::string& key) {
  return typed(v, key, json::value_t::number_unsigned).get<std::size_t>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, ExperimentConfig base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c = std::move(base);
  for (const auto& [key, v] : j.items()) {
    if (key == "dataset") c.dataset = get_string(v, key);
    else if (key == "data_dir") c.data_dir = get_string(v, key);
    else if (key == "model") c.model = get_string(v, key);
    else if (key == "hidden_activation") c.hidden_activation = get_string(v, key);
    else if (key == "init") c.init = parse_init_scheme(get_string(v, key));
    else if (key == "rule") c.rule = parse_rule(get_string(v, key));
    else if (key == "mode") c.snapshot = parse_snapshot_mode(get_string(v, key));
    else if (key == "optimizer") c.optimizer = parse_optimizer(get_string(v, key));
    else if (key == "lr") c.learning_rate = typed(v, key, json::value_t::number_float).get<double>();
    else if (key == "layer_lr_scale") {
      c.layer_lr_scale.clear();
      for (const json& s : typed(v, key, json::value_t::array)) {
        c.layer_lr_scale.push_back(typed(s, key, json::value_t::number_float).get<double>());
      }
    } else if (key == "batch_size") c.batch_size = get_count(v, key);
    else if (key == "epochs") c.epochs = get_count(v, key);
    else if (key == "seed") c.seed = typed(v, key, json::value_t::number_unsigned).get<std::uint64_t>();
    else if (key == "patience") c.patience = get_count(v, key);
    else if (key == "max_batches") c.max_batches = get_count(v, key);
    else if (key == "validation") c.validation = get_string(v, key);
    else if (key == "split_ratio") c.split_ratio = typed(v, key, json::value_t::number_float).get<double>();
    else if (key == "train_limit") c.train_limit = get_count(v, key);
    else if (key == "test_limit") c.test_limit = get_count(v, key);
    else if (key == "out_dir") c.out_dir = get_string(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path, ExperimentConfig base) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j, std::move(base));
}

fs::path resolve_data_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env != '\0') return env;
  return "data";
}

// ---------------------------------------------------------------------------
// Data and model

namespace {

fs::path require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw ConfigError("missing data file " + p.string());
  return p;
}

Dataset limit(Dataset ds, std::size_t n) {
  if (n == 0 || n >= ds.size()) return ds;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return ds.subset(idx);
}

std::vector<std::size_t> parse_dims(const std::string& spec) {
  std::vector<std::size_t> dims;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || v == 0) throw ConfigError("bad mlp dimension '" + item + "' in " + spec);
    dims.push_back(static_cast<std::size_t>(v));
  }
  if (dims.size() < 2) throw ConfigError("mlp needs at least input and output dims: " + spec);
  return dims;
}

}  // namespace

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  config.validate();
  const fs::path dir = resolve_data_dir(config.data_dir);
  Dataset train, test;
  if (config.dataset == "mnist") {
    train = load_mnist_idx(require_file(dir / "train-images-idx3-ubyte"), require_file(dir / "train-labels-idx1-ubyte"));
    test = load_mnist_idx(require_file(dir / "t10k-images-idx3-ubyte"), require_file(dir / "t10k-labels-idx1-ubyte"));
  } else {
    const fs::path root = fs::is_directory(dir / "cifar-10-batches-bin") ? dir / "cifar-10-batches-bin" : dir;
    std::vector<fs::path> parts;
    for (int b = 1; b <= 5; ++b) {
      const fs::path p = root / ("data_batch_" + std::to_string(b) + ".bin");
      if (fs::is_regular_file(p)) parts.push_back(p);
    }
    if (parts.empty()) throw ConfigError("no data_batch_*.bin files under " + root.string());
    train = load_cifar10(parts);
    const fs::path test_path = require_file(root / "test_batch.bin");
    test = load_cifar10(std::span<const fs::path>(&test_path, 1));
  }
  ExperimentData data;
  data.train = normalize(limit(std::move(train), config.train_limit));
  data.test = normalize(limit(std::move(test), config.test_limit));
  if (config.validation == "split") {
    auto [fit, held_out] = split(data.train, config.split_ratio, config.seed);
    data.train = std::move(fit);
    data.validation = std::move(held_out);
  } else {
    data.validation = data.test;
  }
  return data;
}

Network build_model(const ExperimentConfig& config, const Shape& sample_shape, std::size_t num_classes) {
  if (config.model == "cnn") return build_cnn(sample_shape, num_classes, config.seed, config.init);
  if (config.model.rfind("mlp:", 0) != 0) throw ConfigError("unknown model '" + config.model + "'");
  const std::vector<std::size_t> dims = parse_dims(config.model.substr(4));
  if (dims.front() != element_count(sample_shape)) {
    throw ConfigError("mlp input " + std::to_string(dims.front()) + " does not match sample size " +
                      std::to_string(element_count(sample_shape)));
  }
  if (dims.back() != num_classes) {
    throw ConfigError("mlp output " + std::to_string(dims.back()) + " does not match " + std::to_string(num_classes) +
                      " classes");
  }
  return build_mlp(dims, parse_activation(config.hidden_activation), config.seed, config.init);
}

TrainerConfig trainer_config(const ExperimentConfig& config) {
  TrainerConfig t;
  t.rule = config.rule;
  t.snapshot = config.snapshot;
  t.optimizer = config.optimizer;
  t.learning_rate = config.learning_rate;
  t.layer_lr_scale = config.layer_lr_scale;
  t.batch_size = config.batch_size;
  t.epochs = config.epochs;
  t.seed = config.seed;
  t.patience = config.patience;
  t.max_batches_per_epoch = config.max_batches;
  return t;
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string history_csv(const std::vector<EpochRecord>& history, const Network& net) {
  std::string out = "epoch,train_loss,val_loss,val_accuracy";
  for (std::size_t l : net.parameterized_layers()) out += ",err_norm_l" + std::to_string(l);
  out += ",wall_time_s\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch) + "," + fmt(r.train_loss) + "," + fmt(r.val_loss) + "," + fmt(r.val_accuracy);
    for (double n : r.error_norms) out += "," + fmt(n);
    char wall[32];
    std::snprintf(wall, sizeof(wall), ",%.3f\n", r.wall_seconds);
    out += wall;
  }
  return out;
}

std::string loss_svg(const std::vector<EpochRecord>& history, const std::string& title) {
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;

  double lo = 0.0, hi = 1.0;
  if (!history.empty()) {
    lo = hi = history.front().train_loss;
    for (const EpochRecord& r : history) {
      lo = std::min({lo, r.train_loss, r.val_loss});
      hi = std::max({hi, r.train_loss, r.val_loss});
    }
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double max_epoch = history.empty() ? 1.0 : static_cast<double>(std::max<std::size_t>(history.back().epoch, 2));
  const auto x_of = [&](double epoch) { return kLeft + (epoch - 1.0) / (max_epoch - 1.0) * plot_w; };
  const auto y_of = [&](double v) { return kTop + (hi - v) / (hi - lo) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << y_of(v) + 4 << "\" text-anchor=\"end\">" << fmt_short(v)
        << "</text>\n";
  }
  svg << "<text x=\"" << kLeft << "\" y=\"" << kH - 28 << "\" text-anchor=\"middle\">1</text>\n";
  svg << "<text x=\"" << kLeft + plot_w << "\" y=\"" << kH - 28 << "\" text-anchor=\"middle\">"
      << static_cast<std::size_t>(max_epoch) << "</text>\n";
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">epoch</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 16 " << kTop + plot_h / 2
      << ")\" text-anchor=\"middle\">loss</text>\n";

  const struct {
    const char* name;
    const char* colour;
    double EpochRecord::*field;
  } series[] = {{"train loss", "#1f77b4", &EpochRecord::train_loss}, {"val loss", "#d62728", &EpochRecord::val_loss}};
  for (std::size_t s = 0; s < 2; ++s) {
    svg << "<polyline fill=\"none\" stroke=\"" << series[s].colour << "\" stroke-width=\"2\" points=\"";
    for (const EpochRecord& r : history) {
      svg << x_of(static_cast<double>(r.epoch)) << "," << y_of(r.*series[s].field) << " ";
    }
    svg << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(s);
    svg << "<line x1=\"" << kW - kRight + 15 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 40 << "\" y2=\"" << ly
        << "\" stroke=\"" << series[s].colour << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kW - kRight + 46 << "\" y=\"" << ly + 4 << "\">" << series[s].name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

RunArtifacts run_train(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const ExperimentData data = load_experiment_data(config);
  Network net = build_model(config, data.train.sample_shape);
  const TrainerConfig tc = trainer_config(config);
  tc.validate(net);

  log << "train: " << config.dataset << " " << config.model << " rule=" << to_string(config.rule);
  if (config.rule == Rule::kLayerwiseInstant) log << " mode=" << to_string(config.snapshot);
  log << " n_train=" << data.train.size() << " n_val=" << data.validation.size() << " seed=" << config.seed << "\n";

  TrainObserver observer;
  observer.on_epoch = [&log](const EpochRecord& r) {
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %3zu  train_loss %.5f  val_loss %.5f  val_acc %.4f  (%.1fs)\n", r.epoch,
                  r.train_loss, r.val_loss, r.val_accuracy, r.wall_seconds);
    log << line << std::flush;
  };
  const TrainingRun run = train(net, data.train, data.validation, tc, observer);

  RunArtifacts art;
  const fs::path out = config.out_dir;
  art.csv = out / "history.csv";
  art.summary = out / "summary.json";
  art.checkpoint = out / "best.ckpt";
  art.svg = out / "loss.svg";
  art.best_epoch = run.best_epoch;
  art.epochs_run = run.history.size();
  art.test_report = evaluate(run.best, data.test);

  json summary;
  summary["schema_version"] = kSummarySchemaVersion;
  summary["config"] = config.to_json();
  summary["seed"] = config.seed;
  summary["best_epoch"] = run.best_epoch;
  summary["best_val_accuracy"] = run.best_val_accuracy;
  summary["epochs_run"] = run.history.size();
  summary["stopped_early"] = run.stopped_early;
  summary["parameters"] = net.parameter_count();
  summary["samples"] = {{"train", data.train.size()}, {"validation", data.validation.size()}, {"test", data.test.size()}};
  summary["metrics"] = to_json(art.test_report);
  if (!run.history.empty()) {
    const EpochRecord& last = run.history.back();
    summary["final_epoch"] = {{"epoch", last.epoch},
                              {"train_loss", last.train_loss},
                              {"val_loss", last.val_loss},
                              {"val_accuracy", last.val_accuracy}};
  }

  write_file_atomic(art.csv, history_csv(run.history, net));
  save_checkpoint(run.best, art.checkpoint);
  write_file_atomic(art.svg, loss_svg(run.history, config.model + " / " + std::string(to_string(config.rule))));
  write_file_atomic(art.summary, summary.dump(2) + "\n");

  char line[200];
  std::snprintf(line, sizeof(line), "test (best epoch %zu): accuracy %.4f  precision %.4f  recall %.4f  f1 %.4f\n",
                run.best_epoch, art.test_report.accuracy, art.test_report.macro_precision,
                art.test_report.macro_recall, art.test_report.macro_f1);
  log << line << "artifacts in " << out.string() << "\n";
  return art;
}

MetricsReport run_evaluate(const ExperimentConfig& config, const fs::path& checkpoint, std::ostream& log) {
  const ExperimentData data = load_experiment_data(config);
  const Network net = load_checkpoint(checkpoint);
  const MetricsReport report = evaluate(net, data.test);
  log << to_table(report);
  return report;
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

std::string method_name(const ExperimentConfig& c) {
  if (c.rule == Rule::kLayerwiseInstant) return "layerwise-" + std::string(to_string(c.snapshot));
  return std::string(to_string(c.rule));
}

struct Spread {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Spread spread(const std::vector<double>& v) {
  Spread s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::vector<double> column(const CompareRow& row, double MetricsReport::*field) {
  std::vector<double> v;
  for (const MetricsReport& r : row.reports) v.push_back(r.*field);
  return v;
}

constexpr struct {
  const char* name;
  double MetricsReport::*field;
} kColumns[] = {{"accuracy", &MetricsReport::accuracy},
                {"precision", &MetricsReport::macro_precision},
                {"recall", &MetricsReport::macro_recall},
                {"f1", &MetricsReport::macro_f1}};

}  // namespace

std::string comparison_table(const std::vector<CompareRow>& rows) {
  std::string out;
  char cell[64];
  std::snprintf(cell, sizeof(cell), "%-16s", "Method");
  out += cell;
  for (const auto& c : kColumns) {
    std::snprintf(cell, sizeof(cell), " %20s", c.name);
    out += cell;
  }
  out += "  seeds\n";
  for (const CompareRow& row : rows) {
    std::snprintf(cell, sizeof(cell), "%-16s", row.method.c_str());
    out += cell;
    for (const auto& c : kColumns) {
      const Spread s = spread(column(row, c.field));
      std::snprintf(cell, sizeof(cell), " %11.4f +- %.4f", s.mean, s.sd);
      out += cell;
    }
    out += "  " + std::to_string(row.reports.size()) + "\n";
  }
  return out;
}

std::string comparison_csv(const std::vector<CompareRow>& rows) {
  std::string out = "method,seeds";
  for (const auto& c : kColumns) {
    const std::string n = c.name;
    out += "," + n + "_mean," + n + "_sd," + n + "_min," + n + "_max";
  }
  out += "\n";
  for (const CompareRow& row : rows) {
    out += row.method + "," + std::to_string(row.reports.size());
    for (const auto& c : kColumns) {
      const Spread s = spread(column(row, c.field));
      out += "," + fmt(s.mean) + "," + fmt(s.sd) + "," + fmt(s.min) + "," + fmt(s.max);
    }
    out += "\n";
  }
  return out;
}

std::vector<CompareRow> run_compare(const std::vector<ExperimentConfig>& configs, const std::vector<std::uint64_t>& seeds,
                                    const fs::path& out_dir, std::ostream& log) {
  if (configs.size() < 2) throw ConfigError("compare needs at least two configurations");
  if (seeds.empty()) throw ConfigError("compare needs at least one seed");
  for (const ExperimentConfig& c : configs) {
    c.validate();
    if (c.dataset != configs.front().dataset || c.model != configs.front().model ||
        resolve_data_dir(c.data_dir) != resolve_data_dir(configs.front().data_dir)) {
      throw ConfigError("compare configurations must share dataset, data directory and model");
    }
  }
  std::set<std::string> names;
  std::vector<CompareRow> rows;
  for (const ExperimentConfig& base : configs) {
    CompareRow row;
    row.method = method_name(base);
    for (int k = 2; names.count(row.method) != 0; ++k) row.method = method_name(base) + "#" + std::to_string(k);
    names.insert(row.method);
    for (std::uint64_t seed : seeds) {
      ExperimentConfig c = base;
      c.seed = seed;
      c.out_dir = (out_dir / row.method / ("seed" + std::to_string(seed))).string();
      row.reports.push_back(run_train(c, log).test_report);
    }
    rows.push_back(std::move(row));
  }
  const std::string table = comparison_table(rows);
  write_file_atomic(out_dir / "comparison.csv", comparison_csv(rows));
  write_file_atomic(out_dir / "comparison.txt", table);
  log << table;
  return rows;
}

// ---------------------------------------------------------------------------
// Gradient check

int run_gradcheck(const ExperimentConfig& config, std::size_t samples, bool corrupt, std::ostream& log) {
  config.validate();
  if (samples == 0) throw ConfigError("gradcheck needs at least one sample");
  Shape sample_shape;
  std::size_t num_classes = 10;
  if (config.model == "cnn") {
    sample_shape = config.dataset == "cifar10" ? Shape{3, 32, 32} : Shape{1, 28, 28};
  } else {
    const std::vector<std::size_t> dims = parse_dims(config.model.substr(4));
    sample_shape = {dims.front()};
    num_classes = dims.back();
  }
  const Network net = build_model(config, sample_shape, num_classes);
  constexpr std::size_t kMaxParameters = 200000;
  if (net.parameter_count() > kMaxParameters) {
    throw ConfigError("gradcheck probes every parameter; " + std::to_string(net.parameter_count()) +
                      " parameters exceed the limit of " + std::to_string(kMaxParameters));
  }

  Rng rng(config.seed, Stream::kSynthetic);
  Shape batch_shape{samples};
  batch_shape.insert(batch_shape.end(), sample_shape.begin(), sample_shape.end());
  Tensor inputs(batch_shape);
  for (double& v : inputs.data()) v = rng.uniform01();
  std::vector<int> labels(samples);
  for (int& y : labels) y = static_cast<int>(rng.below(num_classes));
  std::vector<std::size_t> idx(samples);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Tensor target = one_hot(labels, idx, num_classes);

  const ForwardCache cache = forward_pass(net, inputs);
  SweepResult analytic = backprop_sweep(net, cache, target);
  if (corrupt) {
    const std::size_t first = net.parameterized_layers().front();
    analytic.grads.weights[first][0] += 1.0;
  }
  const NumericGradients numeric = finite_difference_grads(net, inputs, target);
  GradCheckReport report = compare_grads(analytic.grads, numeric.grads, 1e-4, 1e-7, &numeric.mask);
  if (!numeric.ok) {
    report.pass = false;
    report.failure = numeric.failure;
  }
  log << "gradcheck: " << config.model << " (" << to_string(parse_activation(config.hidden_activation))
      << " hidden), " << samples << " samples, eps 1e-5\n";
  log << to_table(report);
  return report.pass ? 0 : 1;
}

}  // namespace lw
