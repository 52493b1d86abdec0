// layerwise: train, evaluate, gradient-check and compare learning rules.
//
// Settings come from an optional JSON --config file; command-line flags
// override file values, and anything unset keeps its built-in default.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layerwise/errors.hpp"
#include "layerwise/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> dataset, model, rule, mode, optimizer, hidden, validation, out, data_dir, init;
  std::optional<double> lr, split_ratio;
  std::optional<std::size_t> batch_size, epochs, patience, max_batches, train_limit, test_limit;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Overrides& o, bool with_config = true) {
  if (with_config) app->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--dataset", o.dataset, "mnist or cifar10");
  app->add_option("--model", o.model, "cnn or mlp:<d0>,<d1>,...");
  app->add_option("--rule", o.rule, "bp, dfa or layerwise");
  app->add_option("--mode", o.mode, "pre or post (layerwise snapshot mode)");
  app->add_option("--optimizer", o.optimizer, "adam or sgd");
  app->add_option("--hidden", o.hidden, "hidden activation for mlp models");
  app->add_option("--init", o.init, "auto, he or xavier");
  app->add_option("--lr", o.lr, "learning rate");
  app->add_option("--batch-size", o.batch_size, "mini-batch size");
  app->add_option("--epochs", o.epochs, "maximum epochs");
  app->add_option("--patience", o.patience, "early-stopping patience in epochs (0 disables)");
  app->add_option("--max-batches", o.max_batches, "cap on batches per epoch (0 = all)");
  app->add_option("--train-limit", o.train_limit, "use only the first n training samples");
  app->add_option("--test-limit", o.test_limit, "use only the first n test samples");
  app->add_option("--validation", o.validation, "test or split");
  app->add_option("--split-ratio", o.split_ratio, "training fraction when --validation split");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--data-dir", o.data_dir, std::string("data directory (default $") + lw::kDataDirEnv + " or ./data)");
}

lw::ExperimentConfig resolve(const Overrides& o, const std::string& config_path, lw::ExperimentConfig base = {}) {
  lw::ExperimentConfig c = config_path.empty() ? base : lw::load_config(config_path, base);
  if (o.dataset) c.dataset = *o.dataset;
  if (o.model) c.model = *o.model;
  if (o.rule) c.rule = lw::parse_rule(*o.rule);
  if (o.mode) c.snapshot = lw::parse_snapshot_mode(*o.mode);
  if (o.optimizer) c.optimizer = lw::parse_optimizer(*o.optimizer);
  if (o.hidden) c.hidden_activation = *o.hidden;
  if (o.init) c.init = lw::parse_init_scheme(*o.init);
  if (o.lr) c.learning_rate = *o.lr;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.patience) c.patience = *o.patience;
  if (o.max_batches) c.max_batches = *o.max_batches;
  if (o.train_limit) c.train_limit = *o.train_limit;
  if (o.test_limit) c.test_limit = *o.test_limit;
  if (o.validation) c.validation = *o.validation;
  if (o.split_ratio) c.split_ratio = *o.split_ratio;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.data_dir) c.data_dir = *o.data_dir;
  c.validate();
  return c;
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      seeds.push_back(std::stoull(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw lw::ConfigError("bad seed '" + item + "'");
    }
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise instant update, backprop and DFA training"};
  app.require_subcommand(1);

  Overrides train_o, eval_o, grad_o, cmp_o;
  auto* train_cmd = app.add_subcommand("train", "train one model and write run artifacts");
  add_common(train_cmd, train_o);

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  add_common(eval_cmd, eval_o);
  std::string checkpoint;
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file (default <out>/best.ckpt)");

  auto* grad_cmd = app.add_subcommand("gradcheck", "compare backprop gradients with finite differences");
  add_common(grad_cmd, grad_o);
  std::size_t grad_samples = 4;
  bool corrupt = false;
  grad_cmd->add_option("--samples", grad_samples, "batch size of the probe batch");
  grad_cmd->add_flag("--corrupt", corrupt, "perturb one analytic gradient (self-test of the checker)");

  auto* cmp_cmd = app.add_subcommand("compare", "train several rules and tabulate test metrics");
  add_common(cmp_cmd, cmp_o, false);
  std::vector<std::string> cmp_configs;
  std::string cmp_rules = "bp,dfa,layerwise";
  std::string cmp_seeds = "0";
  cmp_cmd->add_option("--config", cmp_configs, "one JSON config per method (repeatable)")->check(CLI::ExistingFile);
  cmp_cmd->add_option("--rules", cmp_rules, "rules to compare when no --config is given; layerwise:pre selects pre mode");
  cmp_cmd->add_option("--seeds", cmp_seeds, "comma-separated seeds; metrics report mean +- sd");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      lw::run_train(resolve(train_o, train_o.config), std::cout);
    } else if (*eval_cmd) {
      const lw::ExperimentConfig c = resolve(eval_o, eval_o.config);
      lw::run_evaluate(c, checkpoint.empty() ? std::filesystem::path(c.out_dir) / "best.ckpt" : std::filesystem::path(checkpoint), std::cout);
    } else if (*grad_cmd) {
      lw::ExperimentConfig base;
      base.model = "mlp:4,5,3";
      return lw::run_gradcheck(resolve(grad_o, grad_o.config, base), grad_samples, corrupt, std::cout);
    } else if (*cmp_cmd) {
      std::vector<lw::ExperimentConfig> configs;
      if (!cmp_configs.empty()) {
        for (const std::string& path : cmp_configs) configs.push_back(resolve(cmp_o, path));
      } else {
        std::stringstream ss(cmp_rules);
        std::string item;
        while (std::getline(ss, item, ',')) {
          lw::ExperimentConfig c = resolve(cmp_o, "");
          const auto colon = item.find(':');
          c.rule = lw::parse_rule(item.substr(0, colon));
          if (colon != std::string::npos) c.snapshot = lw::parse_snapshot_mode(item.substr(colon + 1));
          configs.push_back(c);
        }
      }
      const std::string out = cmp_o.out ? *cmp_o.out : "runs/compare";
      lw::run_compare(configs, parse_seeds(cmp_seeds), out, std::cout);
    }
  } catch (const lw::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const lw::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
