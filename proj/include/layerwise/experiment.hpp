#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "layerwise/data.hpp"
#include "layerwise/metrics.hpp"
#include "layerwise/nn.hpp"
#include "layerwise/trainers.hpp"

namespace lw {

inline constexpr int kSummarySchemaVersion = 1;
inline constexpr const char* kDataDirEnv = "LAYERWISE_DATA_DIR";

/// Everything needed to reproduce one run. Serialized as a flat JSON object.
struct ExperimentConfig {
  std::string dataset = "mnist";  ///< mnist | cifar10
  std::string data_dir;
  std::string model = "mlp:784,128,10";  ///< cnn | mlp:<d0>,<d1>,...
  std::string hidden_activation = "relu";
  InitScheme init = InitScheme::kAuto;
  Rule rule = Rule::kLayerwiseInstant;
  SnapshotMode snapshot = SnapshotMode::kPostUpdate;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  std::vector<double> layer_lr_scale;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  std::size_t patience = 10;
  std::size_t max_batches = 0;
  /// "test" selects on the official test split; "split" carves a validation
  /// set out of the training pool with split_ratio.
  std::string validation = "test";
  double split_ratio = 0.8;
  std::size_t train_limit = 0;  ///< keep only the first n training samples; 0 keeps all
  std::size_t test_limit = 0;
  std::string out_dir = "runs/latest";

  /// Throws ConfigError on any invalid field.
  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys and wrongly typed values are ConfigErrors. Missing keys keep
  /// the defaults of `base`.
  static ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base);
  static ExperimentConfig from_json(const nlohmann::json& j) { return from_json(j, ExperimentConfig{}); }
};

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Data directory: explicit value, else $LAYERWISE_DATA_DIR, else "data".
std::filesystem::path resolve_data_dir(const std::string& configured);

struct ExperimentData {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Loads and normalizes the configured dataset and applies limits and the
/// validation protocol.
ExperimentData load_experiment_data(const ExperimentConfig& config);

Network build_model(const ExperimentConfig& config, const Shape& sample_shape, std::size_t num_classes = 10);
TrainerConfig trainer_config(const ExperimentConfig& config);

/// CSV with header epoch,train_loss,val_loss,val_accuracy,err_norm_l<i>...,wall_time_s.
std::string history_csv(const std::vector<EpochRecord>& history, const Network& net);
/// Loss-versus-epoch chart with train and validation series.
std::string loss_svg(const std::vector<EpochRecord>& history, const std::string& title);

struct RunArtifacts {
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::filesystem::path checkpoint;
  std::filesystem::path svg;
  MetricsReport test_report;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

/// Trains, evaluates the best model on the test set and writes history.csv,
/// summary.json, best.ckpt and loss.svg under config.out_dir.
RunArtifacts run_train(const ExperimentConfig& config, std::ostream& log);

/// Evaluates a checkpoint on the configured test set; returns the report.
MetricsReport run_evaluate(const ExperimentConfig& config, const std::filesystem::path& checkpoint, std::ostream& log);

struct CompareRow {
  std::string method;
  std::vector<MetricsReport> reports;  ///< one per seed
};

/// Runs every config once per seed (out_dir/<method>/seed<k>) and writes
/// comparison.csv and comparison.txt to out_dir. Configs must share dataset
/// and model.
std::vector<CompareRow> run_compare(const std::vector<ExperimentConfig>& configs, const std::vector<std::uint64_t>& seeds,
                                    const std::filesystem::path& out_dir, std::ostream& log);

std::string comparison_table(const std::vector<CompareRow>& rows);
std::string comparison_csv(const std::vector<CompareRow>& rows);

/// Checks backprop gradients of the configured model against finite
/// differences on a small seeded batch. `corrupt` perturbs one analytic
/// gradient first. Returns 0 on pass.
int run_gradcheck(const ExperimentConfig& config, std::size_t samples, bool corrupt, std::ostream& log);

}  // namespace lw
