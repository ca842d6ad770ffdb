#pragma once

// Experiment orchestration behind the command-line tool: configuration,
// desk dataset preparation, and the train / augment / compare / evaluate
// commands. Every command writes JSON that embeds the resolved config and
// git-style hashes of its inputs.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qaug/augment.hpp"
#include "qaug/dataset.hpp"
#include "qaug/hqcnn.hpp"
#include "qaug/qgan.hpp"

namespace qaug {

struct DataPaths {
  std::string train_images = "data/mnist5k-train-images-idx3-ubyte.gz";
  std::string train_labels = "data/mnist5k-train-labels-idx1-ubyte.gz";
  std::string test_images = "data/mnist5k-test-images-idx3-ubyte.gz";
  std::string test_labels = "data/mnist5k-test-labels-idx1-ubyte.gz";
};

enum class GeneratorKind { Qgan, Cgan };

struct ExperimentConfig {
  DataPaths data;
  std::vector<int> classes{0, 1, 2};
  std::size_t per_class = 100;
  std::size_t test_per_class = 100;
  int weak_class = -1;         // when >= 0, that class keeps only weak_count training samples
  std::size_t weak_count = 0;
  int image_size = 8;

  HqcnnConfig hqcnn;  // image_size and n_classes are derived from the fields above
  HqcnnTrainConfig train;
  QganConfig qgan;
  CganConfig cgan;
  GanTrainConfig gan;
  GeneratorKind generator = GeneratorKind::Qgan;
  AugmentConfig augment;
  std::vector<std::string> strategies{"general", "custom", "classic"};
  /// warm: strategies (and the no-augmentation row) continue training the baseline model;
  /// fresh: every row trains a new model from the same initialization.
  bool warm_retrain = true;

  std::vector<std::uint64_t> seeds{0};
  std::string out = "out";

  /// Syncs derived fields and throws ConfigError on invalid values.
  void resolve();
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown top-level keys are rejected.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// Command-line overrides; flags win over the config file.
struct CliOverrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> epochs;
};

enum class EpochTarget { Classifier, Generator };

ExperimentConfig load_experiment_config(const CliOverrides& overrides, EpochTarget epochs_apply_to);

/// Upper bound on worker threads: QAUG_THREADS when set, else hardware concurrency.
unsigned thread_cap();

struct DeskData {
  LabeledDataset train;
  LabeledDataset test;
  nlohmann::json manifest;  // subset provenance: source hashes, seeds, counts
};

/// Seeded class subsets of the configured IDX files, downscaled, with the optional weak class cut.
DeskData load_desk_data(const ExperimentConfig& config, std::uint64_t seed);

/// Resolved config plus git blob hashes of every input file and one aggregate hash.
nlohmann::json provenance(const ExperimentConfig& config, const std::map<std::string, std::string>& input_files);

/// One generator per class; budgets follow the conditioning weights.
std::vector<SampleSource> train_generators(const ExperimentConfig& config, const LabeledDataset& train,
                                           const ClassConditioning& conditioning, std::uint64_t seed,
                                           std::vector<GanHistory>* histories = nullptr,
                                           nlohmann::json* checkpoint = nullptr);
std::vector<SampleSource> load_generators(const std::string& path);

struct CurvePoint {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainedClassifier {
  HqcnnModel model;
  OptimState optimizer;
  std::vector<CurvePoint> curve;
  EvalReport report;
};

/// HQCNN trained on `train` and evaluated on `test` after every epoch. Starts from `init` when
/// given, otherwise from a fresh model whose initialization seed derives from `seed`.
TrainedClassifier train_classifier(const ExperimentConfig& config, const LabeledDataset& train,
                                   const LabeledDataset& test, std::uint64_t seed,
                                   const HqcnnModel* init = nullptr);

std::string curve_csv(const std::vector<CurvePoint>& curve);

struct CompareResult {
  nlohmann::json summary;                   // comparison.json contents
  std::map<std::string, std::string> curves;  // strategy -> CSV text
};

/// Baseline plus each configured strategy over every seed.
CompareResult run_compare(const ExperimentConfig& config);
/// The comparison JSON without its timestamp; what the determinism hash covers.
nlohmann::json without_timestamp(const nlohmann::json& summary);

struct AugmentInputs {
  std::string strategy;
  std::optional<std::string> model_path;       // HQCNN checkpoint; trained in-process when absent
  std::optional<std::string> generators_path;  // generator checkpoint; trained in-process when absent
  std::optional<std::vector<std::int64_t>> error_counts;  // overrides the measured error profile
};

void cmd_train_hqcnn(const ExperimentConfig& config);
void cmd_train_gan(const ExperimentConfig& config, GeneratorKind kind);
void cmd_augment(const ExperimentConfig& config, const AugmentInputs& inputs);
void cmd_compare(const ExperimentConfig& config);
void cmd_evaluate(const ExperimentConfig& config, const std::string& model_path);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitRuntime = 4;

/// Runs body and maps library errors to exit codes, printing a diagnostic to err.
int run_guarded(const std::function<void()>& body, std::ostream& err);

}  // namespace qaug
