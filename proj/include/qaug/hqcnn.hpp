#pragma once

// Hybrid classifier: CNN front-end -> pi*tanh squash -> Ry angle encoding ->
// variational circuit -> per-qubit <Z> -> linear readout -> softmax.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"
#include "qaug/dataset.hpp"
#include "qaug/nn.hpp"
#include "qaug/vqc.hpp"

namespace qaug {

struct HqcnnConfig {
  int image_size = 8;
  int conv_channels = 4;
  int n_qubits = 4;
  int vqc_depth = 2;
  Entangler entangler = Entangler::Ring;
  int n_classes = 3;
};

struct HqcnnModel {
  HqcnnConfig config;
  Network cnn;      // Conv3x3 -> MaxPool2x2 -> ReLU -> Linear(n_qubits)
  ParamCircuit vqc{1};
  Eigen::VectorXd theta;
  std::vector<int> measured;
  Network readout;  // Linear(|measured| -> n_classes)
};

HqcnnModel make_hqcnn(const HqcnnConfig& config, std::uint64_t seed);

struct Prediction {
  Eigen::VectorXd probs;
  int label = 0;
  double confidence = 0.0;  // probability of the predicted label
};

/// Class probabilities for one [H, W] image.
Eigen::VectorXd hqcnn_forward(const HqcnnModel& model, const Tensor& image);
Prediction hqcnn_predict(const HqcnnModel& model, const Tensor& image);

/// Flat [cnn, theta, readout].
Eigen::VectorXd hqcnn_parameters(const HqcnnModel& model);
void set_hqcnn_parameters(HqcnnModel& model, const Eigen::VectorXd& flat);

struct HqcnnGradients {
  double loss = 0.0;  // mean cross-entropy over the batch
  Eigen::VectorXd cnn;
  Eigen::VectorXd theta;
  Eigen::VectorXd readout;

  Eigen::VectorXd flat() const;
};

/// Mean cross-entropy and its gradient. Circuit gradients use the shift rule,
/// and the CNN receives the encoding-angle gradient through the tanh squash.
HqcnnGradients hqcnn_loss_grad(const HqcnnModel& model, const std::vector<Tensor>& images,
                               const std::vector<int>& labels);
/// Loss only; used by finite-difference checks.
double hqcnn_loss(const HqcnnModel& model, const std::vector<Tensor>& images, const std::vector<int>& labels);

struct HqcnnTrainConfig {
  int epochs = 30;
  int batch_size = 10;
  OptimKind optimizer = OptimKind::Adam;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;            // mean minibatch loss over the epoch
  double train_accuracy = 0.0;  // evaluated after the epoch's updates
};

struct HqcnnTrainResult {
  HqcnnModel model;
  std::vector<EpochStats> history;
  OptimState optimizer;
};

using EpochCallback = std::function<void(const EpochStats&, const HqcnnModel&)>;

HqcnnTrainResult hqcnn_train(HqcnnModel model, const LabeledDataset& train_set, const HqcnnTrainConfig& config,
                             const EpochCallback& on_epoch = {});

struct EvalReport {
  std::vector<std::optional<double>> per_class_accuracy;  // empty when the class is absent
  std::vector<std::optional<double>> per_class_confidence;
  std::vector<std::size_t> per_class_count;
  double average_accuracy = 0.0;    // mean over present classes
  double average_confidence = 0.0;  // mean over present classes
  double overall_accuracy = 0.0;    // correct / total
  Eigen::MatrixXi confusion;        // rows: true class, columns: predicted
};

EvalReport evaluate_predictions(const std::vector<int>& truth, const std::vector<Prediction>& predictions,
                                int n_classes);
EvalReport hqcnn_evaluate(const HqcnnModel& model, const LabeledDataset& test_set);

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const HqcnnConfig& config);
HqcnnConfig hqcnn_config_from_json(const nlohmann::json& j);

/// Checkpoint: network blocks plus circuit layout and theta.
nlohmann::json hqcnn_checkpoint(const HqcnnModel& model, const OptimState* optimizer, std::uint64_t seed,
                                std::int64_t step);
HqcnnModel hqcnn_from_checkpoint(const nlohmann::json& j);

}  // namespace qaug
