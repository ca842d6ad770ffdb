#pragma once

// Adversarial generators with a classical MLP discriminator.
//
//  * QganModel: noise -> Ry encoding -> variational circuit -> <Z> per qubit ->
//    classical post-net -> sigmoid pixels. Circuit parameters are trained with
//    the shift rule, the post-net with backprop.
//  * BornQgan: the circuit itself is the generator; samples are measured
//    bitstrings and gradients use shifted Born distributions.
//  * ClassicalGan: MLP generator baseline trained by the same loop.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "qaug/dataset.hpp"
#include "qaug/nn.hpp"
#include "qaug/vqc.hpp"

namespace qaug {

struct QganConfig {
  int n_qubits = 4;
  int depth = 2;
  Entangler entangler = Entangler::Ring;
  int post_hidden = 0;  // 0 means a single Linear layer
  std::vector<int> disc_hidden{32, 16};
  int image_size = 8;
};

struct QganModel {
  QganConfig config;
  ParamCircuit gen_vqc{1};
  Eigen::VectorXd lambda_q;
  Network gen_post;
  Network discriminator;
  int noise_dim = 0;
  Shape image_shape;
  bool trained = false;

  Eigen::Index generator_parameter_count() const { return lambda_q.size() + gen_post.parameter_count(); }
};

QganModel make_qgan(const QganConfig& config, std::uint64_t seed);

/// Sigmoid-headed MLP: inputs -> hidden... -> 1.
Network make_discriminator(int inputs, const std::vector<int>& hidden, Rng& rng);

/// Pixels in [0, 1], shaped like model.image_shape.
Tensor generator_forward(const QganModel& model, const Eigen::VectorXd& noise);

struct GanTrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double lr_g = 0.02;
  double lr_d = 2e-3;
  std::uint64_t seed = 0;
  int d_steps = 1;
  int steps_per_epoch = 10;  // 0: ceil(|train| / batch_size)
};

struct GanStep {
  std::int64_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double value = 0.0;  // minimax value V(D, G) on the step's discriminator batch
};

struct GanHistory {
  std::vector<GanStep> steps;
  std::int64_t generator_params = 0;
  std::int64_t discriminator_params = 0;
};

struct QganTrainResult {
  QganModel model;
  GanHistory history;
};

QganTrainResult train_qgan(QganModel model, const std::vector<Tensor>& train_images, const GanTrainConfig& config);

/// Generator loss gradient with respect to lambda_q on a frozen discriminator
/// (non-saturating loss, mean over the given noise batch).
Eigen::VectorXd qgan_circuit_grad(const QganModel& model, const std::vector<Eigen::VectorXd>& noises);
double qgan_generator_loss(const QganModel& model, const std::vector<Eigen::VectorXd>& noises);

/// Uniform noise in [-pi, pi)^dim.
Eigen::VectorXd draw_noise(int dim, Rng& rng);

/// n images from fresh noise; deterministic per seed.
std::vector<Tensor> generate_samples(const QganModel& model, std::size_t n, std::uint64_t seed);

// Classical baseline.

struct CganConfig {
  int noise_dim = 4;
  std::vector<int> gen_hidden{32};
  std::vector<int> disc_hidden{32, 16};
  int image_size = 8;
};

struct ClassicalGan {
  CganConfig config;
  Network generator;
  Network discriminator;
  Shape image_shape;
  bool trained = false;
};

ClassicalGan make_classical_gan(const CganConfig& config, std::uint64_t seed);
Tensor generator_forward(const ClassicalGan& model, const Eigen::VectorXd& noise);

struct CganTrainResult {
  ClassicalGan model;
  GanHistory history;
};

CganTrainResult train_classical_gan(ClassicalGan model, const std::vector<Tensor>& train_images,
                                    const GanTrainConfig& config);
std::vector<Tensor> generate_samples(const ClassicalGan& model, std::size_t n, std::uint64_t seed);

// Born-machine generator over measured bitstrings.

struct BornQgan {
  ParamCircuit circuit{1};
  Eigen::VectorXd lambda;
  Network discriminator;  // input: the bit vector of an outcome, qubit 0 first
  bool trained = false;
};

BornQgan make_born_qgan(const AnsatzSpec& ansatz, const std::vector<int>& disc_hidden, std::uint64_t seed);

struct BornTrainConfig {
  int steps = 1000;
  int batch_size = 64;
  double lr_g = 0.003;  // a slow generator against a faster discriminator converges reliably
  double lr_d = 0.03;
  int d_steps = 3;
  std::size_t shots = 0;  // 0: exact shifted distributions; otherwise estimate each from this many shots
  std::uint64_t seed = 0;
};

struct BornTrainResult {
  BornQgan model;
  GanHistory history;
};

/// Training data are basis-state indices (outcomes) of the target distribution.
BornTrainResult train_born_qgan(BornQgan model, const std::vector<std::size_t>& train_outcomes,
                                const BornTrainConfig& config);
Eigen::VectorXd born_distribution(const BornQgan& model);
double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// Class-targeted training.

inline constexpr double kConditioningFloor = 0.02;

struct ClassConditioning {
  std::vector<double> weights;  // floored, renormalized R; also the share of real batches seen per class
  std::vector<int> epoch_budgets;
};

/// Weights: entries below the floor are raised to it and the remaining mass is
/// split over the other classes in proportion to R. Budgets apportion
/// base_epochs * C epochs by those weights, at least one each.
ClassConditioning per_class_conditioning(int base_epochs, const std::vector<double>& R,
                                         double floor = kConditioningFloor);

/// One QGAN per class, trained on that class's images for its epoch budget.
std::vector<QganModel> train_class_qgans(const LabeledDataset& train, const QganConfig& config,
                                         const GanTrainConfig& base, const ClassConditioning& conditioning,
                                         std::vector<GanHistory>* histories = nullptr);
std::vector<ClassicalGan> train_class_cgans(const LabeledDataset& train, const CganConfig& config,
                                            const GanTrainConfig& base, const ClassConditioning& conditioning,
                                            std::vector<GanHistory>* histories = nullptr);

nlohmann::json to_json(const QganModel& model);
QganModel qgan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClassicalGan& model);
ClassicalGan cgan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QganConfig& c);
QganConfig qgan_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CganConfig& c);
CganConfig cgan_config_from_json(const nlohmann::json& j);

/// CSV with header "step,d_loss,g_loss,V".
std::string history_csv(const GanHistory& history);

}  // namespace qaug
