#pragma once

// Minimal classical network stack: layers, reverse-mode gradients, losses and
// optimizers. Parameters are exchanged as one flat vector per network so that
// hybrid models can concatenate classical and circuit parameters.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qaug/rng.hpp"
#include "qaug/tensor.hpp"

namespace qaug {

enum class LayerKind { Conv3x3, MaxPool2x2, ReLU, Linear, Sigmoid, Tanh };

const char* layer_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  int in = 0;   // input channels (conv) or fan-in (linear)
  int out = 0;  // output channels (conv) or fan-out (linear)

  static LayerSpec conv3x3(int in_channels, int out_channels) {
    return {LayerKind::Conv3x3, in_channels, out_channels};
  }
  static LayerSpec max_pool2x2() { return {LayerKind::MaxPool2x2, 0, 0}; }
  static LayerSpec relu() { return {LayerKind::ReLU, 0, 0}; }
  static LayerSpec linear(int fan_in, int fan_out) { return {LayerKind::Linear, fan_in, fan_out}; }
  static LayerSpec sigmoid() { return {LayerKind::Sigmoid, 0, 0}; }
  static LayerSpec tanh() { return {LayerKind::Tanh, 0, 0}; }

  Eigen::Index weight_count() const;
  Eigen::Index bias_count() const;
  /// Output shape for a given input shape; throws ShapeError when incompatible.
  Shape output_shape(const Shape& input) const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Conv weights are [out][in][3][3]; linear weights are [out][in]; both row-major.
struct Layer {
  LayerSpec spec;
  Eigen::VectorXd weight;
  Eigen::VectorXd bias;
};

class Network {
 public:
  Network() = default;
  /// Kaiming-uniform weights, fan-in-scaled uniform biases.
  Network(const std::vector<LayerSpec>& specs, Rng& rng);
  /// All weights zero.
  explicit Network(const std::vector<LayerSpec>& specs);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<LayerSpec> specs() const;

  Eigen::Index parameter_count() const;
  /// Flat [w_0, b_0, w_1, b_1, ...].
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);

  /// Bumped on every parameter write; forward caches record it.
  std::uint64_t revision() const { return revision_; }

  Shape output_shape(const Shape& input) const;

 private:
  std::vector<Layer> layers_;
  std::uint64_t revision_ = 0;
};

struct ForwardCache {
  std::uint64_t revision = 0;
  std::size_t n_layers = 0;
  std::vector<Tensor> inputs;                         // input to each layer
  std::vector<std::vector<Eigen::Index>> pool_argmax;  // per max-pool layer output
  Tensor output;
};

struct Forward {
  Tensor output;
  ForwardCache cache;
};

Forward forward(const Network& net, const Tensor& input);
/// Forward without retaining the cache.
Tensor predict(const Network& net, const Tensor& input);

struct Backward {
  Tensor input_grad;
  Eigen::VectorXd weight_grad;  // same layout as Network::parameters()
};

Backward backward(const Network& net, const ForwardCache& cache, const Tensor& upstream);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// -log softmax(logits)[label]; grad = softmax - one_hot.
LossGrad softmax_cross_entropy(const Eigen::VectorXd& logits, int label);

inline constexpr double kProbClamp = 1e-7;

struct GanLosses {
  double d_loss = 0.0;  // -mean log D(x) - mean log(1 - D(G(z)))
  double g_loss = 0.0;  // -mean log D(G(z)), non-saturating
  double value = 0.0;   // mean log D(x) + mean log(1 - D(G(z)))
  Eigen::VectorXd d_loss_wrt_real;
  Eigen::VectorXd d_loss_wrt_fake;
  Eigen::VectorXd g_loss_wrt_fake;
};

/// Binary cross-entropy GAN losses on discriminator probabilities clamped to [1e-7, 1 - 1e-7].
GanLosses gan_bce_losses(const Eigen::VectorXd& d_real, const Eigen::VectorXd& d_fake);

enum class OptimKind { SGD, Adam };

const char* optim_name(OptimKind kind);
OptimKind optim_kind_from_name(const std::string& name);

struct OptimState {
  OptimKind kind = OptimKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
};

OptimState make_optimizer(OptimKind kind, double learning_rate, Eigen::Index n_params);

/// One update; SGD is w - lr g, Adam uses bias-corrected moments.
Eigen::VectorXd optim_step(OptimState& state, const Eigen::VectorXd& weights,
                           const Eigen::VectorXd& grads);

// JSON serialization. Doubles are written in shortest round-trip form.
nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OptimState& opt);
OptimState optim_from_json(const nlohmann::json& j);

struct Checkpoint {
  Network net;
  OptimState optimizer;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace qaug
