#include "qaug/hqcnn.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "qaug/errors.hpp"
#include "qaug/rng.hpp"

namespace qaug {
namespace {

constexpr double kPi = std::numbers::pi;

struct Trace {
  Forward cnn;
  Eigen::VectorXd features;
  Eigen::VectorXd angles;
  StateVector encoded{1};
  Forward readout;
  Eigen::VectorXd probs;
};

void check_image(const HqcnnModel& model, const Tensor& image) {
  const Eigen::Index s = model.config.image_size;
  const bool ok = (image.rank() == 2 && image.dim(0) == s && image.dim(1) == s) ||
                  (image.rank() == 3 && image.dim(0) == 1 && image.dim(1) == s && image.dim(2) == s);
  if (!ok) {
    throw ShapeError("HQCNN expects " + std::to_string(s) + "x" + std::to_string(s) + " images, got " +
                     shape_string(image.shape()));
  }
}

Trace trace(const HqcnnModel& model, const Tensor& image) {
  check_image(model, image);
  Trace t;
  t.cnn = forward(model.cnn, image);
  t.features = t.cnn.output.data();
  t.angles = kPi * t.features.array().tanh();
  t.encoded = angle_encode(t.angles);
  const Eigen::VectorXd expect = vqc_forward(model.vqc, model.theta, t.encoded, model.measured);
  t.readout = forward(model.readout, Tensor::vector(expect));
  t.probs = softmax(t.readout.output.data());
  return t;
}

std::optional<double> mean_or_empty(double sum, std::size_t n) {
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

HqcnnModel make_hqcnn(const HqcnnConfig& config, std::uint64_t seed) {
  if (config.image_size < 4) throw ConfigError("image_size must be at least 4");
  if (config.conv_channels < 1 || config.n_classes < 2) throw ConfigError("invalid HQCNN sizes");
  Rng rng(seed);
  HqcnnModel m;
  m.config = config;
  const int pooled = (config.image_size - 2) / 2;
  m.cnn = Network({LayerSpec::conv3x3(1, config.conv_channels), LayerSpec::max_pool2x2(), LayerSpec::relu(),
                   LayerSpec::linear(config.conv_channels * pooled * pooled, config.n_qubits)},
                  rng);
  m.vqc = build_ansatz({config.n_qubits, config.vqc_depth, config.entangler});
  m.theta = random_params(m.vqc.n_params(), rng);
  m.measured = all_qubits(config.n_qubits);
  m.readout = Network({LayerSpec::linear(config.n_qubits, config.n_classes)}, rng);
  return m;
}

Eigen::VectorXd hqcnn_forward(const HqcnnModel& model, const Tensor& image) {
  return trace(model, image).probs;
}

Prediction hqcnn_predict(const HqcnnModel& model, const Tensor& image) {
  Prediction p;
  p.probs = hqcnn_forward(model, image);
  Eigen::Index best;
  p.confidence = p.probs.maxCoeff(&best);
  p.label = static_cast<int>(best);
  return p;
}

Eigen::VectorXd hqcnn_parameters(const HqcnnModel& model) {
  const Eigen::VectorXd c = model.cnn.parameters();
  const Eigen::VectorXd r = model.readout.parameters();
  Eigen::VectorXd flat(c.size() + model.theta.size() + r.size());
  flat << c, model.theta, r;
  return flat;
}

void set_hqcnn_parameters(HqcnnModel& model, const Eigen::VectorXd& flat) {
  const Eigen::Index nc = model.cnn.parameter_count();
  const Eigen::Index nt = model.theta.size();
  const Eigen::Index nr = model.readout.parameter_count();
  if (flat.size() != nc + nt + nr) throw ShapeError("HQCNN parameter vector has the wrong length");
  model.cnn.set_parameters(flat.segment(0, nc));
  model.theta = flat.segment(nc, nt);
  model.readout.set_parameters(flat.segment(nc + nt, nr));
}

Eigen::VectorXd HqcnnGradients::flat() const {
  Eigen::VectorXd f(cnn.size() + theta.size() + readout.size());
  f << cnn, theta, readout;
  return f;
}

HqcnnGradients hqcnn_loss_grad(const HqcnnModel& model, const std::vector<Tensor>& images,
                               const std::vector<int>& labels) {
  if (images.empty()) throw DataError("empty batch");
  if (images.size() != labels.size()) throw ShapeError("batch images and labels differ in length");
  const double inv_b = 1.0 / static_cast<double>(images.size());

  HqcnnGradients g;
  g.cnn = Eigen::VectorXd::Zero(model.cnn.parameter_count());
  g.theta = Eigen::VectorXd::Zero(model.theta.size());
  g.readout = Eigen::VectorXd::Zero(model.readout.parameter_count());

  for (std::size_t i = 0; i < images.size(); ++i) {
    const Trace t = trace(model, images[i]);
    const LossGrad lg = softmax_cross_entropy(t.readout.output.data(), labels[i]);
    g.loss += inv_b * lg.loss;

    const Backward rb = backward(model.readout, t.readout.cache, Tensor::vector(inv_b * lg.grad));
    g.readout += rb.weight_grad;
    const Eigen::VectorXd d_expect = rb.input_grad.data();

    g.theta += param_shift_grad(model.vqc, model.theta, t.encoded, model.measured, d_expect);
    const Eigen::VectorXd d_angles = input_angle_grad(model.vqc, model.theta, t.angles, model.measured, d_expect);
    const Eigen::VectorXd d_features =
        (d_angles.array() * kPi * (1.0 - t.features.array().tanh().square())).matrix();

    const Backward cb = backward(model.cnn, t.cnn.cache, Tensor::vector(d_features));
    g.cnn += cb.weight_grad;
  }
  return g;
}

double hqcnn_loss(const HqcnnModel& model, const std::vector<Tensor>& images, const std::vector<int>& labels) {
  if (images.empty()) throw DataError("empty batch");
  double loss = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Trace t = trace(model, images[i]);
    loss += softmax_cross_entropy(t.readout.output.data(), labels[i]).loss;
  }
  return loss / static_cast<double>(images.size());
}

HqcnnTrainResult hqcnn_train(HqcnnModel model, const LabeledDataset& train_set, const HqcnnTrainConfig& config,
                             const EpochCallback& on_epoch) {
  if (train_set.empty()) throw DataError("empty training set");
  if (config.batch_size < 1) throw ConfigError("batch_size must be positive");
  if (config.epochs < 0) throw ConfigError("epochs must be non-negative");

  HqcnnTrainResult result;
  Eigen::VectorXd params = hqcnn_parameters(model);
  result.optimizer = make_optimizer(config.optimizer, config.learning_rate, params.size());
  Rng rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<Tensor> images;
      std::vector<int> labels;
      for (std::size_t k = start; k < end; ++k) {
        images.push_back(train_set.images[order[k]]);
        labels.push_back(train_set.labels[order[k]]);
      }
      const HqcnnGradients g = hqcnn_loss_grad(model, images, labels);
      if (!std::isfinite(g.loss)) throw NumericError("non-finite training loss");
      loss_sum += g.loss;
      ++batches;
      params = optim_step(result.optimizer, params, g.flat());
      set_hqcnn_parameters(model, params);
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < train_set.size(); ++i) {
      if (hqcnn_predict(model, train_set.images[i]).label == train_set.labels[i]) ++correct;
    }
    EpochStats stats{epoch + 1, loss_sum / static_cast<double>(batches),
                     static_cast<double>(correct) / static_cast<double>(train_set.size())};
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats, model);
  }
  result.model = std::move(model);
  return result;
}

EvalReport evaluate_predictions(const std::vector<int>& truth, const std::vector<Prediction>& predictions,
                                int n_classes) {
  if (truth.empty()) throw DataError("empty test set");
  if (truth.size() != predictions.size()) throw ShapeError("truth and predictions differ in length");
  EvalReport r;
  const auto C = static_cast<std::size_t>(n_classes);
  r.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes);
  r.per_class_count.assign(C, 0);
  std::vector<double> correct(C, 0.0), conf(C, 0.0);
  std::size_t total_correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    const int p = predictions[i].label;
    if (y < 0 || y >= n_classes || p < 0 || p >= n_classes) throw IndexError("class index out of range");
    ++r.confusion(y, p);
    ++r.per_class_count[static_cast<std::size_t>(y)];
    conf[static_cast<std::size_t>(y)] += predictions[i].confidence;
    if (p == y) {
      correct[static_cast<std::size_t>(y)] += 1.0;
      ++total_correct;
    }
  }
  double acc_sum = 0.0, conf_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < C; ++c) {
    r.per_class_accuracy.push_back(mean_or_empty(correct[c], r.per_class_count[c]));
    r.per_class_confidence.push_back(mean_or_empty(conf[c], r.per_class_count[c]));
    if (r.per_class_count[c]) {
      acc_sum += *r.per_class_accuracy.back();
      conf_sum += *r.per_class_confidence.back();
      ++present;
    }
  }
  r.average_accuracy = acc_sum / static_cast<double>(present);
  r.average_confidence = conf_sum / static_cast<double>(present);
  r.overall_accuracy = static_cast<double>(total_correct) / static_cast<double>(truth.size());
  return r;
}

EvalReport hqcnn_evaluate(const HqcnnModel& model, const LabeledDataset& test_set) {
  std::vector<Prediction> preds;
  preds.reserve(test_set.size());
  for (const auto& im : test_set.images) preds.push_back(hqcnn_predict(model, im));
  return evaluate_predictions(test_set.labels, preds, model.config.n_classes);
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json acc = nlohmann::json::array(), conf = nlohmann::json::array();
  for (const auto& a : r.per_class_accuracy) acc.push_back(a ? nlohmann::json(*a) : nlohmann::json(nullptr));
  for (const auto& c : r.per_class_confidence) conf.push_back(c ? nlohmann::json(*c) : nlohmann::json(nullptr));
  nlohmann::json confusion = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    std::vector<int> row(r.confusion.cols());
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) row[static_cast<std::size_t>(j)] = r.confusion(i, j);
    confusion.push_back(row);
  }
  return {{"per_class_accuracy", acc},
          {"per_class_confidence", conf},
          {"per_class_count", r.per_class_count},
          {"average_accuracy", r.average_accuracy},
          {"average_confidence", r.average_confidence},
          {"overall_accuracy", r.overall_accuracy},
          {"confusion", confusion}};
}

nlohmann::json to_json(const HqcnnConfig& c) {
  return {{"image_size", c.image_size},
          {"conv_channels", c.conv_channels},
          {"n_qubits", c.n_qubits},
          {"vqc_depth", c.vqc_depth},
          {"entangler", c.entangler == Entangler::Ring ? "ring" : "linear"},
          {"n_classes", c.n_classes}};
}

HqcnnConfig hqcnn_config_from_json(const nlohmann::json& j) {
  HqcnnConfig c;
  c.image_size = j.value("image_size", c.image_size);
  c.conv_channels = j.value("conv_channels", c.conv_channels);
  c.n_qubits = j.value("n_qubits", c.n_qubits);
  c.vqc_depth = j.value("vqc_depth", c.vqc_depth);
  const std::string ent = j.value("entangler", std::string("ring"));
  if (ent != "ring" && ent != "linear") throw ConfigError("entangler must be ring or linear");
  c.entangler = ent == "ring" ? Entangler::Ring : Entangler::Linear;
  c.n_classes = j.value("n_classes", c.n_classes);
  return c;
}

nlohmann::json hqcnn_checkpoint(const HqcnnModel& model, const OptimState* optimizer, std::uint64_t seed,
                                std::int64_t step) {
  nlohmann::json j = {{"kind", "hqcnn"},
                      {"config", to_json(model.config)},
                      {"cnn", to_json(model.cnn)},
                      {"vqc", to_json(model.vqc)},
                      {"theta", to_json(model.theta)},
                      {"measured", model.measured},
                      {"readout", to_json(model.readout)},
                      {"seed", seed},
                      {"step", step}};
  if (optimizer) j["optimizer"] = to_json(*optimizer);
  return j;
}

HqcnnModel hqcnn_from_checkpoint(const nlohmann::json& j) {
  if (j.value("kind", "") != "hqcnn") throw FormatError("not an HQCNN checkpoint");
  HqcnnModel m;
  m.config = hqcnn_config_from_json(j.at("config"));
  m.cnn = network_from_json(j.at("cnn"));
  m.vqc = param_circuit_from_json(j.at("vqc"));
  m.theta = vector_from_json(j.at("theta"));
  m.measured = j.at("measured").get<std::vector<int>>();
  m.readout = network_from_json(j.at("readout"));
  if (m.theta.size() != m.vqc.n_params()) throw FormatError("theta length does not match the circuit");
  return m;
}

}  // namespace qaug
