#include "qaug/qgan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "qaug/apportion.hpp"
#include "qaug/errors.hpp"
#include "qaug/rng.hpp"

namespace qaug {
namespace {

constexpr double kPi = std::numbers::pi;

Tensor scalar_tensor(double v) { return Tensor({1}, Eigen::VectorXd::Constant(1, v)); }

// Quantum generator seen by the shared adversarial loop.
struct QuantumGen {
  QganModel& m;

  int noise_dim() const { return m.noise_dim; }
  Eigen::VectorXd params() const {
    Eigen::VectorXd p(m.generator_parameter_count());
    p << m.lambda_q, m.gen_post.parameters();
    return p;
  }
  void set_params(const Eigen::VectorXd& p) {
    m.lambda_q = p.head(m.lambda_q.size());
    m.gen_post.set_parameters(p.tail(m.gen_post.parameter_count()));
  }
  Tensor sample(const Eigen::VectorXd& z) const { return generator_forward(m, z); }
  void accumulate_grad(const Eigen::VectorXd& z, const Tensor& d_image, Eigen::VectorXd& grad) const {
    const StateVector encoded = angle_encode(z);
    const std::vector<int> measured = all_qubits(m.gen_vqc.n_qubits());
    const Eigen::VectorXd expect = vqc_forward(m.gen_vqc, m.lambda_q, encoded, measured);
    const Forward post = forward(m.gen_post, Tensor::vector(expect));
    const Backward b = backward(m.gen_post, post.cache, d_image.reshaped(post.output.shape()));
    const Eigen::Index nq = m.lambda_q.size();
    grad.head(nq) += param_shift_grad(m.gen_vqc, m.lambda_q, encoded, measured, b.input_grad.data());
    grad.tail(b.weight_grad.size()) += b.weight_grad;
  }
};

struct ClassicalGen {
  ClassicalGan& m;

  int noise_dim() const { return m.config.noise_dim; }
  Eigen::VectorXd params() const { return m.generator.parameters(); }
  void set_params(const Eigen::VectorXd& p) { m.generator.set_parameters(p); }
  Tensor sample(const Eigen::VectorXd& z) const { return generator_forward(m, z); }
  void accumulate_grad(const Eigen::VectorXd& z, const Tensor& d_image, Eigen::VectorXd& grad) const {
    const Forward f = forward(m.generator, Tensor::vector(z));
    grad += backward(m.generator, f.cache, d_image.reshaped(f.output.shape())).weight_grad;
  }
};

// Discriminator update on one real and one generated batch; returns the losses.
GanLosses discriminator_step(Network& disc, OptimState& opt, const std::vector<Tensor>& real,
                             const std::vector<Tensor>& fake) {
  std::vector<Forward> fr, ff;
  Eigen::VectorXd dr(static_cast<Eigen::Index>(real.size())), df(static_cast<Eigen::Index>(fake.size()));
  for (std::size_t i = 0; i < real.size(); ++i) {
    fr.push_back(forward(disc, real[i]));
    dr(static_cast<Eigen::Index>(i)) = fr.back().output[0];
  }
  for (std::size_t i = 0; i < fake.size(); ++i) {
    ff.push_back(forward(disc, fake[i]));
    df(static_cast<Eigen::Index>(i)) = ff.back().output[0];
  }
  const GanLosses L = gan_bce_losses(dr, df);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(disc.parameter_count());
  for (std::size_t i = 0; i < real.size(); ++i) {
    grad += backward(disc, fr[i].cache, scalar_tensor(L.d_loss_wrt_real(static_cast<Eigen::Index>(i)))).weight_grad;
  }
  for (std::size_t i = 0; i < fake.size(); ++i) {
    grad += backward(disc, ff[i].cache, scalar_tensor(L.d_loss_wrt_fake(static_cast<Eigen::Index>(i)))).weight_grad;
  }
  disc.set_parameters(optim_step(opt, disc.parameters(), grad));
  return L;
}

template <typename Gen>
void adversarial_loop(Gen gen, Network& disc, const std::vector<Tensor>& train, const GanTrainConfig& cfg,
                      GanHistory& history) {
  if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (cfg.batch_size < 1 || cfg.d_steps < 1 || cfg.steps_per_epoch < 0) {
    throw ConfigError("batch_size and d_steps must be positive");
  }
  if (cfg.epochs == 0) return;
  if (train.empty()) throw DataError("empty GAN training set");

  const auto B = static_cast<std::size_t>(cfg.batch_size);
  const std::int64_t per_epoch =
      cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : static_cast<std::int64_t>((train.size() + B - 1) / B);
  const std::int64_t total = per_epoch * cfg.epochs;

  Rng rng(cfg.seed);
  Eigen::VectorXd gparams = gen.params();
  OptimState opt_g = make_optimizer(OptimKind::Adam, cfg.lr_g, gparams.size());
  OptimState opt_d = make_optimizer(OptimKind::Adam, cfg.lr_d, disc.parameter_count());

  for (std::int64_t step = 0; step < total; ++step) {
    GanStep rec;
    rec.step = step + 1;
    for (int d = 0; d < cfg.d_steps; ++d) {
      std::vector<Tensor> real, fake;
      for (std::size_t i = 0; i < B; ++i) real.push_back(train[rng.below(train.size())]);
      for (std::size_t i = 0; i < B; ++i) fake.push_back(gen.sample(draw_noise(gen.noise_dim(), rng)));
      const GanLosses L = discriminator_step(disc, opt_d, real, fake);
      rec.d_loss = L.d_loss;
      rec.value = L.value;
    }

    std::vector<Eigen::VectorXd> noises;
    std::vector<Forward> fd;
    Eigen::VectorXd dfake(static_cast<Eigen::Index>(B));
    for (std::size_t i = 0; i < B; ++i) {
      noises.push_back(draw_noise(gen.noise_dim(), rng));
      fd.push_back(forward(disc, gen.sample(noises.back())));
      dfake(static_cast<Eigen::Index>(i)) = fd.back().output[0];
    }
    const GanLosses L = gan_bce_losses(dfake, dfake);
    rec.g_loss = L.g_loss;
    Eigen::VectorXd ggrad = Eigen::VectorXd::Zero(gparams.size());
    for (std::size_t i = 0; i < B; ++i) {
      const Backward b =
          backward(disc, fd[i].cache, scalar_tensor(L.g_loss_wrt_fake(static_cast<Eigen::Index>(i))));
      gen.accumulate_grad(noises[i], b.input_grad, ggrad);
    }
    gparams = optim_step(opt_g, gparams, ggrad);
    gen.set_params(gparams);

    if (!std::isfinite(rec.d_loss) || !std::isfinite(rec.g_loss) || !std::isfinite(rec.value)) {
      throw NumericError("non-finite GAN loss at step " + std::to_string(rec.step));
    }
    history.steps.push_back(rec);
  }
}

Shape square(int size) { return {size, size}; }

void check_noise(int dim, const Eigen::VectorXd& noise) {
  if (noise.size() != dim) {
    throw ShapeError("noise length " + std::to_string(noise.size()) + " does not match " + std::to_string(dim));
  }
}

Tensor bits_of(std::size_t outcome, int n_qubits) {
  Tensor t({n_qubits});
  for (int q = 0; q < n_qubits; ++q) t[q] = static_cast<double>((outcome >> (n_qubits - 1 - q)) & 1U);
  return t;
}

Eigen::VectorXd empirical(const StateVector& state, std::size_t shots, Rng& rng) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(state.dim());
  for (std::size_t idx : sample_indices(state, shots, rng)) p(static_cast<Eigen::Index>(idx)) += 1.0;
  return p / static_cast<double>(shots);
}

std::string entangler_name(Entangler e) { return e == Entangler::Ring ? "ring" : "linear"; }

Entangler entangler_from(const std::string& s) {
  if (s == "ring") return Entangler::Ring;
  if (s == "linear") return Entangler::Linear;
  throw ConfigError("entangler must be ring or linear");
}

}  // namespace

Network make_discriminator(int inputs, const std::vector<int>& hidden, Rng& rng) {
  std::vector<LayerSpec> specs;
  int prev = inputs;
  for (int h : hidden) {
    specs.push_back(LayerSpec::linear(prev, h));
    specs.push_back(LayerSpec::relu());
    prev = h;
  }
  specs.push_back(LayerSpec::linear(prev, 1));
  specs.push_back(LayerSpec::sigmoid());
  return Network(specs, rng);
}

QganModel make_qgan(const QganConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  QganModel m;
  m.config = config;
  m.gen_vqc = build_ansatz({config.n_qubits, config.depth, config.entangler});
  m.lambda_q = random_params(m.gen_vqc.n_params(), rng);
  const int pixels = config.image_size * config.image_size;
  if (config.post_hidden > 0) {
    m.gen_post = Network({LayerSpec::linear(config.n_qubits, config.post_hidden), LayerSpec::relu(),
                          LayerSpec::linear(config.post_hidden, pixels), LayerSpec::sigmoid()},
                         rng);
  } else {
    m.gen_post = Network({LayerSpec::linear(config.n_qubits, pixels), LayerSpec::sigmoid()}, rng);
  }
  m.discriminator = make_discriminator(pixels, config.disc_hidden, rng);
  m.noise_dim = config.n_qubits;
  m.image_shape = square(config.image_size);
  return m;
}

Eigen::VectorXd draw_noise(int dim, Rng& rng) {
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z(i) = rng.uniform(-kPi, kPi);
  return z;
}

Tensor generator_forward(const QganModel& model, const Eigen::VectorXd& noise) {
  check_noise(model.noise_dim, noise);
  const Eigen::VectorXd expect =
      vqc_forward(model.gen_vqc, model.lambda_q, angle_encode(noise), all_qubits(model.gen_vqc.n_qubits()));
  return predict(model.gen_post, Tensor::vector(expect)).reshaped(model.image_shape);
}

QganTrainResult train_qgan(QganModel model, const std::vector<Tensor>& train_images, const GanTrainConfig& config) {
  QganTrainResult r;
  adversarial_loop(QuantumGen{model}, model.discriminator, train_images, config, r.history);
  if (config.epochs > 0) model.trained = true;
  r.history.generator_params = model.generator_parameter_count();
  r.history.discriminator_params = model.discriminator.parameter_count();
  r.model = std::move(model);
  return r;
}

double qgan_generator_loss(const QganModel& model, const std::vector<Eigen::VectorXd>& noises) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(noises.size()));
  for (std::size_t i = 0; i < noises.size(); ++i) {
    d(static_cast<Eigen::Index>(i)) = predict(model.discriminator, generator_forward(model, noises[i]))[0];
  }
  return gan_bce_losses(d, d).g_loss;
}

Eigen::VectorXd qgan_circuit_grad(const QganModel& model, const std::vector<Eigen::VectorXd>& noises) {
  QganModel copy = model;
  QuantumGen gen{copy};
  Eigen::VectorXd d(static_cast<Eigen::Index>(noises.size()));
  std::vector<Forward> fd;
  for (std::size_t i = 0; i < noises.size(); ++i) {
    fd.push_back(forward(model.discriminator, gen.sample(noises[i])));
    d(static_cast<Eigen::Index>(i)) = fd.back().output[0];
  }
  const GanLosses L = gan_bce_losses(d, d);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.generator_parameter_count());
  for (std::size_t i = 0; i < noises.size(); ++i) {
    const Backward b = backward(model.discriminator, fd[i].cache,
                                scalar_tensor(L.g_loss_wrt_fake(static_cast<Eigen::Index>(i))));
    gen.accumulate_grad(noises[i], b.input_grad, grad);
  }
  return grad.head(model.lambda_q.size());
}

std::vector<Tensor> generate_samples(const QganModel& model, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generator_forward(model, draw_noise(model.noise_dim, rng)));
  return out;
}

ClassicalGan make_classical_gan(const CganConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  ClassicalGan m;
  m.config = config;
  const int pixels = config.image_size * config.image_size;
  std::vector<LayerSpec> specs;
  int prev = config.noise_dim;
  for (int h : config.gen_hidden) {
    specs.push_back(LayerSpec::linear(prev, h));
    specs.push_back(LayerSpec::relu());
    prev = h;
  }
  specs.push_back(LayerSpec::linear(prev, pixels));
  specs.push_back(LayerSpec::sigmoid());
  m.generator = Network(specs, rng);
  m.discriminator = make_discriminator(pixels, config.disc_hidden, rng);
  m.image_shape = square(config.image_size);
  return m;
}

Tensor generator_forward(const ClassicalGan& model, const Eigen::VectorXd& noise) {
  check_noise(model.config.noise_dim, noise);
  return predict(model.generator, Tensor::vector(noise)).reshaped(model.image_shape);
}

CganTrainResult train_classical_gan(ClassicalGan model, const std::vector<Tensor>& train_images,
                                    const GanTrainConfig& config) {
  CganTrainResult r;
  adversarial_loop(ClassicalGen{model}, model.discriminator, train_images, config, r.history);
  if (config.epochs > 0) model.trained = true;
  r.history.generator_params = model.generator.parameter_count();
  r.history.discriminator_params = model.discriminator.parameter_count();
  r.model = std::move(model);
  return r;
}

std::vector<Tensor> generate_samples(const ClassicalGan& model, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(generator_forward(model, draw_noise(model.config.noise_dim, rng)));
  }
  return out;
}

BornQgan make_born_qgan(const AnsatzSpec& ansatz, const std::vector<int>& disc_hidden, std::uint64_t seed) {
  Rng rng(seed);
  BornQgan m;
  m.circuit = build_ansatz(ansatz);
  m.lambda = random_params(m.circuit.n_params(), rng);
  m.discriminator = make_discriminator(ansatz.n_qubits, disc_hidden, rng);
  return m;
}

Eigen::VectorXd born_distribution(const BornQgan& model) {
  return vqc_probabilities(model.circuit, model.lambda, StateVector(model.circuit.n_qubits()));
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ShapeError("distributions differ in support size");
  return 0.5 * (p - q).cwiseAbs().sum();
}

BornTrainResult train_born_qgan(BornQgan model, const std::vector<std::size_t>& train_outcomes,
                                const BornTrainConfig& config) {
  if (config.steps < 0 || config.batch_size < 1 || config.d_steps < 1) throw ConfigError("invalid Born QGAN config");
  BornTrainResult r;
  const int n = model.circuit.n_qubits();
  const auto dim = std::size_t{1} << n;
  if (config.steps > 0 && train_outcomes.empty()) throw DataError("empty training set");
  for (std::size_t x : train_outcomes) {
    if (x >= dim) throw IndexError("training outcome " + std::to_string(x) + " outside the register");
  }

  Rng rng(config.seed);
  const auto B = static_cast<std::size_t>(config.batch_size);
  OptimState opt_g = make_optimizer(OptimKind::Adam, config.lr_g, model.lambda.size());
  OptimState opt_d = make_optimizer(OptimKind::Adam, config.lr_d, model.discriminator.parameter_count());
  const StateVector zero(n);

  for (int step = 0; step < config.steps; ++step) {
    GanStep rec;
    rec.step = step + 1;
    for (int d = 0; d < config.d_steps; ++d) {
      const StateVector psi = run_circuit(model.circuit.bind(model.lambda), zero);
      std::vector<Tensor> real, fake;
      for (std::size_t i = 0; i < B; ++i) real.push_back(bits_of(train_outcomes[rng.below(train_outcomes.size())], n));
      for (std::size_t idx : sample_indices(psi, B, rng)) fake.push_back(bits_of(idx, n));
      const GanLosses L = discriminator_step(model.discriminator, opt_d, real, fake);
      rec.d_loss = L.d_loss;
      rec.value = L.value;
    }

    // Non-saturating generator loss -sum_x p(x) log D(x) and its shift-rule gradient.
    Eigen::VectorXd log_d(static_cast<Eigen::Index>(dim));
    for (std::size_t x = 0; x < dim; ++x) {
      const double p = std::clamp(predict(model.discriminator, bits_of(x, n))[0], kProbClamp, 1.0 - kProbClamp);
      log_d(static_cast<Eigen::Index>(x)) = std::log(p);
    }
    const Eigen::VectorXd probs = born_distribution(model);
    rec.g_loss = -probs.dot(log_d);

    Eigen::MatrixXd jac;
    if (config.shots == 0) {
      jac = probability_jacobian(model.circuit, model.lambda, zero);
    } else {
      jac.resize(static_cast<Eigen::Index>(dim), model.lambda.size());
      Eigen::VectorXd shifted = model.lambda;
      for (Eigen::Index j = 0; j < model.lambda.size(); ++j) {
        shifted(j) = model.lambda(j) + kPi / 2;
        const Eigen::VectorXd plus = empirical(run_circuit(model.circuit.bind(shifted), zero), config.shots, rng);
        shifted(j) = model.lambda(j) - kPi / 2;
        const Eigen::VectorXd minus = empirical(run_circuit(model.circuit.bind(shifted), zero), config.shots, rng);
        shifted(j) = model.lambda(j);
        jac.col(j) = 0.5 * (plus - minus);
      }
    }
    const Eigen::VectorXd grad = -(jac.transpose() * log_d);
    model.lambda = optim_step(opt_g, model.lambda, grad);

    if (!std::isfinite(rec.d_loss) || !std::isfinite(rec.g_loss)) throw NumericError("non-finite Born QGAN loss");
    r.history.steps.push_back(rec);
  }
  if (config.steps > 0) model.trained = true;
  r.history.generator_params = model.lambda.size();
  r.history.discriminator_params = model.discriminator.parameter_count();
  r.model = std::move(model);
  return r;
}

ClassConditioning per_class_conditioning(int base_epochs, const std::vector<double>& R, double floor) {
  if (R.empty()) throw ShapeError("empty error profile");
  if (base_epochs < 0) throw ConfigError("base epochs must be non-negative");
  const std::size_t C = R.size();
  double sum = 0.0;
  bool valid = true;
  for (double r : R) {
    valid = valid && std::isfinite(r) && r >= 0.0;
    sum += r;
  }
  std::vector<double> w(C, 1.0 / static_cast<double>(C));
  if (valid && sum > 0.0 && floor * static_cast<double>(C) < 1.0) {
    std::vector<bool> pinned(C, false);
    for (bool changed = true; changed;) {
      changed = false;
      double free_sum = 0.0;
      std::size_t n_pinned = 0;
      for (std::size_t i = 0; i < C; ++i) {
        if (pinned[i]) ++n_pinned;
        else free_sum += R[i];
      }
      const double free_mass = 1.0 - floor * static_cast<double>(n_pinned);
      for (std::size_t i = 0; i < C; ++i) {
        if (pinned[i]) {
          w[i] = floor;
          continue;
        }
        w[i] = free_sum > 0.0 ? free_mass * R[i] / free_sum : free_mass / static_cast<double>(C - n_pinned);
        if (w[i] < floor) {
          pinned[i] = true;
          changed = true;
        }
      }
    }
  }
  ClassConditioning out;
  out.weights = w;
  for (auto b : largest_remainder(std::int64_t{base_epochs} * static_cast<std::int64_t>(C), w)) {
    out.epoch_budgets.push_back(std::max(base_epochs > 0 ? 1 : 0, static_cast<int>(b)));
  }
  return out;
}

std::vector<QganModel> train_class_qgans(const LabeledDataset& train, const QganConfig& config,
                                         const GanTrainConfig& base, const ClassConditioning& conditioning,
                                         std::vector<GanHistory>* histories) {
  std::vector<QganModel> out;
  for (int c = 0; c < train.n_classes(); ++c) {
    GanTrainConfig cfg = base;
    cfg.epochs = conditioning.epoch_budgets.at(static_cast<std::size_t>(c));
    cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(c));
    const std::vector<Tensor> images = train.images_of(c);
    QganModel init = make_qgan(config, derive_seed(base.seed, 1000 + static_cast<std::uint64_t>(c)));
    if (images.empty()) {
      out.push_back(std::move(init));
      if (histories) histories->emplace_back();
      continue;
    }
    QganTrainResult r = train_qgan(std::move(init), images, cfg);
    if (histories) histories->push_back(std::move(r.history));
    out.push_back(std::move(r.model));
  }
  return out;
}

std::vector<ClassicalGan> train_class_cgans(const LabeledDataset& train, const CganConfig& config,
                                            const GanTrainConfig& base, const ClassConditioning& conditioning,
                                            std::vector<GanHistory>* histories) {
  std::vector<ClassicalGan> out;
  for (int c = 0; c < train.n_classes(); ++c) {
    GanTrainConfig cfg = base;
    cfg.epochs = conditioning.epoch_budgets.at(static_cast<std::size_t>(c));
    cfg.seed = derive_seed(base.seed, static_cast<std::uint64_t>(c));
    const std::vector<Tensor> images = train.images_of(c);
    ClassicalGan init = make_classical_gan(config, derive_seed(base.seed, 1000 + static_cast<std::uint64_t>(c)));
    if (images.empty()) {
      out.push_back(std::move(init));
      if (histories) histories->emplace_back();
      continue;
    }
    CganTrainResult r = train_classical_gan(std::move(init), images, cfg);
    if (histories) histories->push_back(std::move(r.history));
    out.push_back(std::move(r.model));
  }
  return out;
}

nlohmann::json to_json(const QganConfig& c) {
  return {{"n_qubits", c.n_qubits},       {"depth", c.depth},
          {"entangler", entangler_name(c.entangler)},
          {"post_hidden", c.post_hidden}, {"disc_hidden", c.disc_hidden},
          {"image_size", c.image_size}};
}

QganConfig qgan_config_from_json(const nlohmann::json& j) {
  QganConfig c;
  c.n_qubits = j.value("n_qubits", c.n_qubits);
  c.depth = j.value("depth", c.depth);
  c.entangler = entangler_from(j.value("entangler", std::string("ring")));
  c.post_hidden = j.value("post_hidden", c.post_hidden);
  c.disc_hidden = j.value("disc_hidden", c.disc_hidden);
  c.image_size = j.value("image_size", c.image_size);
  return c;
}

nlohmann::json to_json(const CganConfig& c) {
  return {{"noise_dim", c.noise_dim},
          {"gen_hidden", c.gen_hidden},
          {"disc_hidden", c.disc_hidden},
          {"image_size", c.image_size}};
}

CganConfig cgan_config_from_json(const nlohmann::json& j) {
  CganConfig c;
  c.noise_dim = j.value("noise_dim", c.noise_dim);
  c.gen_hidden = j.value("gen_hidden", c.gen_hidden);
  c.disc_hidden = j.value("disc_hidden", c.disc_hidden);
  c.image_size = j.value("image_size", c.image_size);
  return c;
}

nlohmann::json to_json(const QganModel& m) {
  return {{"kind", "qgan"},
          {"config", to_json(m.config)},
          {"vqc", to_json(m.gen_vqc)},
          {"lambda_q", to_json(m.lambda_q)},
          {"gen_post", to_json(m.gen_post)},
          {"discriminator", to_json(m.discriminator)},
          {"trained", m.trained}};
}

QganModel qgan_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "qgan") throw FormatError("not a QGAN checkpoint");
  QganModel m;
  m.config = qgan_config_from_json(j.at("config"));
  m.gen_vqc = param_circuit_from_json(j.at("vqc"));
  m.lambda_q = vector_from_json(j.at("lambda_q"));
  m.gen_post = network_from_json(j.at("gen_post"));
  m.discriminator = network_from_json(j.at("discriminator"));
  m.noise_dim = m.gen_vqc.n_qubits();
  m.image_shape = square(m.config.image_size);
  m.trained = j.value("trained", false);
  return m;
}

nlohmann::json to_json(const ClassicalGan& m) {
  return {{"kind", "cgan"},
          {"config", to_json(m.config)},
          {"generator", to_json(m.generator)},
          {"discriminator", to_json(m.discriminator)},
          {"trained", m.trained}};
}

ClassicalGan cgan_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "cgan") throw FormatError("not a classical GAN checkpoint");
  ClassicalGan m;
  m.config = cgan_config_from_json(j.at("config"));
  m.generator = network_from_json(j.at("generator"));
  m.discriminator = network_from_json(j.at("discriminator"));
  m.image_shape = square(m.config.image_size);
  m.trained = j.value("trained", false);
  return m;
}

std::string history_csv(const GanHistory& history) {
  std::ostringstream os;
  os << "step,d_loss,g_loss,V\n";
  char buf[128];
  for (const auto& s : history.steps) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(s.step), s.d_loss, s.g_loss,
                  s.value);
    os << buf;
  }
  return os.str();
}

}  // namespace qaug
