#include "qaug/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "qaug/errors.hpp"

namespace qaug {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Views a rank-2 [H, W] image as one channel.
Shape as_chw(const Shape& s) {
  if (s.size() == 2) return {1, s[0], s[1]};
  if (s.size() == 3) return s;
  throw ShapeError("expected a [C, H, W] or [H, W] tensor, got " + shape_string(s));
}

void require_finite(const Tensor& t, const char* where) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value at ") + where);
}

Tensor conv_forward(const Layer& layer, const Tensor& input) {
  const Shape in = as_chw(input.shape());
  const Shape out_shape = layer.spec.output_shape(input.shape());
  const Eigen::Index C = in[0], H = in[1], W = in[2];
  const Eigen::Index O = out_shape[0], OH = out_shape[1], OW = out_shape[2];
  const double* x = input.data().data();
  const double* w = layer.weight.data();
  Tensor out(out_shape);
  for (Eigen::Index o = 0; o < O; ++o) {
    for (Eigen::Index y = 0; y < OH; ++y) {
      for (Eigen::Index xx = 0; xx < OW; ++xx) {
        double acc = layer.bias(o);
        for (Eigen::Index c = 0; c < C; ++c) {
          const double* wk = w + (o * C + c) * 9;
          const double* xc = x + c * H * W;
          for (Eigen::Index ky = 0; ky < 3; ++ky) {
            for (Eigen::Index kx = 0; kx < 3; ++kx) {
              acc += wk[ky * 3 + kx] * xc[(y + ky) * W + xx + kx];
            }
          }
        }
        out.at(o, y, xx) = acc;
      }
    }
  }
  return out;
}

void conv_backward(const Layer& layer, const Tensor& input, const Tensor& upstream, Tensor& din,
                   double* dw, double* db) {
  const Shape in = as_chw(input.shape());
  const Eigen::Index C = in[0], H = in[1], W = in[2];
  const Eigen::Index O = upstream.dim(0), OH = upstream.dim(1), OW = upstream.dim(2);
  const double* x = input.data().data();
  const double* w = layer.weight.data();
  double* dx = din.data().data();
  for (Eigen::Index o = 0; o < O; ++o) {
    for (Eigen::Index y = 0; y < OH; ++y) {
      for (Eigen::Index xx = 0; xx < OW; ++xx) {
        const double g = upstream.at(o, y, xx);
        db[o] += g;
        for (Eigen::Index c = 0; c < C; ++c) {
          const Eigen::Index wbase = (o * C + c) * 9;
          for (Eigen::Index ky = 0; ky < 3; ++ky) {
            for (Eigen::Index kx = 0; kx < 3; ++kx) {
              const Eigen::Index xi = c * H * W + (y + ky) * W + xx + kx;
              dw[wbase + ky * 3 + kx] += g * x[xi];
              dx[xi] += g * w[wbase + ky * 3 + kx];
            }
          }
        }
      }
    }
  }
}

Tensor pool_forward(const LayerSpec& spec, const Tensor& input, std::vector<Eigen::Index>& argmax) {
  const Shape in = as_chw(input.shape());
  const Shape out_shape = spec.output_shape(input.shape());
  const Shape out3 = as_chw(out_shape);
  const Eigen::Index C = in[0], H = in[1], W = in[2], OH = out3[1], OW = out3[2];
  Tensor out(out_shape);
  argmax.assign(static_cast<std::size_t>(out.size()), 0);
  for (Eigen::Index c = 0; c < C; ++c) {
    for (Eigen::Index y = 0; y < OH; ++y) {
      for (Eigen::Index x = 0; x < OW; ++x) {
        Eigen::Index best = c * H * W + (2 * y) * W + 2 * x;
        for (Eigen::Index dy = 0; dy < 2; ++dy) {
          for (Eigen::Index dx = 0; dx < 2; ++dx) {
            const Eigen::Index idx = c * H * W + (2 * y + dy) * W + 2 * x + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const Eigen::Index o = (c * OH + y) * OW + x;
        out[o] = input[best];
        argmax[static_cast<std::size_t>(o)] = best;
      }
    }
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* layer_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv3x3: return "Conv3x3";
    case LayerKind::MaxPool2x2: return "MaxPool2x2";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::Linear: return "Linear";
    case LayerKind::Sigmoid: return "Sigmoid";
    case LayerKind::Tanh: return "Tanh";
  }
  return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
  for (LayerKind k : {LayerKind::Conv3x3, LayerKind::MaxPool2x2, LayerKind::ReLU, LayerKind::Linear,
                      LayerKind::Sigmoid, LayerKind::Tanh}) {
    if (name == layer_name(k)) return k;
  }
  throw FormatError("unknown layer kind '" + name + "'");
}

Eigen::Index LayerSpec::weight_count() const {
  switch (kind) {
    case LayerKind::Conv3x3: return Eigen::Index{out} * in * 9;
    case LayerKind::Linear: return Eigen::Index{out} * in;
    default: return 0;
  }
}

Eigen::Index LayerSpec::bias_count() const {
  return (kind == LayerKind::Conv3x3 || kind == LayerKind::Linear) ? out : 0;
}

Shape LayerSpec::output_shape(const Shape& input) const {
  switch (kind) {
    case LayerKind::Conv3x3: {
      const Shape s = as_chw(input);
      if (s[0] != in) {
        throw ShapeError("conv expects " + std::to_string(in) + " channels, got " + shape_string(input));
      }
      if (s[1] < 3 || s[2] < 3) throw ShapeError("conv input smaller than 3x3: " + shape_string(input));
      return {out, s[1] - 2, s[2] - 2};
    }
    case LayerKind::MaxPool2x2: {
      const Shape s = as_chw(input);
      if (s[1] < 2 || s[2] < 2) throw ShapeError("pool input smaller than 2x2: " + shape_string(input));
      if (input.size() == 2) return {s[1] / 2, s[2] / 2};
      return {s[0], s[1] / 2, s[2] / 2};
    }
    case LayerKind::Linear:
      if (shape_size(input) != in) {
        throw ShapeError("linear expects " + std::to_string(in) + " inputs, got " + shape_string(input));
      }
      return {out};
    default: return input;
  }
}

Network::Network(const std::vector<LayerSpec>& specs) {
  for (const auto& s : specs) {
    if ((s.kind == LayerKind::Conv3x3 || s.kind == LayerKind::Linear) && (s.in < 1 || s.out < 1)) {
      throw ShapeError(std::string(layer_name(s.kind)) + " needs positive sizes");
    }
    layers_.push_back({s, Eigen::VectorXd::Zero(s.weight_count()), Eigen::VectorXd::Zero(s.bias_count())});
  }
}

Network::Network(const std::vector<LayerSpec>& specs, Rng& rng) : Network(specs) {
  for (auto& layer : layers_) {
    if (layer.weight.size() == 0) continue;
    const double fan_in = layer.spec.kind == LayerKind::Conv3x3 ? layer.spec.in * 9.0 : layer.spec.in;
    const double wb = std::sqrt(6.0 / fan_in);
    const double bb = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight(i) = rng.uniform(-wb, wb);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-bb, bb);
  }
}

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> s;
  for (const auto& l : layers_) s.push_back(l.spec);
  return s;
}

Eigen::Index Network::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Eigen::VectorXd Network::parameters() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  for (const auto& l : layers_) {
    flat.segment(at, l.weight.size()) = l.weight;
    at += l.weight.size();
    flat.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return flat;
}

void Network::set_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) {
    throw ShapeError("expected " + std::to_string(parameter_count()) + " parameters, got " +
                     std::to_string(flat.size()));
  }
  Eigen::Index at = 0;
  for (auto& l : layers_) {
    l.weight = flat.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
  ++revision_;
}

Shape Network::output_shape(const Shape& input) const {
  Shape s = input;
  for (const auto& l : layers_) s = l.spec.output_shape(s);
  return s;
}

Forward forward(const Network& net, const Tensor& input) {
  require_finite(input, "network input");
  Forward f;
  f.cache.revision = net.revision();
  f.cache.n_layers = net.layers().size();
  f.cache.inputs.reserve(net.layers().size());
  f.cache.pool_argmax.resize(net.layers().size());
  Tensor x = input;
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    const Layer& layer = net.layers()[li];
    f.cache.inputs.push_back(x);
    switch (layer.spec.kind) {
      case LayerKind::Conv3x3: x = conv_forward(layer, x); break;
      case LayerKind::MaxPool2x2: x = pool_forward(layer.spec, x, f.cache.pool_argmax[li]); break;
      case LayerKind::ReLU: x.data() = x.data().cwiseMax(0.0); break;
      case LayerKind::Linear: {
        layer.spec.output_shape(x.shape());
        const Eigen::Map<const RowMatrix> w(layer.weight.data(), layer.spec.out, layer.spec.in);
        x = Tensor::vector(w * x.data() + layer.bias);
        break;
      }
      case LayerKind::Sigmoid: x.data() = x.data().unaryExpr(&sigmoid); break;
      case LayerKind::Tanh: x.data() = x.data().array().tanh(); break;
    }
  }
  require_finite(x, "network output");
  f.cache.output = x;
  f.output = std::move(x);
  return f;
}

Tensor predict(const Network& net, const Tensor& input) { return forward(net, input).output; }

Backward backward(const Network& net, const ForwardCache& cache, const Tensor& upstream) {
  if (cache.revision != net.revision() || cache.n_layers != net.layers().size() ||
      cache.inputs.size() != net.layers().size()) {
    throw ConsistencyError("forward cache does not belong to this network state");
  }
  if (upstream.shape() != cache.output.shape()) {
    throw ShapeError("upstream gradient shape " + shape_string(upstream.shape()) +
                     " does not match output " + shape_string(cache.output.shape()));
  }
  require_finite(upstream, "upstream gradient");

  Backward b;
  b.weight_grad = Eigen::VectorXd::Zero(net.parameter_count());
  // Offsets of each layer's block in the flat parameter vector.
  std::vector<Eigen::Index> offset(net.layers().size());
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    offset[i] = at;
    at += net.layers()[i].weight.size() + net.layers()[i].bias.size();
  }

  Tensor g = upstream;
  for (std::size_t li = net.layers().size(); li-- > 0;) {
    const Layer& layer = net.layers()[li];
    const Tensor& x = cache.inputs[li];
    double* dw = b.weight_grad.data() + offset[li];
    double* db = dw + layer.weight.size();
    Tensor dx(x.shape());
    switch (layer.spec.kind) {
      case LayerKind::Conv3x3: conv_backward(layer, x, g, dx, dw, db); break;
      case LayerKind::MaxPool2x2: {
        const auto& arg = cache.pool_argmax[li];
        for (std::size_t o = 0; o < arg.size(); ++o) dx[arg[o]] += g[static_cast<Eigen::Index>(o)];
        break;
      }
      case LayerKind::ReLU:
        dx.data() = (x.data().array() > 0.0).select(g.data(), 0.0);
        break;
      case LayerKind::Linear: {
        const Eigen::Map<const RowMatrix> w(layer.weight.data(), layer.spec.out, layer.spec.in);
        Eigen::Map<RowMatrix> gw(dw, layer.spec.out, layer.spec.in);
        gw.noalias() += g.data() * x.data().transpose();
        Eigen::Map<Eigen::VectorXd>(db, layer.spec.out) += g.data();
        dx.data() = w.transpose() * g.data();
        break;
      }
      case LayerKind::Sigmoid: {
        const Eigen::ArrayXd s = x.data().unaryExpr(&sigmoid).array();
        dx.data() = (g.data().array() * s * (1.0 - s)).matrix();
        break;
      }
      case LayerKind::Tanh: {
        const Eigen::ArrayXd t = x.data().array().tanh();
        dx.data() = (g.data().array() * (1.0 - t.square())).matrix();
        break;
      }
    }
    g = std::move(dx);
  }
  b.input_grad = std::move(g);
  return b;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

LossGrad softmax_cross_entropy(const Eigen::VectorXd& logits, int label) {
  if (logits.size() == 0) throw ShapeError("empty logits");
  if (label < 0 || label >= logits.size()) {
    throw IndexError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  LossGrad out;
  out.loss = lse - logits(label);
  out.grad = softmax(logits);
  out.grad(label) -= 1.0;
  return out;
}

GanLosses gan_bce_losses(const Eigen::VectorXd& d_real, const Eigen::VectorXd& d_fake) {
  if (d_real.size() == 0 || d_fake.size() == 0) throw ShapeError("empty discriminator batch");
  const auto clamp = [](double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); };
  const Eigen::ArrayXd r = d_real.unaryExpr(clamp).array();
  const Eigen::ArrayXd f = d_fake.unaryExpr(clamp).array();
  const double nr = static_cast<double>(r.size());
  const double nf = static_cast<double>(f.size());

  GanLosses out;
  const double mean_log_real = r.log().mean();
  const double mean_log_one_minus_fake = (1.0 - f).log().mean();
  out.value = mean_log_real + mean_log_one_minus_fake;
  out.d_loss = -out.value;
  out.g_loss = -f.log().mean();
  out.d_loss_wrt_real = (-1.0 / (nr * r)).matrix();
  out.d_loss_wrt_fake = (1.0 / (nf * (1.0 - f))).matrix();
  out.g_loss_wrt_fake = (-1.0 / (nf * f)).matrix();
  return out;
}

const char* optim_name(OptimKind kind) { return kind == OptimKind::SGD ? "sgd" : "adam"; }

OptimKind optim_kind_from_name(const std::string& name) {
  if (name == "sgd" || name == "SGD") return OptimKind::SGD;
  if (name == "adam" || name == "Adam") return OptimKind::Adam;
  throw ConfigError("unknown optimizer '" + name + "'");
}

OptimState make_optimizer(OptimKind kind, double learning_rate, Eigen::Index n_params) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  OptimState s;
  s.kind = kind;
  s.learning_rate = learning_rate;
  s.m = Eigen::VectorXd::Zero(n_params);
  s.v = Eigen::VectorXd::Zero(n_params);
  return s;
}

Eigen::VectorXd optim_step(OptimState& state, const Eigen::VectorXd& weights, const Eigen::VectorXd& grads) {
  if (weights.size() != grads.size()) {
    throw ShapeError("weights and gradients differ in length");
  }
  if (!grads.allFinite()) throw NumericError("non-finite gradient");
  ++state.step;
  if (state.kind == OptimKind::SGD) return weights - state.learning_rate * grads;

  if (state.m.size() != weights.size() || state.v.size() != weights.size()) {
    throw ShapeError("optimizer moments do not match the parameter count");
  }
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const Eigen::ArrayXd mhat = state.m.array() / c1;
  const Eigen::ArrayXd vhat = state.v.array() / c2;
  return weights - (state.learning_rate * mhat / (vhat.sqrt() + state.epsilon)).matrix();
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"kind", layer_name(l.spec.kind)},
                      {"in", l.spec.in},
                      {"out", l.spec.out},
                      {"weight", to_json(l.weight)},
                      {"bias", to_json(l.bias)}});
  }
  return {{"layers", layers}};
}

Network network_from_json(const nlohmann::json& j) {
  std::vector<LayerSpec> specs;
  Eigen::VectorXd flat;
  std::vector<double> values;
  for (const auto& l : j.at("layers")) {
    specs.push_back({layer_kind_from_name(l.at("kind")), l.at("in").get<int>(), l.at("out").get<int>()});
    for (const char* key : {"weight", "bias"}) {
      for (double v : l.at(key).get<std::vector<double>>()) values.push_back(v);
    }
  }
  Network net(specs);
  if (static_cast<Eigen::Index>(values.size()) != net.parameter_count()) {
    throw FormatError("checkpoint weight count does not match its layer specs");
  }
  net.set_parameters(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
  return net;
}

nlohmann::json to_json(const OptimState& opt) {
  return {{"kind", optim_name(opt.kind)}, {"learning_rate", opt.learning_rate},
          {"beta1", opt.beta1},           {"beta2", opt.beta2},
          {"epsilon", opt.epsilon},       {"m", to_json(opt.m)},
          {"v", to_json(opt.v)},          {"step", opt.step}};
}

OptimState optim_from_json(const nlohmann::json& j) {
  OptimState s;
  s.kind = optim_kind_from_name(j.at("kind"));
  s.learning_rate = j.at("learning_rate");
  s.beta1 = j.at("beta1");
  s.beta2 = j.at("beta2");
  s.epsilon = j.at("epsilon");
  s.m = vector_from_json(j.at("m"));
  s.v = vector_from_json(j.at("v"));
  s.step = j.at("step");
  return s;
}

nlohmann::json to_json(const Checkpoint& ckpt) {
  nlohmann::json spec = nlohmann::json::array();
  for (const auto& s : ckpt.net.specs()) {
    spec.push_back({{"kind", layer_name(s.kind)}, {"in", s.in}, {"out", s.out}});
  }
  return {{"spec", spec},
          {"network", to_json(ckpt.net)},
          {"optimizer", to_json(ckpt.optimizer)},
          {"seed", ckpt.seed},
          {"step", ckpt.step}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint c;
  c.net = network_from_json(j.at("network"));
  c.optimizer = optim_from_json(j.at("optimizer"));
  c.seed = j.at("seed");
  c.step = j.at("step");
  return c;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace qaug
