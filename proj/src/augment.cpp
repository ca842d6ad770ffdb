#include "qaug/augment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "qaug/apportion.hpp"
#include "qaug/errors.hpp"
#include "qaug/hash.hpp"
#include "qaug/rng.hpp"

namespace qaug {
namespace {

static_assert(std::endian::native == std::endian::little, "generated.bin is written in host order");

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kBinaryName = "generated.bin";

void check_generators(const std::vector<SampleSource>& generators, int n_classes) {
  if (static_cast<int>(generators.size()) != n_classes) {
    throw ShapeError("expected one generator per class (" + std::to_string(n_classes) + "), got " +
                     std::to_string(generators.size()));
  }
}

void require_trained(const SampleSource& g, int c) {
  if (!g.trained || !g.generate) {
    throw ConfigError("generator for class " + std::to_string(c) + " (" + g.name + ") is not trained");
  }
}

std::vector<std::int64_t> tally(const std::vector<GeneratedSample>& gen, int n_classes) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (const auto& s : gen) ++counts.at(static_cast<std::size_t>(s.label));
  return counts;
}

AugmentedDataset start(const std::string& strategy, const LabeledDataset& train_set) {
  train_set.validate();
  if (train_set.n_classes() < 1) throw DataError("training set has no classes");
  AugmentedDataset aug;
  aug.strategy = strategy;
  aug.original = train_set;
  return aug;
}

double pixel(const Tensor& img, Eigen::Index y, Eigen::Index x) {
  if (y < 0 || x < 0 || y >= img.dim(0) || x >= img.dim(1)) return 0.0;
  return img[y * img.dim(1) + x];
}

void check_2d(const Tensor& image) {
  if (image.rank() != 2) throw ShapeError("expected an [H, W] image, got " + shape_string(image.shape()));
}

}  // namespace

Classifier classifier_of(const HqcnnModel& model) {
  return [&model](const Tensor& image) { return hqcnn_predict(model, image); };
}

ErrorProfile error_profile_from_counts(const std::vector<std::int64_t>& errors) {
  if (errors.empty()) throw ShapeError("error profile needs at least one class");
  ErrorProfile p;
  p.errors = errors;
  for (auto e : errors) {
    if (e < 0) throw ConfigError("error counts must be non-negative");
    p.total += e;
  }
  const auto C = errors.size();
  p.proportions.assign(C, 1.0 / static_cast<double>(C));
  if (p.total > 0) {
    for (std::size_t i = 0; i < C; ++i) {
      p.proportions[i] = static_cast<double>(errors[i]) / static_cast<double>(p.total);
    }
  }
  return p;
}

ErrorProfile compute_error_profile(const Classifier& classifier, const LabeledDataset& test_set) {
  if (test_set.empty()) throw DataError("error profile needs a non-empty test set");
  std::vector<std::int64_t> errors(static_cast<std::size_t>(test_set.n_classes()), 0);
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const int y = test_set.labels[i];
    if (classifier(test_set.images[i]).label != y) ++errors.at(static_cast<std::size_t>(y));
  }
  return error_profile_from_counts(errors);
}

std::vector<std::int64_t> allocate_counts(std::int64_t n_gen, const ErrorProfile& profile) {
  if (n_gen < 0) throw ConfigError("N_gen must be non-negative");
  if (profile.total > 0) return largest_remainder(n_gen, profile.errors);
  return largest_remainder(n_gen, profile.proportions);
}

std::vector<std::int64_t> allocate_counts(std::int64_t n_gen, const std::vector<double>& R) {
  if (n_gen < 0) throw ConfigError("N_gen must be non-negative");
  return largest_remainder(n_gen, R);
}

std::vector<std::int64_t> even_counts(std::int64_t n, int n_classes) {
  if (n < 0) throw ConfigError("N_gen must be non-negative");
  if (n_classes < 1) throw ConfigError("need at least one class");
  const auto C = static_cast<std::size_t>(n_classes);
  std::vector<std::int64_t> out(C, n / n_classes);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n % n_classes); ++i) ++out[i];
  return out;
}

void AugmentConfig::validate() const {
  if (n_gen < 0) throw ConfigError("augment.n_gen must be non-negative");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("augment.tau must lie in (0, 1)");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("augment.alpha and augment.beta must be non-negative");
  if (max_attempts < 1) throw ConfigError("augment.max_attempts must be at least 1");
}

std::vector<double> class_thresholds(const AugmentConfig& config, const ErrorProfile& profile) {
  config.validate();
  const auto C = profile.proportions.size();
  std::vector<double> tau(C);
  for (std::size_t i = 0; i < C; ++i) {
    const double r = profile.proportions[i];
    // R[i] > 1/C, compared as R[i] * C > 1 to avoid rounding 1/C.
    const bool large = r * static_cast<double>(C) > 1.0;
    const double t = large ? config.tau - config.alpha * r : config.tau + config.beta * r;
    tau[i] = std::clamp(t, kMinThreshold, kMaxThreshold);
  }
  return tau;
}

std::vector<GeneratedSample> filter_samples(const Classifier& classifier, const std::vector<Tensor>& samples,
                                            int class_i, double tau) {
  std::vector<GeneratedSample> kept;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Prediction p = classifier(samples[k]);
    if (p.label == class_i && p.confidence >= tau) {
      GeneratedSample s;
      s.image = samples[k];
      s.label = class_i;
      s.confidence = p.confidence;
      s.index = k;
      kept.push_back(std::move(s));
    }
  }
  return kept;
}

SampleSource sample_source(QganModel model) {
  SampleSource s;
  s.name = "qgan";
  s.trained = model.trained;
  s.generate = [m = std::move(model)](std::size_t n, std::uint64_t seed) { return generate_samples(m, n, seed); };
  return s;
}

SampleSource sample_source(ClassicalGan model) {
  SampleSource s;
  s.name = "cgan";
  s.trained = model.trained;
  s.generate = [m = std::move(model)](std::size_t n, std::uint64_t seed) { return generate_samples(m, n, seed); };
  return s;
}

LabeledDataset AugmentedDataset::combined() const {
  LabeledDataset out = original;
  for (const auto& s : generated) out.push_back(s.image, s.label);
  return out;
}

AugmentedDataset augment_general(const Classifier& classifier, const LabeledDataset& train_set,
                                 const std::vector<SampleSource>& generators, std::int64_t n_gen,
                                 std::uint64_t seed) {
  AugmentedDataset aug = start("general", train_set);
  const int C = train_set.n_classes();
  check_generators(generators, C);
  aug.requested = even_counts(n_gen, C);
  for (int c = 0; c < C; ++c) {
    const auto n = static_cast<std::size_t>(aug.requested[static_cast<std::size_t>(c)]);
    if (n == 0) continue;
    require_trained(generators[static_cast<std::size_t>(c)], c);
    const std::uint64_t batch_seed = derive_seed(derive_seed(seed, static_cast<std::uint64_t>(c)), 1);
    const auto images = generators[static_cast<std::size_t>(c)].generate(n, batch_seed);
    if (images.size() != n) throw ConsistencyError("generator returned the wrong number of samples");
    for (std::size_t k = 0; k < n; ++k) {
      GeneratedSample s;
      s.image = images[k];
      s.label = c;
      if (classifier) {
        const Prediction p = classifier(images[k]);
        s.confidence = p.probs(c);
      }
      s.attempt = 1;
      s.seed = batch_seed;
      s.index = k;
      s.source = generators[static_cast<std::size_t>(c)].name;
      aug.generated.push_back(std::move(s));
    }
  }
  aug.counts = tally(aug.generated, C);
  return aug;
}

AugmentedDataset augment_custom(const Classifier& classifier, const LabeledDataset& train_set,
                                const LabeledDataset& test_set, const std::vector<SampleSource>& generators,
                                const AugmentConfig& config) {
  return augment_custom(classifier, train_set, compute_error_profile(classifier, test_set), generators, config);
}

AugmentedDataset augment_custom(const Classifier& classifier, const LabeledDataset& train_set,
                                const ErrorProfile& profile, const std::vector<SampleSource>& generators,
                                const AugmentConfig& config) {
  config.validate();
  AugmentedDataset aug = start("custom", train_set);
  const int C = train_set.n_classes();
  check_generators(generators, C);
  if (static_cast<int>(profile.errors.size()) != C) throw ShapeError("error profile does not match the class count");
  if (!classifier) throw ConfigError("custom augmentation needs a classifier");
  aug.profile = profile;
  aug.requested = allocate_counts(config.n_gen, profile);
  aug.thresholds = class_thresholds(config, profile);

  for (int c = 0; c < C; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const auto need = static_cast<std::size_t>(aug.requested[ci]);
    if (need == 0) continue;
    require_trained(generators[ci], c);
    std::vector<GeneratedSample> accepted;
    for (int attempt = 1; attempt <= config.max_attempts && accepted.size() < need; ++attempt) {
      const std::uint64_t batch_seed =
          derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(c)), static_cast<std::uint64_t>(attempt));
      const auto images = generators[ci].generate(3 * need, batch_seed);
      for (auto& s : filter_samples(classifier, images, c, aug.thresholds[ci])) {
        s.attempt = attempt;
        s.seed = batch_seed;
        s.source = generators[ci].name;
        accepted.push_back(std::move(s));
      }
    }
    if (accepted.size() > need) accepted.resize(need);
    if (accepted.size() < need) {
      aug.warnings.push_back("class " + std::to_string(c) + ": accepted " + std::to_string(accepted.size()) +
                             " of " + std::to_string(need) + " samples after " +
                             std::to_string(config.max_attempts) + " attempts");
    }
    for (auto& s : accepted) aug.generated.push_back(std::move(s));
  }
  aug.counts = tally(aug.generated, C);
  return aug;
}

Tensor rotate_image(const Tensor& image, double degrees) {
  check_2d(image);
  if (degrees == 0.0) return image;
  const Eigen::Index H = image.dim(0), W = image.dim(1);
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cy = 0.5 * static_cast<double>(H - 1), cx = 0.5 * static_cast<double>(W - 1);
  Tensor out(image.shape());
  for (Eigen::Index y = 0; y < H; ++y) {
    for (Eigen::Index x = 0; x < W; ++x) {
      // Inverse map: sample the source at the point that rotates onto (y, x).
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const auto x0 = static_cast<Eigen::Index>(fx), y0 = static_cast<Eigen::Index>(fy);
      const double ax = sx - fx, ay = sy - fy;
      const double v = (1 - ay) * ((1 - ax) * pixel(image, y0, x0) + ax * pixel(image, y0, x0 + 1)) +
                       ay * ((1 - ax) * pixel(image, y0 + 1, x0) + ax * pixel(image, y0 + 1, x0 + 1));
      out[y * W + x] = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

Tensor translate_image(const Tensor& image, int dx, int dy) {
  check_2d(image);
  const Eigen::Index H = image.dim(0), W = image.dim(1);
  Tensor out(image.shape());
  for (Eigen::Index y = 0; y < H; ++y) {
    for (Eigen::Index x = 0; x < W; ++x) out[y * W + x] = pixel(image, y - dy, x - dx);
  }
  return out;
}

Tensor contrast_image(const Tensor& image, double factor) {
  check_2d(image);
  const double mean = image.data().mean();
  Tensor out(image.shape());
  for (Eigen::Index i = 0; i < image.size(); ++i) out[i] = std::clamp(mean + factor * (image[i] - mean), 0.0, 1.0);
  return out;
}

AugmentedDataset classic_augment(const LabeledDataset& train_set, std::int64_t n_gen, std::uint64_t seed) {
  AugmentedDataset aug = start("classic", train_set);
  const int C = train_set.n_classes();
  aug.requested = even_counts(n_gen, C);
  for (int c = 0; c < C; ++c) {
    const auto n = static_cast<std::size_t>(aug.requested[static_cast<std::size_t>(c)]);
    if (n == 0) continue;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < train_set.size(); ++i) {
      if (train_set.labels[i] == c) pool.push_back(i);
    }
    if (pool.empty()) throw DataError("class " + std::to_string(c) + " has no images to transform");
    const std::uint64_t class_seed = derive_seed(seed, static_cast<std::uint64_t>(c));
    Rng rng(class_seed);
    for (std::size_t k = 0; k < n; ++k) {
      const Tensor& src = train_set.images[pool[rng.below(pool.size())]];
      Tensor img;
      std::string op;
      switch (rng.below(3)) {
        case 0:
          img = rotate_image(src, rng.uniform(-kMaxRotationDegrees, kMaxRotationDegrees));
          op = "rotate";
          break;
        case 1: {
          const int dx = static_cast<int>(rng.below(2 * kMaxShift + 1)) - kMaxShift;
          const int dy = static_cast<int>(rng.below(2 * kMaxShift + 1)) - kMaxShift;
          img = translate_image(src, dx, dy);
          op = "translate";
          break;
        }
        default:
          img = contrast_image(src, rng.uniform(kContrastLow, kContrastHigh));
          op = "contrast";
          break;
      }
      GeneratedSample s;
      s.image = std::move(img);
      s.label = c;
      s.attempt = 1;
      s.seed = class_seed;
      s.index = k;
      s.source = op;
      aug.generated.push_back(std::move(s));
    }
  }
  aug.counts = tally(aug.generated, C);
  return aug;
}

std::vector<std::vector<GeneratedSample>> quality_vs_quantity_bands(const Classifier& classifier,
                                                                    const std::vector<Tensor>& samples, int class_i,
                                                                    const std::vector<ConfidenceBand>& bands) {
  for (const auto& b : bands) {
    if (!(b.low < b.high)) throw ConfigError("confidence band must satisfy low < high");
  }
  std::vector<std::size_t> order(bands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bands[a].low < bands[b].low; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (bands[order[k]].low < bands[order[k - 1]].high) throw ConfigError("confidence bands overlap");
  }

  std::vector<std::vector<GeneratedSample>> out(bands.size());
  for (auto& s : filter_samples(classifier, samples, class_i, 0.0)) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
      if (s.confidence >= bands[b].low && s.confidence < bands[b].high) {
        if (out[b].size() < bands[b].quota) out[b].push_back(std::move(s));
        break;
      }
    }
  }
  return out;
}

nlohmann::json to_json(const ErrorProfile& p) {
  return {{"E", p.errors}, {"E_total", p.total}, {"R", p.proportions}};
}

nlohmann::json to_json(const AugmentConfig& c) {
  return {{"n_gen", c.n_gen},   {"tau", c.tau},
          {"alpha", c.alpha},   {"beta", c.beta},
          {"max_attempts", c.max_attempts}, {"seed", c.seed}};
}

AugmentConfig augment_config_from_json(const nlohmann::json& j) {
  AugmentConfig c;
  c.n_gen = j.value("n_gen", c.n_gen);
  c.tau = j.value("tau", c.tau);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.max_attempts = j.value("max_attempts", c.max_attempts);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

void save_augmented(const std::string& dir, const AugmentedDataset& aug, const nlohmann::json& provenance) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::string blob;
  nlohmann::json samples = nlohmann::json::array();
  Shape shape;
  for (const auto& s : aug.generated) {
    if (shape.empty()) shape = s.image.shape();
    if (s.image.shape() != shape) throw ShapeError("generated images differ in shape");
    const std::size_t offset = blob.size() / sizeof(double);
    blob.append(reinterpret_cast<const char*>(s.image.data().data()),
                static_cast<std::size_t>(s.image.size()) * sizeof(double));
    samples.push_back({{"class", s.label},
                       {"confidence", s.confidence},
                       {"attempt", s.attempt},
                       {"seed", s.seed},
                       {"index", s.index},
                       {"source", s.source},
                       {"offset", offset}});
  }
  if (shape.empty() && !aug.original.empty()) shape = aug.original.images.front().shape();

  {
    std::ofstream out(fs::path(dir) / kBinaryName, std::ios::binary);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw DataError("cannot write " + (fs::path(dir) / kBinaryName).string());
  }

  LabeledDataset orig = aug.original;
  nlohmann::json m = provenance;
  m["strategy"] = aug.strategy;
  m["image_shape"] = shape;
  m["dtype"] = "float64-le";
  m["n_classes"] = aug.original.n_classes();
  m["original"] = {{"size", aug.original.size()},
                   {"class_counts", aug.original.class_counts()},
                   {"images_hash", git_blob_hash(encode_idx_images(orig))},
                   {"labels_hash", git_blob_hash(encode_idx_labels(orig))}};
  m["requested"] = aug.requested;
  m["counts"] = aug.counts;
  m["warnings"] = aug.warnings;
  if (aug.profile) m["error_profile"] = to_json(*aug.profile);
  if (!aug.thresholds.empty()) m["thresholds"] = aug.thresholds;
  m["binary"] = {{"file", kBinaryName}, {"hash", git_blob_hash(blob)}};
  m["samples"] = samples;
  write_json_file((fs::path(dir) / kManifestName).string(), m);
}

AugmentedDataset load_augmented(const std::string& dir, const LabeledDataset& original) {
  namespace fs = std::filesystem;
  const nlohmann::json m = read_json_file((fs::path(dir) / kManifestName).string());
  const auto bytes = read_maybe_gzip((fs::path(dir) / kBinaryName).string());
  const std::string blob(bytes.begin(), bytes.end());
  if (m.at("binary").at("hash").get<std::string>() != git_blob_hash(blob)) {
    throw ConsistencyError("generated.bin does not match its manifest hash");
  }
  if (m.at("n_classes").get<int>() != original.n_classes()) {
    throw ConsistencyError("augmented dataset was built for a different class count");
  }
  AugmentedDataset aug;
  aug.strategy = m.at("strategy").get<std::string>();
  aug.original = original;
  const Shape shape = m.at("image_shape").get<Shape>();
  const Eigen::Index n = shape_size(shape);
  for (const auto& js : m.at("samples")) {
    const auto offset = js.at("offset").get<std::size_t>();
    if ((offset + static_cast<std::size_t>(n)) * sizeof(double) > blob.size()) {
      throw LengthError("generated.bin is shorter than the manifest requires");
    }
    Eigen::VectorXd data(n);
    std::memcpy(data.data(), blob.data() + offset * sizeof(double), static_cast<std::size_t>(n) * sizeof(double));
    GeneratedSample s;
    s.image = Tensor(shape, std::move(data));
    s.label = js.at("class").get<int>();
    s.confidence = js.at("confidence").get<double>();
    s.attempt = js.at("attempt").get<int>();
    s.seed = js.at("seed").get<std::uint64_t>();
    s.index = js.at("index").get<std::size_t>();
    s.source = js.at("source").get<std::string>();
    aug.generated.push_back(std::move(s));
  }
  aug.requested = m.at("requested").get<std::vector<std::int64_t>>();
  aug.counts = m.at("counts").get<std::vector<std::int64_t>>();
  aug.warnings = m.at("warnings").get<std::vector<std::string>>();
  if (m.contains("error_profile")) {
    aug.profile = error_profile_from_counts(m.at("error_profile").at("E").get<std::vector<std::int64_t>>());
  }
  if (m.contains("thresholds")) aug.thresholds = m.at("thresholds").get<std::vector<double>>();
  return aug;
}

}  // namespace qaug
