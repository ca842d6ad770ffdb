#include "qaug/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "qaug/errors.hpp"
#include "qaug/hash.hpp"
#include "qaug/rng.hpp"

namespace qaug {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Streams of derive_seed(run seed, stream) used for each random consumer.
enum SeedStream : std::uint64_t {
  kTrainSubset = 1,
  kTestSubset = 2,
  kClassifierInit = 3,
  kClassifierShuffle = 4,
  kGenerators = 5,
  kAugment = 6,
  kRetrainShuffle = 7,
};

const std::vector<std::string> kStrategies{"general", "custom", "classic"};
constexpr const char* kBaseline = "none";

std::string generator_name(GeneratorKind k) { return k == GeneratorKind::Qgan ? "qgan" : "cgan"; }

GeneratorKind generator_from(const std::string& s) {
  if (s == "qgan") return GeneratorKind::Qgan;
  if (s == "cgan") return GeneratorKind::Cgan;
  throw ConfigError("generator must be qgan or cgan, got '" + s + "'");
}

std::uint64_t run_seed(const ExperimentConfig& c) { return c.seeds.front(); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

fs::path prepare_out(const ExperimentConfig& c) {
  fs::create_directories(c.out);
  return fs::path(c.out);
}

std::map<std::string, std::string> data_files(const ExperimentConfig& c) {
  return {{"train_images", c.data.train_images},
          {"train_labels", c.data.train_labels},
          {"test_images", c.data.test_images},
          {"test_labels", c.data.test_labels}};
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Runs fn(i) for i in [0, n) on up to thread_cap() threads; rethrows the first failure by index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, thread_cap());
  std::vector<std::exception_ptr> errors(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= n) return;
          i = next++;
        }
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct GeneratorRun {
  std::vector<SampleSource> sources;
  std::vector<GanHistory> histories;
  json models = json::array();
  std::vector<std::pair<std::int64_t, std::int64_t>> param_counts;  // (G, D) per class
};

GeneratorRun run_generators(const ExperimentConfig& c, const LabeledDataset& train,
                            const ClassConditioning& conditioning, std::uint64_t seed) {
  GeneratorRun r;
  GanTrainConfig base = c.gan;
  base.seed = derive_seed(seed, kGenerators);
  if (c.generator == GeneratorKind::Qgan) {
    QganConfig qc = c.qgan;
    qc.image_size = c.image_size;
    for (auto& m : train_class_qgans(train, qc, base, conditioning, &r.histories)) {
      r.models.push_back(to_json(m));
      r.param_counts.emplace_back(m.generator_parameter_count(), m.discriminator.parameter_count());
      r.sources.push_back(sample_source(std::move(m)));
    }
  } else {
    CganConfig cc = c.cgan;
    cc.image_size = c.image_size;
    for (auto& m : train_class_cgans(train, cc, base, conditioning, &r.histories)) {
      r.models.push_back(to_json(m));
      r.param_counts.emplace_back(m.generator.parameter_count(), m.discriminator.parameter_count());
      r.sources.push_back(sample_source(std::move(m)));
    }
  }
  return r;
}

ClassConditioning uniform_conditioning(const ExperimentConfig& c) {
  const std::size_t C = c.classes.size();
  return per_class_conditioning(c.gan.epochs, std::vector<double>(C, 1.0 / static_cast<double>(C)));
}

struct StrategyRun {
  std::vector<CurvePoint> curve;
  EvalReport report;
  std::vector<std::int64_t> counts;
  std::vector<std::string> warnings;
  std::optional<ErrorProfile> profile;
};

json report_summary(const StrategyRun& r, std::uint64_t seed) {
  json j = {{"seed", seed}, {"report", to_json(r.report)}, {"generated_counts", r.counts}, {"warnings", r.warnings}};
  if (r.profile) j["error_profile"] = to_json(*r.profile);
  return j;
}

AugmentedDataset build_augmented(const ExperimentConfig& c, const std::string& strategy, const DeskData& data,
                                 const HqcnnModel& classifier, std::uint64_t seed,
                                 const std::optional<std::vector<SampleSource>>& given_generators,
                                 const std::optional<std::vector<std::int64_t>>& error_counts) {
  AugmentConfig ac = c.augment;
  ac.seed = derive_seed(derive_seed(seed, kAugment), c.augment.seed);
  const Classifier clf = classifier_of(classifier);
  if (strategy == "classic") return classic_augment(data.train, ac.n_gen, ac.seed);
  if (strategy == "general") {
    const auto gens = given_generators ? *given_generators
                                       : run_generators(c, data.train, uniform_conditioning(c), seed).sources;
    return augment_general(clf, data.train, gens, ac.n_gen, ac.seed);
  }
  if (strategy == "custom") {
    const ErrorProfile profile =
        error_counts ? error_profile_from_counts(*error_counts) : compute_error_profile(clf, data.test);
    const auto gens =
        given_generators
            ? *given_generators
            : run_generators(c, data.train, per_class_conditioning(c.gan.epochs, profile.proportions), seed).sources;
    return augment_custom(clf, data.train, profile, gens, ac);
  }
  throw ConfigError("unknown strategy '" + strategy + "'");
}

}  // namespace

void ExperimentConfig::resolve() {
  if (classes.empty()) throw ConfigError("classes must not be empty");
  std::set<int> seen;
  for (int c : classes) {
    if (c < 0) throw ConfigError("class labels must be non-negative");
    if (!seen.insert(c).second) throw ConfigError("duplicate class " + std::to_string(c));
  }
  if (classes.size() < 2) throw ConfigError("need at least two classes");
  if (per_class < 1 || test_per_class < 1) throw ConfigError("per_class and test_per_class must be positive");
  if (weak_class >= static_cast<int>(classes.size())) throw ConfigError("weak_class is not a class index");
  if (weak_class >= 0 && weak_count > per_class) throw ConfigError("weak_count exceeds per_class");
  if (image_size < 4 || image_size > 28) throw ConfigError("image_size must lie in [4, 28]");
  hqcnn.image_size = image_size;
  hqcnn.n_classes = static_cast<int>(classes.size());
  qgan.image_size = image_size;
  cgan.image_size = image_size;
  auto qubits_ok = [](int n) { return n >= 1 && n <= kMaxQubits; };
  if (!qubits_ok(hqcnn.n_qubits) || !qubits_ok(qgan.n_qubits)) throw ConfigError("n_qubits must lie in [1, 12]");
  if (hqcnn.vqc_depth < 1 || qgan.depth < 1) throw ConfigError("circuit depth must be at least 1");
  if (hqcnn.conv_channels < 1) throw ConfigError("conv_channels must be positive");
  if (train.epochs < 0 || train.batch_size < 1 || !(train.learning_rate > 0.0)) {
    throw ConfigError("train: epochs >= 0, batch_size >= 1 and learning_rate > 0 required");
  }
  if (gan.epochs < 0 || gan.batch_size < 1 || gan.d_steps < 1 || gan.steps_per_epoch < 0 || !(gan.lr_g > 0.0) ||
      !(gan.lr_d > 0.0)) {
    throw ConfigError("gan: invalid epochs, batch_size, d_steps, steps_per_epoch or learning rates");
  }
  if (cgan.noise_dim < 1) throw ConfigError("cgan.noise_dim must be positive");
  if (qgan.post_hidden < 0) throw ConfigError("qgan.post_hidden must be non-negative");
  for (int h : qgan.disc_hidden) {
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
  }
  for (int h : cgan.gen_hidden) {
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
  }
  for (int h : cgan.disc_hidden) {
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
  }
  augment.validate();
  for (const auto& s : strategies) {
    if (std::find(kStrategies.begin(), kStrategies.end(), s) == kStrategies.end()) {
      throw ConfigError("unknown strategy '" + s + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (out.empty()) throw ConfigError("out must not be empty");
}

json to_json(const ExperimentConfig& c) {
  json hq = to_json(c.hqcnn);
  hq.erase("image_size");
  hq.erase("n_classes");
  json qg = to_json(c.qgan);
  qg.erase("image_size");
  json cg = to_json(c.cgan);
  cg.erase("image_size");
  return {{"data",
           {{"train_images", c.data.train_images},
            {"train_labels", c.data.train_labels},
            {"test_images", c.data.test_images},
            {"test_labels", c.data.test_labels}}},
          {"classes", c.classes},
          {"per_class", c.per_class},
          {"test_per_class", c.test_per_class},
          {"weak_class", c.weak_class},
          {"weak_count", c.weak_count},
          {"image_size", c.image_size},
          {"hqcnn", hq},
          {"train",
           {{"epochs", c.train.epochs},
            {"batch_size", c.train.batch_size},
            {"optimizer", optim_name(c.train.optimizer)},
            {"learning_rate", c.train.learning_rate}}},
          {"qgan", qg},
          {"cgan", cg},
          {"gan",
           {{"epochs", c.gan.epochs},
            {"batch_size", c.gan.batch_size},
            {"lr_g", c.gan.lr_g},
            {"lr_d", c.gan.lr_d},
            {"d_steps", c.gan.d_steps},
            {"steps_per_epoch", c.gan.steps_per_epoch}}},
          {"generator", generator_name(c.generator)},
          {"augment", to_json(c.augment)},
          {"strategies", c.strategies},
          {"retrain", c.warm_retrain ? "warm" : "fresh"},
          {"seeds", c.seeds},
          {"out", c.out}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"data",  "classes", "per_class", "test_per_class", "weak_class",
                                           "weak_count", "image_size", "hqcnn", "train", "qgan",
                                           "cgan", "gan", "generator", "augment", "strategies", "retrain",
                                           "seeds", "out"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  ExperimentConfig c;
  try {
    if (j.contains("data")) {
      const json& d = j.at("data");
      c.data.train_images = d.value("train_images", c.data.train_images);
      c.data.train_labels = d.value("train_labels", c.data.train_labels);
      c.data.test_images = d.value("test_images", c.data.test_images);
      c.data.test_labels = d.value("test_labels", c.data.test_labels);
    }
    c.classes = j.value("classes", c.classes);
    c.per_class = j.value("per_class", c.per_class);
    c.test_per_class = j.value("test_per_class", c.test_per_class);
    c.weak_class = j.value("weak_class", c.weak_class);
    c.weak_count = j.value("weak_count", c.weak_count);
    c.image_size = j.value("image_size", c.image_size);
    if (j.contains("hqcnn")) c.hqcnn = hqcnn_config_from_json(j.at("hqcnn"));
    if (j.contains("train")) {
      const json& t = j.at("train");
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.optimizer = optim_kind_from_name(t.value("optimizer", std::string(optim_name(c.train.optimizer))));
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    }
    if (j.contains("qgan")) c.qgan = qgan_config_from_json(j.at("qgan"));
    if (j.contains("cgan")) c.cgan = cgan_config_from_json(j.at("cgan"));
    if (j.contains("gan")) {
      const json& g = j.at("gan");
      c.gan.epochs = g.value("epochs", c.gan.epochs);
      c.gan.batch_size = g.value("batch_size", c.gan.batch_size);
      c.gan.lr_g = g.value("lr_g", c.gan.lr_g);
      c.gan.lr_d = g.value("lr_d", c.gan.lr_d);
      c.gan.d_steps = g.value("d_steps", c.gan.d_steps);
      c.gan.steps_per_epoch = g.value("steps_per_epoch", c.gan.steps_per_epoch);
    }
    c.generator = generator_from(j.value("generator", generator_name(c.generator)));
    if (j.contains("augment")) c.augment = augment_config_from_json(j.at("augment"));
    c.strategies = j.value("strategies", c.strategies);
    const std::string retrain = j.value("retrain", std::string("warm"));
    if (retrain != "warm" && retrain != "fresh") throw ConfigError("retrain must be warm or fresh");
    c.warm_retrain = retrain == "warm";
    c.seeds = j.value("seeds", c.seeds);
    c.out = j.value("out", c.out);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.resolve();
  return c;
}

ExperimentConfig load_experiment_config(const CliOverrides& o, EpochTarget epochs_apply_to) {
  thread_cap();  // reject a malformed QAUG_THREADS before any work starts
  json j = json::object();
  if (o.config_path) {
    std::ifstream in(*o.config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + *o.config_path);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(*o.config_path + ": " + e.what());
    }
  }
  ExperimentConfig c = experiment_config_from_json(j);
  if (o.seed) c.seeds = {*o.seed};
  if (o.out) c.out = *o.out;
  if (o.epochs) {
    if (epochs_apply_to == EpochTarget::Classifier) {
      c.train.epochs = *o.epochs;
    } else {
      c.gan.epochs = *o.epochs;
    }
  }
  c.resolve();
  return c;
}

unsigned thread_cap() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const char* env = std::getenv("QAUG_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("QAUG_THREADS must be a positive integer");
  return static_cast<unsigned>(std::min<long>(v, 1024));
}

DeskData load_desk_data(const ExperimentConfig& c, std::uint64_t seed) {
  const LabeledDataset train_pool = load_idx(c.data.train_images, c.data.train_labels);
  const LabeledDataset test_pool = load_idx(c.data.test_images, c.data.test_labels);
  DeskData d;
  const std::uint64_t train_seed = derive_seed(seed, kTrainSubset);
  const std::uint64_t test_seed = derive_seed(seed, kTestSubset);
  d.train = downscale(subset(train_pool, c.classes, c.per_class, train_seed), c.image_size);
  d.test = downscale(subset(test_pool, c.classes, c.test_per_class, test_seed), c.image_size);
  if (c.weak_class >= 0) d.train = truncate_class(d.train, c.weak_class, c.weak_count);

  json sources = json::object();
  for (const auto& [name, path] : data_files(c)) sources[name] = {{"path", path}, {"hash", git_blob_hash_file(path)}};
  d.manifest = {{"sources", sources},
                {"classes", c.classes},
                {"image_size", c.image_size},
                {"seed", seed},
                {"train", {{"per_class", c.per_class}, {"subset_seed", train_seed},
                           {"weak_class", c.weak_class}, {"weak_count", c.weak_count},
                           {"class_counts", d.train.class_counts()},
                           {"images_hash", git_blob_hash(encode_idx_images(d.train))},
                           {"labels_hash", git_blob_hash(encode_idx_labels(d.train))}}},
                {"test", {{"per_class", c.test_per_class}, {"subset_seed", test_seed},
                          {"class_counts", d.test.class_counts()},
                          {"images_hash", git_blob_hash(encode_idx_images(d.test))},
                          {"labels_hash", git_blob_hash(encode_idx_labels(d.test))}}}};
  return d;
}

json provenance(const ExperimentConfig& c, const std::map<std::string, std::string>& input_files) {
  json inputs = json::object();
  for (const auto& [name, path] : input_files) inputs[name] = {{"path", path}, {"hash", git_blob_hash_file(path)}};
  json p = {{"config", to_json(c)}, {"inputs", inputs}};
  p["inputs_hash"] = git_blob_hash(p.dump());
  return p;
}

std::vector<SampleSource> train_generators(const ExperimentConfig& c, const LabeledDataset& train,
                                           const ClassConditioning& conditioning, std::uint64_t seed,
                                           std::vector<GanHistory>* histories, json* checkpoint) {
  GeneratorRun r = run_generators(c, train, conditioning, seed);
  if (histories) *histories = r.histories;
  if (checkpoint) {
    *checkpoint = {{"kind", "generators"},
                   {"generator", generator_name(c.generator)},
                   {"conditioning", {{"weights", conditioning.weights}, {"epoch_budgets", conditioning.epoch_budgets}}},
                   {"models", r.models}};
  }
  return r.sources;
}

std::vector<SampleSource> load_generators(const std::string& path) {
  const json j = read_json_file(path);
  if (j.value("kind", "") != "generators") throw FormatError(path + " is not a generator checkpoint");
  std::vector<SampleSource> out;
  try {
    const GeneratorKind kind = generator_from(j.at("generator").get<std::string>());
    for (const auto& m : j.at("models")) {
      out.push_back(kind == GeneratorKind::Qgan ? sample_source(qgan_from_json(m)) : sample_source(cgan_from_json(m)));
    }
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return out;
}

TrainedClassifier train_classifier(const ExperimentConfig& c, const LabeledDataset& train,
                                   const LabeledDataset& test, std::uint64_t seed, const HqcnnModel* init) {
  HqcnnTrainConfig tc = c.train;
  tc.seed = derive_seed(seed, init ? kRetrainShuffle : kClassifierShuffle);
  TrainedClassifier out;
  auto on_epoch = [&](const EpochStats& s, const HqcnnModel& m) {
    out.curve.push_back({s.epoch, s.loss, s.train_accuracy, hqcnn_evaluate(m, test).overall_accuracy});
  };
  HqcnnTrainResult r =
      hqcnn_train(init ? *init : make_hqcnn(c.hqcnn, derive_seed(seed, kClassifierInit)), train, tc, on_epoch);
  out.model = std::move(r.model);
  out.optimizer = std::move(r.optimizer);
  out.report = hqcnn_evaluate(out.model, test);
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream os;
  os << "epoch,loss,train_accuracy,test_accuracy\n";
  for (const auto& p : curve) {
    os << p.epoch << ',' << fmt(p.loss) << ',' << fmt(p.train_accuracy) << ',' << fmt(p.test_accuracy) << '\n';
  }
  return os.str();
}

CompareResult run_compare(const ExperimentConfig& c) {
  std::vector<std::string> names{kBaseline};
  for (const auto& s : c.strategies) names.push_back(s);

  // runs[seed index][strategy index]
  std::vector<std::vector<StrategyRun>> runs(c.seeds.size(), std::vector<StrategyRun>(names.size()));
  std::vector<json> manifests(c.seeds.size());
  parallel_for(c.seeds.size(), [&](std::size_t si) {
    const std::uint64_t seed = c.seeds[si];
    const DeskData data = load_desk_data(c, seed);
    manifests[si] = data.manifest;
    const TrainedClassifier base = train_classifier(c, data.train, data.test, seed);
    const HqcnnModel* start = c.warm_retrain ? &base.model : nullptr;
    if (c.warm_retrain) {
      const TrainedClassifier t = train_classifier(c, data.train, data.test, seed, start);
      runs[si][0] = {t.curve, t.report, std::vector<std::int64_t>(c.classes.size(), 0), {}, std::nullopt};
    } else {
      runs[si][0] = {base.curve, base.report, std::vector<std::int64_t>(c.classes.size(), 0), {}, std::nullopt};
    }
    for (std::size_t k = 1; k < names.size(); ++k) {
      const AugmentedDataset aug = build_augmented(c, names[k], data, base.model, seed, std::nullopt, std::nullopt);
      const TrainedClassifier t = train_classifier(c, aug.combined(), data.test, seed, start);
      runs[si][k] = {t.curve, t.report, aug.counts, aug.warnings, aug.profile};
    }
  });

  CompareResult result;
  json strategies = json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<double> overall, average;
    std::vector<std::vector<double>> per_class(c.classes.size());
    json per_seed = json::array();
    for (std::size_t si = 0; si < c.seeds.size(); ++si) {
      const StrategyRun& r = runs[si][k];
      overall.push_back(r.report.overall_accuracy);
      average.push_back(r.report.average_accuracy);
      for (std::size_t i = 0; i < per_class.size(); ++i) {
        per_class[i].push_back(r.report.per_class_accuracy.at(i).value_or(0.0));
      }
      per_seed.push_back(report_summary(r, c.seeds[si]));
    }
    json pc = json::array();
    for (const auto& v : per_class) pc.push_back(to_json(mean_std(v)));

    std::ostringstream csv;
    csv << "epoch,mean_test_accuracy,std_test_accuracy,mean_loss,std_loss\n";
    json curve = json::array();
    for (int e = 0; e < c.train.epochs; ++e) {
      std::vector<double> acc, loss;
      for (std::size_t si = 0; si < c.seeds.size(); ++si) {
        acc.push_back(runs[si][k].curve.at(static_cast<std::size_t>(e)).test_accuracy);
        loss.push_back(runs[si][k].curve.at(static_cast<std::size_t>(e)).loss);
      }
      const MeanStd a = mean_std(acc), l = mean_std(loss);
      curve.push_back({{"epoch", e + 1}, {"test_accuracy", to_json(a)}, {"loss", to_json(l)}});
      csv << e + 1 << ',' << fmt(a.mean) << ',' << fmt(a.std) << ',' << fmt(l.mean) << ',' << fmt(l.std) << '\n';
    }
    result.curves[names[k]] = csv.str();
    strategies.push_back({{"name", names[k]},
                          {"final",
                           {{"overall_accuracy", to_json(mean_std(overall))},
                            {"average_accuracy", to_json(mean_std(average))},
                            {"per_class_accuracy", pc}}},
                          {"curve", curve},
                          {"curve_csv", {{"file", "curves/" + names[k] + ".csv"},
                                         {"hash", git_blob_hash(result.curves[names[k]])}}},
                          {"per_seed", per_seed}});
  }

  json j = provenance(c, data_files(c));
  j["subsets"] = manifests;
  j["strategies"] = strategies;
  j["determinism_hash"] = git_blob_hash(j.dump());
  j["generated_at"] = utc_timestamp();
  result.summary = std::move(j);
  return result;
}

json without_timestamp(const json& summary) {
  json j = summary;
  j.erase("generated_at");
  return j;
}

void cmd_train_hqcnn(const ExperimentConfig& c) {
  const fs::path out = prepare_out(c);
  const std::uint64_t seed = run_seed(c);
  const DeskData data = load_desk_data(c, seed);
  const TrainedClassifier t = train_classifier(c, data.train, data.test, seed);
  const json prov = provenance(c, data_files(c));

  const std::string csv = curve_csv(t.curve);
  write_text(out / "curve.csv", csv);
  json ckpt = hqcnn_checkpoint(t.model, &t.optimizer, derive_seed(seed, kClassifierInit), t.optimizer.step);
  ckpt["provenance"] = prov;
  write_json_file((out / "checkpoint.json").string(), ckpt);
  json sm = data.manifest;
  sm["provenance"] = prov;
  write_json_file((out / "subset_manifest.json").string(), sm);

  json m = prov;
  m["seed"] = seed;
  m["report"] = to_json(t.report);
  m["history"] = json::array();
  for (const auto& p : t.curve) {
    m["history"].push_back(
        {{"epoch", p.epoch}, {"loss", p.loss}, {"train_accuracy", p.train_accuracy}, {"test_accuracy", p.test_accuracy}});
  }
  m["curve_csv"] = {{"file", "curve.csv"}, {"hash", git_blob_hash(csv)}};
  m["subset"] = data.manifest;
  write_json_file((out / "metrics.json").string(), m);
}

void cmd_train_gan(const ExperimentConfig& config, GeneratorKind kind) {
  ExperimentConfig c = config;
  c.generator = kind;
  const fs::path out = prepare_out(c);
  const std::uint64_t seed = run_seed(c);
  const DeskData data = load_desk_data(c, seed);
  const ClassConditioning cond = uniform_conditioning(c);
  const GeneratorRun r = run_generators(c, data.train, cond, seed);
  const json prov = provenance(c, data_files(c));

  GanHistory all;
  json classes = json::array();
  for (std::size_t i = 0; i < r.histories.size(); ++i) {
    const std::string csv = history_csv(r.histories[i]);
    const fs::path dir = out / ("class_" + std::to_string(i));
    fs::create_directories(dir);
    write_text(dir / "history.csv", csv);
    for (GanStep s : r.histories[i].steps) {
      s.step = static_cast<std::int64_t>(all.steps.size()) + 1;
      all.steps.push_back(s);
    }
    json cls = {{"class", i},
                {"epochs", cond.epoch_budgets[i]},
                {"steps", r.histories[i].steps.size()},
                {"generator_params", r.param_counts[i].first},
                {"discriminator_params", r.param_counts[i].second},
                {"history_csv", {{"file", "class_" + std::to_string(i) + "/history.csv"}, {"hash", git_blob_hash(csv)}}}};
    if (!r.histories[i].steps.empty()) {
      const GanStep& last = r.histories[i].steps.back();
      cls["final"] = {{"d_loss", last.d_loss}, {"g_loss", last.g_loss}, {"V", last.value}};
    }
    classes.push_back(cls);
  }
  const std::string csv = history_csv(all);
  write_text(out / "history.csv", csv);

  json ckpt = {{"kind", "generators"},
               {"generator", generator_name(kind)},
               {"seed", derive_seed(seed, kGenerators)},
               {"step", all.steps.size()},
               {"conditioning", {{"weights", cond.weights}, {"epoch_budgets", cond.epoch_budgets}}},
               {"models", r.models},
               {"provenance", prov}};
  write_json_file((out / "checkpoint.json").string(), ckpt);

  json m = prov;
  m["generator"] = generator_name(kind);
  m["seed"] = seed;
  m["steps"] = all.steps.size();
  m["classes"] = classes;
  m["history_csv"] = {{"file", "history.csv"}, {"hash", git_blob_hash(csv)}};
  m["subset"] = data.manifest;
  write_json_file((out / "metrics.json").string(), m);
}

void cmd_augment(const ExperimentConfig& c, const AugmentInputs& in) {
  if (std::find(kStrategies.begin(), kStrategies.end(), in.strategy) == kStrategies.end()) {
    throw ConfigError("unknown strategy '" + in.strategy + "'");
  }
  if (in.error_counts && in.error_counts->size() != c.classes.size()) {
    throw ConfigError("--error-counts needs one value per class");
  }
  const fs::path out = prepare_out(c);
  const std::uint64_t seed = run_seed(c);
  const DeskData data = load_desk_data(c, seed);

  std::map<std::string, std::string> files = data_files(c);
  HqcnnModel model;
  if (in.model_path) {
    model = hqcnn_from_checkpoint(read_json_file(*in.model_path));
    if (model.config.n_classes != static_cast<int>(c.classes.size()) || model.config.image_size != c.image_size) {
      throw ConsistencyError("model checkpoint does not match the configured classes or image size");
    }
    files["model"] = *in.model_path;
  } else if (in.strategy != "classic") {
    model = train_classifier(c, data.train, data.test, seed).model;
  }
  std::optional<std::vector<SampleSource>> gens;
  if (in.generators_path) {
    gens = load_generators(*in.generators_path);
    files["generators"] = *in.generators_path;
  }
  const AugmentedDataset aug = build_augmented(c, in.strategy, data, model, seed, gens, in.error_counts);

  json prov = provenance(c, files);
  prov["subset"] = data.manifest;
  save_augmented(out.string(), aug, prov);
  json sm = data.manifest;
  sm["provenance"] = provenance(c, files);
  write_json_file((out / "subset_manifest.json").string(), sm);
}

void cmd_compare(const ExperimentConfig& c) {
  const fs::path out = prepare_out(c);
  const CompareResult r = run_compare(c);
  fs::create_directories(out / "curves");
  for (const auto& [name, csv] : r.curves) write_text(out / "curves" / (name + ".csv"), csv);
  write_json_file((out / "comparison.json").string(), r.summary);
}

void cmd_evaluate(const ExperimentConfig& c, const std::string& model_path) {
  const fs::path out = prepare_out(c);
  const HqcnnModel model = hqcnn_from_checkpoint(read_json_file(model_path));
  if (model.config.n_classes != static_cast<int>(c.classes.size()) || model.config.image_size != c.image_size) {
    throw ConsistencyError("model checkpoint does not match the configured classes or image size");
  }
  const DeskData data = load_desk_data(c, run_seed(c));
  std::map<std::string, std::string> files = data_files(c);
  files["model"] = model_path;
  json m = provenance(c, files);
  m["report"] = to_json(hqcnn_evaluate(model, data.test));
  m["subset"] = data.manifest;
  write_json_file((out / "metrics.json").string(), m);
}

int run_guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const LengthError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ConsistencyError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const CapacityError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace qaug
