// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails. Run from the project root (data/ is read relative to it).
// Usage: qaug_acceptance [AC-n ...]   (no arguments runs all criteria)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qaug/augment.hpp"
#include "qaug/dataset.hpp"
#include "qaug/errors.hpp"
#include "qaug/experiment.hpp"
#include "qaug/hqcnn.hpp"
#include "qaug/qgan.hpp"
#include "qaug/quantum.hpp"
#include "qaug/vqc.hpp"

using namespace qaug;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
const std::vector<std::uint64_t> kFiveSeeds{0, 1, 2, 3, 4};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- AC-1
Outcome ac1_gate_oracle() {
  Rng rng(1);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int n = 1; n <= 4; ++n) {
    std::vector<GateOp> gates;
    for (int k = 0; k <= static_cast<int>(GateKind::Phase); ++k) {
      const auto kind = static_cast<GateKind>(k);
      for (int q = 0; q < n; ++q) {
        GateOp g{kind, q, std::nullopt, std::nullopt};
        if (takes_angle(kind)) g.angle = rng.uniform(-kPi, kPi);
        gates.push_back(g);
      }
    }
    for (int c = 0; c < n; ++c)
      for (int t = 0; t < n; ++t)
        if (c != t) gates.push_back(GateOp::cnot(c, t));

    const Eigen::Index dim = Eigen::Index{1} << n;
    for (const GateOp& g : gates) {
      const oracle::CMat u = oracle::dense_operator(n, g);
      for (Eigen::Index b = 0; b < dim; ++b) {
        StateVector::Amplitudes e = StateVector::Amplitudes::Zero(dim);
        e(b) = 1.0;
        const StateVector out = apply_gate(StateVector::from_amplitudes(n, e), g);
        worst = std::max(worst, (out.amplitudes() - u * e).cwiseAbs().maxCoeff());
        ++checks;
      }
    }
  }
  return {worst <= 1e-12, "max |amp - oracle| = " + num(worst) + " over " + std::to_string(checks) +
                              " gate/basis-state pairs (tol 1e-12)"};
}

// ---------------------------------------------------------------- AC-2
Outcome ac2_parameter_shift() {
  Rng rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const int depth = 1 + static_cast<int>(rng.below(3));
    const ParamCircuit pc = build_ansatz({n, depth, trial % 2 ? Entangler::Linear : Entangler::Ring});
    const Eigen::VectorXd p = random_params(pc.n_params(), rng);
    Eigen::VectorXd angles(n), w(n);
    for (int q = 0; q < n; ++q) {
      angles(q) = rng.uniform(-kPi, kPi);
      w(q) = rng.uniform(-1.0, 1.0);
    }
    const StateVector in = angle_encode(angles);
    const auto measured = all_qubits(n);
    const Eigen::VectorXd g = param_shift_grad(pc, p, in, measured, w);
    const Eigen::VectorXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& x) { return w.dot(vqc_forward(pc, x, in, measured)); }, p, 1e-5);
    worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-5, "max |shift - FD| = " + num(worst) + " over 100 cases (tol 1e-5)"};
}

// ---------------------------------------------------------------- AC-3
Outcome ac3_hybrid_gradient() {
  ExperimentConfig c;
  c.resolve();
  const DeskData data = load_desk_data(c, 0);
  HqcnnModel m = make_hqcnn(c.hqcnn, 3);
  const std::vector<Tensor> images{data.train.images[0], data.train.images[150]};
  const std::vector<int> labels{data.train.labels[0], data.train.labels[150]};
  const Eigen::VectorXd g = hqcnn_loss_grad(m, images, labels).flat();
  const Eigen::VectorXd fd = oracle::central_difference(
      [&](const Eigen::VectorXd& p) {
        HqcnnModel mm = m;
        set_hqcnn_parameters(mm, p);
        return hqcnn_loss(mm, images, labels);
      },
      hqcnn_parameters(m), 1e-5);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double denom = std::max({std::abs(g(i)), std::abs(fd(i)), 1e-6});
    worst = std::max(worst, std::abs(g(i) - fd(i)) / denom);
  }
  return {worst <= 1e-3, "max relative error = " + num(worst) + " over " + std::to_string(g.size()) +
                             " parameters (conv, circuit, readout; tol 1e-3)"};
}

// ---------------------------------------------------------------- AC-4
Outcome ac4_desk_training() {
  ExperimentConfig c;
  c.resolve();
  int ok = 0;
  std::string detail;
  for (std::uint64_t seed : kFiveSeeds) {
    const DeskData data = load_desk_data(c, seed);
    const TrainedClassifier t = train_classifier(c, data.train, data.test, seed);
    const double train_acc = t.curve.back().train_accuracy;
    const double test_acc = t.report.overall_accuracy;
    const bool pass = train_acc >= 0.95 && test_acc >= 0.80;
    ok += pass;
    detail += " seed" + std::to_string(seed) + "=" + num(train_acc, 3) + "/" + num(test_acc, 3);
  }
  return {ok >= 4, std::to_string(ok) + "/5 seeds with train >= 0.95 and test >= 0.80 (train/test:" + detail + ")"};
}

// ---------------------------------------------------------------- AC-5
Outcome ac5_qgan_toy() {
  const Eigen::Vector4d target(0.1, 0.2, 0.3, 0.4);
  std::vector<std::size_t> data;
  for (std::size_t x = 0; x < 4; ++x)
    for (int k = 0; k < static_cast<int>(std::lround(target(x) * 1000)); ++k) data.push_back(x);
  int ok = 0;
  std::string detail;
  for (std::uint64_t seed : kFiveSeeds) {
    BornTrainConfig tc;
    tc.steps = 2000;
    tc.seed = seed;
    const BornTrainResult r = train_born_qgan(make_born_qgan({2, 2, Entangler::Ring}, {8}, seed), data, tc);
    const double tv = total_variation(born_distribution(r.model), target);
    ok += tv < 0.1;
    detail += " " + num(tv, 3);
  }
  return {ok >= 3, std::to_string(ok) + "/5 seeds with TV < 0.1 after 2000 steps (TV:" + detail + ")"};
}

// ---------------------------------------------------------------- AC-6
Outcome ac6_error_profile_oracle() {
  // Test set of 100 per class; the classifier is right on the first 84 / 96 / 24 samples of each class
  // (position and class are encoded in the first two pixels) and predicts the next class otherwise.
  const std::vector<int> correct{84, 96, 24};
  LabeledDataset test;
  test.class_names = {"0", "1", "2"};
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 100; ++k) {
      Tensor t({8, 8});
      t[0] = k / 100.0;
      t[1] = c / 10.0;
      test.push_back(std::move(t), c);
    }
  const Classifier table = [&](const Tensor& img) {
    const int c = static_cast<int>(std::lround(img[1] * 10));
    const int k = static_cast<int>(std::lround(img[0] * 100));
    Prediction p;
    p.label = k < correct[c] ? c : (c + 1) % 3;
    p.probs = Eigen::Vector3d::Constant(0.2);
    p.probs(p.label) = 0.6;
    p.confidence = 0.6;
    return p;
  };
  const ErrorProfile prof = compute_error_profile(table, test);
  const bool e_ok = prof.errors == std::vector<std::int64_t>{16, 4, 76} && prof.total == 96;
  // R must equal the exact rationals; in double arithmetic that means the correctly rounded quotients.
  const bool r_ok = prof.proportions == std::vector<double>{16.0 / 96.0, 4.0 / 96.0, 76.0 / 96.0} &&
                    std::abs(prof.proportions[0] - 1.0 / 6) <= 1e-15 &&
                    std::abs(prof.proportions[1] - 1.0 / 24) <= 1e-15 &&
                    std::abs(prof.proportions[2] - 19.0 / 24) <= 1e-15;
  const auto alloc_r = allocate_counts(300, prof.proportions);
  const auto alloc_e = allocate_counts(300, prof);
  const bool alloc_ok = alloc_r == std::vector<std::int64_t>{50, 13, 237} && alloc_e == alloc_r;
  const auto tau = class_thresholds(AugmentConfig{}, prof);
  const bool tau_ok = tau[2] < tau[1] && tau[2] < tau[0] && std::abs(tau[1] - tau[0]) < 0.02;
  std::ostringstream os;
  os << "E=(" << prof.errors[0] << "," << prof.errors[1] << "," << prof.errors[2] << ") R=(" << num(prof.proportions[0])
     << "," << num(prof.proportions[1]) << "," << num(prof.proportions[2]) << ") N=(" << alloc_r[0] << "," << alloc_r[1]
     << "," << alloc_r[2] << ") tau=(" << num(tau[0]) << "," << num(tau[1]) << "," << num(tau[2]) << ")";
  return {e_ok && r_ok && alloc_ok && tau_ok, os.str()};
}

// ---------------------------------------------------------------- AC-7
Outcome ac7_filter_soundness() {
  ExperimentConfig c;
  c.train.epochs = 10;
  c.gan.epochs = 10;
  c.resolve();
  const std::uint64_t seed = 7;
  const DeskData data = load_desk_data(c, seed);
  const TrainedClassifier t = train_classifier(c, data.train, data.test, seed);
  const ErrorProfile prof = compute_error_profile(classifier_of(t.model), data.test);
  const auto gens = train_generators(c, data.train, per_class_conditioning(c.gan.epochs, prof.proportions), seed);
  const auto tau = class_thresholds(c.augment, prof);

  // Re-predict with a model restored from its checkpoint, independent of the filtering instance.
  const HqcnnModel restored = hqcnn_from_checkpoint(nlohmann::json::parse(hqcnn_checkpoint(t.model, nullptr, 0, 0).dump()));
  const Classifier filter_clf = classifier_of(t.model);
  std::size_t generated = 0, accepted = 0, violations = 0;
  const std::vector<std::size_t> per_class{334, 333, 333};
  for (int i = 0; i < 3; ++i) {
    const auto samples = gens[static_cast<std::size_t>(i)].generate(per_class[static_cast<std::size_t>(i)], 100 + i);
    generated += samples.size();
    for (const GeneratedSample& s : filter_samples(filter_clf, samples, i, tau[static_cast<std::size_t>(i)])) {
      ++accepted;
      const Prediction p = hqcnn_predict(restored, s.image);
      if (p.label != i || p.probs(i) < tau[static_cast<std::size_t>(i)]) ++violations;
    }
  }
  // The full custom pipeline must obey the same rule.
  AugmentConfig ac = c.augment;
  ac.seed = seed;
  const AugmentedDataset aug = augment_custom(filter_clf, data.train, prof, gens, ac);
  for (const GeneratedSample& s : aug.generated) {
    ++accepted;
    const Prediction p = hqcnn_predict(restored, s.image);
    if (p.label != s.label || p.probs(s.label) < aug.thresholds[static_cast<std::size_t>(s.label)]) ++violations;
  }
  return {generated == 1000 && accepted > 0 && violations == 0,
          std::to_string(generated) + " generated, " + std::to_string(accepted) + " accepted (incl. " +
              std::to_string(aug.generated.size()) + " from augment_custom), " + std::to_string(violations) +
              " violations"};
}

// ---------------------------------------------------------------- AC-8
Outcome ac8_end_to_end() {
  ExperimentConfig c;
  c.weak_class = 2;
  c.weak_count = 30;
  c.strategies = {"custom"};
  c.seeds = kFiveSeeds;
  c.resolve();
  const CompareResult r = run_compare(c);
  const auto& none = r.summary["strategies"][0]["per_seed"];
  const auto& custom = r.summary["strategies"][1]["per_seed"];
  int ok = 0;
  std::string detail;
  for (std::size_t s = 0; s < kFiveSeeds.size(); ++s) {
    const double c2_base = none[s]["report"]["per_class_accuracy"][2].get<double>();
    const double c2_aug = custom[s]["report"]["per_class_accuracy"][2].get<double>();
    const double avg_base = none[s]["report"]["average_accuracy"].get<double>();
    const double avg_aug = custom[s]["report"]["average_accuracy"].get<double>();
    const bool pass = c2_aug > c2_base && avg_aug >= avg_base - 0.02;
    ok += pass;
    detail += " seed" + std::to_string(kFiveSeeds[s]) + ":c2 " + num(c2_base, 3) + "->" + num(c2_aug, 3) + ",avg " +
              num(avg_base, 3) + "->" + num(avg_aug, 3);
  }
  return {ok >= 3, std::to_string(ok) + "/5 seeds improve class 2 with average drop <= 2 points;" + detail};
}

// ---------------------------------------------------------------- AC-9
Outcome ac9_idx() {
  Rng rng(9);
  LabeledDataset ds;
  ds.class_names = {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"};
  for (int i = 0; i < 50; ++i) {
    Tensor t({28, 28});
    for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = static_cast<double>(rng.below(256)) / 255.0;
    ds.push_back(std::move(t), static_cast<int>(rng.below(10)));
  }
  const fs::path dir = fs::temp_directory_path() / "qaug_acceptance_idx";
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool exact = true;
  for (const std::string ext : {"", ".gz"}) {
    const std::string ip = (dir / ("images.idx" + ext)).string(), lp = (dir / ("labels.idx" + ext)).string();
    write_idx(ip, lp, ds);
    const LabeledDataset back = load_idx(ip, lp);
    exact = exact && back.labels == ds.labels && back.images == ds.images &&
            read_maybe_gzip(ip) == encode_idx_images(ds) && read_maybe_gzip(lp) == encode_idx_labels(ds);
  }
  // Corrupt the magic number of a plain file.
  bool rejected = false;
  {
    std::fstream f(dir / "images.idx", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(2);
    f.put('\x0c');
  }
  try {
    load_idx((dir / "images.idx").string(), (dir / "labels.idx").string());
  } catch (const FormatError&) {
    rejected = true;
  }
  fs::remove_all(dir);
  return {exact && rejected, std::string("round trip ") + (exact ? "bitwise exact" : "MISMATCH") +
                                 " (plain and gzip); corrupted magic " + (rejected ? "raised FormatError" : "accepted")};
}

// ---------------------------------------------------------------- AC-10
std::string read_without_timestamp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::string line, out;
  while (std::getline(f, line)) {
    if (line.find("\"generated_at\"") == std::string::npos) out += line + '\n';
  }
  return out;
}

Outcome ac10_determinism() {
  ExperimentConfig c;
  c.seeds = {0, 1};
  c.out = (fs::temp_directory_path() / "qaug_acceptance_compare").string();
  c.resolve();
  fs::remove_all(c.out);
  cmd_compare(c);
  const std::string first = read_without_timestamp(fs::path(c.out) / "comparison.json");
  const std::string first_hash = read_json_file(c.out + "/comparison.json")["determinism_hash"];
  cmd_compare(c);
  const std::string second = read_without_timestamp(fs::path(c.out) / "comparison.json");
  const std::string second_hash = read_json_file(c.out + "/comparison.json")["determinism_hash"];
  fs::remove_all(c.out);
  const bool same = !first.empty() && first == second && first_hash == second_hash;
  return {same, std::string("comparison.json ") + (same ? "byte-identical" : "DIFFERS") + " apart from generated_at (" +
                    std::to_string(first.size()) + " bytes, determinism_hash " + first_hash + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC-1", ac1_gate_oracle},      {"AC-2", ac2_parameter_shift},     {"AC-3", ac3_hybrid_gradient},
      {"AC-4", ac4_desk_training},    {"AC-5", ac5_qgan_toy},            {"AC-6", ac6_error_profile_oracle},
      {"AC-7", ac7_filter_soundness}, {"AC-8", ac8_end_to_end},          {"AC-9", ac9_idx},
      {"AC-10", ac10_determinism}};
  std::vector<std::string> selected(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), name) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << name << ' ' << (o.pass ? "PASS" : "FAIL") << " (" << num(secs, 3) << " s): " << o.detail << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
