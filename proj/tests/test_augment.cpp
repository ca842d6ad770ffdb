#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "qaug/augment.hpp"
#include "qaug/errors.hpp"
#include "qaug/hash.hpp"

using namespace qaug;
namespace fs = std::filesystem;

namespace {

// Classifies by which third of the image holds the most mass; confidence is that share.
Prediction thirds(const Tensor& img) {
  Eigen::VectorXd mass = Eigen::VectorXd::Constant(3, 1e-9);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) mass(std::min(2, c * 3 / 8)) += img[r * 8 + c];
  Prediction p;
  p.probs = mass / mass.sum();
  p.probs.maxCoeff(&p.label);
  p.confidence = p.probs(p.label);
  return p;
}

Tensor column_image(int c, double level) {
  Tensor t({8, 8});
  for (int r = 0; r < 8; ++r)
    for (int col = 0; col < 8; ++col)
      if (std::min(2, col * 3 / 8) == c) t[r * 8 + col] = level;
  return t;
}

// Mixes a class image with uniform noise so that confidences vary with the seed.
SampleSource noisy_source(int c) {
  SampleSource s;
  s.name = "noisy" + std::to_string(c);
  s.trained = true;
  s.generate = [c](std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < n; ++i) {
      Tensor t = column_image(c, rng.uniform(0.0, 0.6));
      for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = std::min(1.0, t[k] + rng.uniform(0.0, 0.3));
      out.push_back(std::move(t));
    }
    return out;
  };
  return s;
}

LabeledDataset small_train() {
  LabeledDataset ds;
  ds.class_names = {"0", "1", "2"};
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 4; ++k) ds.push_back(column_image(c, 0.5 + 0.1 * k), c);
  return ds;
}

std::vector<SampleSource> sources() { return {noisy_source(0), noisy_source(1), noisy_source(2)}; }

}  // namespace

TEST_CASE("error profile and allocation for E = (16, 4, 76)") {
  const ErrorProfile p = error_profile_from_counts({16, 4, 76});
  CHECK(p.total == 96);
  CHECK(p.proportions[0] == doctest::Approx(1.0 / 6));
  CHECK(p.proportions[1] == doctest::Approx(1.0 / 24));
  CHECK(p.proportions[2] == doctest::Approx(19.0 / 24));
  CHECK(allocate_counts(300, p) == std::vector<std::int64_t>{50, 13, 237});
  const ErrorProfile zero = error_profile_from_counts({0, 0, 0});
  CHECK(zero.proportions[0] == doctest::Approx(1.0 / 3));
  CHECK(allocate_counts(300, zero) == std::vector<std::int64_t>{100, 100, 100});
  CHECK_THROWS(error_profile_from_counts({1, -1}));
}

TEST_CASE("allocation always sums to n_gen") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int C = 1 + static_cast<int>(rng.below(8));
    std::vector<std::int64_t> e(C);
    for (auto& x : e) x = static_cast<std::int64_t>(rng.below(50));
    const std::int64_t n = static_cast<std::int64_t>(rng.below(1000));
    const auto counts = allocate_counts(n, error_profile_from_counts(e));
    std::int64_t sum = 0;
    for (auto x : counts) {
      CHECK(x >= 0);
      sum += x;
    }
    CHECK(sum == n);
  }
}

TEST_CASE("even counts") {
  CHECK(even_counts(10, 3) == std::vector<std::int64_t>{4, 3, 3});
  CHECK(even_counts(0, 2) == std::vector<std::int64_t>{0, 0});
}

TEST_CASE("class thresholds") {
  const AugmentConfig cfg;
  const auto t = class_thresholds(cfg, error_profile_from_counts({16, 4, 76}));
  CHECK(t[0] == doctest::Approx(0.48 + 0.04 / 6));
  CHECK(t[1] == doctest::Approx(0.48 + 0.04 / 24));
  CHECK(t[2] == doctest::Approx(0.48 - 0.04 * 19 / 24));
  CHECK(t[2] < t[1]);
  CHECK(std::abs(t[1] - t[0]) < 0.01);

  AugmentConfig extreme;
  extreme.tau = 0.99;
  extreme.beta = 0.5;
  extreme.alpha = 2.0;
  const auto c = class_thresholds(extreme, error_profile_from_counts({1, 0, 9}));
  for (double x : c) {
    CHECK(x >= kMinThreshold);
    CHECK(x <= kMaxThreshold);
  }
  CHECK(c[2] == kMinThreshold);

  AugmentConfig bad;
  bad.tau = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.n_gen = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("filter_samples keeps only confident predictions of the class") {
  const std::vector<Tensor> s{column_image(0, 1.0), column_image(1, 1.0), column_image(0, 0.0)};
  const auto kept = filter_samples(thirds, s, 0, 0.9);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].index == 0);
  CHECK(kept[0].label == 0);
  CHECK(kept[0].confidence >= 0.9);
}

TEST_CASE("custom augmentation respects thresholds and counts") {
  AugmentConfig cfg;
  cfg.n_gen = 60;
  cfg.seed = 4;
  const ErrorProfile profile = error_profile_from_counts({2, 1, 9});
  const AugmentedDataset a = augment_custom(thirds, small_train(), profile, sources(), cfg);
  CHECK(a.strategy == "custom");
  REQUIRE(a.profile.has_value());
  CHECK(a.requested == allocate_counts(60, profile));
  for (const GeneratedSample& g : a.generated) {
    const Prediction p = thirds(g.image);
    CHECK(p.label == g.label);
    CHECK(p.confidence >= a.thresholds[g.label]);
    CHECK(g.attempt >= 1);
    CHECK(g.attempt <= cfg.max_attempts);
  }
  for (int c = 0; c < 3; ++c) CHECK(a.counts[c] <= a.requested[c]);
  CHECK(a.combined().size() == small_train().size() + a.generated.size());

  // Deterministic.
  const AugmentedDataset b = augment_custom(thirds, small_train(), profile, sources(), cfg);
  REQUIRE(b.generated.size() == a.generated.size());
  for (std::size_t i = 0; i < a.generated.size(); ++i) CHECK(b.generated[i].image == a.generated[i].image);
}

TEST_CASE("custom augmentation warns on shortfall") {
  AugmentConfig cfg;
  cfg.n_gen = 30;
  cfg.max_attempts = 2;
  cfg.tau = 0.98;
  cfg.beta = 0.0;
  cfg.alpha = 0.0;
  // Every source produces class-0 images, so classes 1 and 2 can never be filled.
  std::vector<SampleSource> src{noisy_source(0), noisy_source(0), noisy_source(0)};
  const AugmentedDataset a = augment_custom(thirds, small_train(), error_profile_from_counts({1, 1, 1}), src, cfg);
  CHECK(a.counts[1] == 0);
  CHECK_FALSE(a.warnings.empty());
}

TEST_CASE("general augmentation is uniform and refuses untrained generators") {
  const AugmentedDataset a = augment_general(thirds, small_train(), sources(), 31, 5);
  CHECK(a.counts == std::vector<std::int64_t>{11, 10, 10});
  CHECK(a.generated.size() == 31);
  auto src = sources();
  src[1].trained = false;
  CHECK_THROWS_AS(augment_general(thirds, small_train(), src, 30, 5), ConfigError);
  CHECK_THROWS(augment_general(thirds, small_train(), {noisy_source(0)}, 30, 5));
}

TEST_CASE("classical transforms") {
  Tensor img({8, 8});
  for (int i = 0; i < 64; ++i) img[i] = (i % 8) / 7.0;
  CHECK(rotate_image(img, 0.0) == img);
  const Tensor shifted = translate_image(img, 1, 0);
  CHECK(shifted[0] == 0.0);
  CHECK(shifted[1] == img[0]);
  const Tensor down = translate_image(img, 0, 2);
  CHECK(down[8 * 2 + 3] == img[3]);
  CHECK(down[3] == 0.0);
  const Tensor c = contrast_image(img, 1.0);
  CHECK((c.data() - img.data()).cwiseAbs().maxCoeff() <= 1e-15);
  const Tensor flat = contrast_image(img, 0.0);
  CHECK(flat.data().maxCoeff() == doctest::Approx(img.data().mean()));
  const Tensor r90 = rotate_image(img, 90.0);
  CHECK(r90.data().minCoeff() >= 0.0);
  CHECK(r90.data().maxCoeff() <= 1.0);

  const AugmentedDataset a = classic_augment(small_train(), 9, 1);
  CHECK(a.generated.size() == 9);
  CHECK(a.counts == std::vector<std::int64_t>{3, 3, 3});
  for (const auto& g : a.generated) CHECK(g.image.data().maxCoeff() <= 1.0);
}

TEST_CASE("quality vs quantity bands") {
  std::vector<Tensor> s;
  for (int k = 0; k < 10; ++k) {
    Tensor t = column_image(0, 1.0);
    t[63] = 0.2 * k;  // lower confidence as k grows
    s.push_back(t);
  }
  const auto bands = quality_vs_quantity_bands(thirds, s, 0, {{0.9, 1.01, 3}, {0.5, 0.9, 100}});
  REQUIRE(bands.size() == 2);
  CHECK(bands[0].size() <= 3);
  for (const auto& g : bands[0]) CHECK(g.confidence >= 0.9);
  for (const auto& g : bands[1]) CHECK(g.confidence < 0.9);
  CHECK_THROWS_AS(quality_vs_quantity_bands(thirds, s, 0, {{0.5, 0.9, 1}, {0.8, 1.0, 1}}), ConfigError);
  CHECK_THROWS_AS(quality_vs_quantity_bands(thirds, s, 0, {{0.9, 0.9, 1}}), ConfigError);
}

TEST_CASE("augmented dataset save/load round trip") {
  AugmentConfig cfg;
  cfg.n_gen = 24;
  const AugmentedDataset a = augment_custom(thirds, small_train(), error_profile_from_counts({1, 2, 3}), sources(), cfg);
  const fs::path dir = fs::temp_directory_path() / "qaug_test_augment_rt";
  fs::remove_all(dir);
  save_augmented(dir.string(), a, {{"note", "x"}});
  const nlohmann::json m = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  CHECK(m["strategy"] == "custom");
  CHECK(m["note"] == "x");
  CHECK(m["samples"].size() == a.generated.size());
  CHECK(m["error_profile"]["E"] == nlohmann::json({1, 2, 3}));
  CHECK(m["binary"]["hash"] == git_blob_hash_file((dir / "generated.bin").string()));
  CHECK(fs::file_size(dir / "generated.bin") == a.generated.size() * 64 * sizeof(double));

  const AugmentedDataset b = load_augmented(dir.string(), small_train());
  REQUIRE(b.generated.size() == a.generated.size());
  for (std::size_t i = 0; i < a.generated.size(); ++i) {
    CHECK(b.generated[i].image == a.generated[i].image);
    CHECK(b.generated[i].seed == a.generated[i].seed);
    CHECK(b.generated[i].confidence == a.generated[i].confidence);
  }
  // Corrupt the binary.
  {
    std::fstream f(dir / "generated.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(3);
    f.put('\x7f');
  }
  CHECK_THROWS(load_augmented(dir.string(), small_train()));
  fs::remove_all(dir);
}
