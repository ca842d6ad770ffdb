#pragma once

// Dataset augmentation: uniform generation (general), error-driven
// generation with confidence filtering (custom), and classical transforms.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qaug/dataset.hpp"
#include "qaug/hqcnn.hpp"
#include "qaug/qgan.hpp"

namespace qaug {

/// Anything that labels an image with class probabilities.
using Classifier = std::function<Prediction(const Tensor&)>;
Classifier classifier_of(const HqcnnModel& model);

struct ErrorProfile {
  std::vector<std::int64_t> errors;  // E: misclassified test samples per true class
  std::int64_t total = 0;            // E_total
  std::vector<double> proportions;   // R; uniform when total is zero
};

ErrorProfile error_profile_from_counts(const std::vector<std::int64_t>& errors);
ErrorProfile compute_error_profile(const Classifier& classifier, const LabeledDataset& test_set);

/// Largest-remainder split of n_gen by R. Uses the exact integer weights E
/// when the profile has errors, so ties are resolved without rounding noise.
std::vector<std::int64_t> allocate_counts(std::int64_t n_gen, const ErrorProfile& profile);
std::vector<std::int64_t> allocate_counts(std::int64_t n_gen, const std::vector<double>& R);

/// floor(n / C) per class, remainder to the lowest class indices.
std::vector<std::int64_t> even_counts(std::int64_t n, int n_classes);

struct AugmentConfig {
  std::int64_t n_gen = 300;
  double tau = 0.48;
  double alpha = 0.04;
  double beta = 0.04;
  int max_attempts = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kMinThreshold = 0.05;
inline constexpr double kMaxThreshold = 0.99;

/// Class i is large-error iff R[i] > 1/C: tau - alpha R[i]; otherwise tau + beta R[i];
/// clamped to [0.05, 0.99].
std::vector<double> class_thresholds(const AugmentConfig& config, const ErrorProfile& profile);

/// One generated image with its provenance.
struct GeneratedSample {
  Tensor image;
  int label = 0;
  double confidence = 0.0;  // classifier probability of `label`
  int attempt = 0;          // 1-based generation round
  std::uint64_t seed = 0;   // seed of the batch it came from
  std::size_t index = 0;    // position inside that batch
  std::string source;
};

/// Samples predicted as class_i with confidence >= tau, in input order.
/// Only image, label and confidence are set; index is the input position.
std::vector<GeneratedSample> filter_samples(const Classifier& classifier, const std::vector<Tensor>& samples,
                                            int class_i, double tau);

/// Class-targeted sample generator.
struct SampleSource {
  std::string name;
  bool trained = false;
  std::function<std::vector<Tensor>(std::size_t n, std::uint64_t seed)> generate;
};

SampleSource sample_source(QganModel model);
SampleSource sample_source(ClassicalGan model);

struct AugmentedDataset {
  std::string strategy;
  LabeledDataset original;
  std::vector<GeneratedSample> generated;  // grouped by class, in generation order
  std::vector<std::int64_t> requested;     // N_i
  std::vector<std::int64_t> counts;        // samples actually added per class
  std::vector<std::string> warnings;
  std::optional<ErrorProfile> profile;
  std::vector<double> thresholds;

  /// Originals followed by generated samples.
  LabeledDataset combined() const;
};

/// Uniform generation with no filtering. The classifier only annotates confidences.
AugmentedDataset augment_general(const Classifier& classifier, const LabeledDataset& train_set,
                                 const std::vector<SampleSource>& generators, std::int64_t n_gen,
                                 std::uint64_t seed);

/// Error-driven allocation, per-class thresholds, 3 N_i over-generation and retries.
AugmentedDataset augment_custom(const Classifier& classifier, const LabeledDataset& train_set,
                                const LabeledDataset& test_set, const std::vector<SampleSource>& generators,
                                const AugmentConfig& config);
AugmentedDataset augment_custom(const Classifier& classifier, const LabeledDataset& train_set,
                                const ErrorProfile& profile, const std::vector<SampleSource>& generators,
                                const AugmentConfig& config);

// Classical transforms on [H, W] images; zero fill outside the source.
Tensor rotate_image(const Tensor& image, double degrees);
Tensor translate_image(const Tensor& image, int dx, int dy);
/// Scales deviations from the image mean by factor, clamped to [0, 1].
Tensor contrast_image(const Tensor& image, double factor);

inline constexpr double kMaxRotationDegrees = 15.0;
inline constexpr int kMaxShift = 2;
inline constexpr double kContrastLow = 0.7;
inline constexpr double kContrastHigh = 1.3;

/// Balanced random rotation / translation / contrast copies of training images.
AugmentedDataset classic_augment(const LabeledDataset& train_set, std::int64_t n_gen, std::uint64_t seed);

struct ConfidenceBand {
  double low = 0.0;   // inclusive
  double high = 1.0;  // exclusive
  std::size_t quota = 0;
};

/// Samples predicted as class_i, partitioned by confidence band and truncated to each quota.
std::vector<std::vector<GeneratedSample>> quality_vs_quantity_bands(const Classifier& classifier,
                                                                    const std::vector<Tensor>& samples, int class_i,
                                                                    const std::vector<ConfidenceBand>& bands);

nlohmann::json to_json(const ErrorProfile& profile);
nlohmann::json to_json(const AugmentConfig& config);
AugmentConfig augment_config_from_json(const nlohmann::json& j);

/// Writes manifest.json and generated.bin (little-endian float64, one image after another).
/// `provenance` is embedded into the manifest verbatim.
void save_augmented(const std::string& dir, const AugmentedDataset& aug,
                    const nlohmann::json& provenance = nlohmann::json::object());
/// Restores the generated part; the originals are supplied by the caller.
AugmentedDataset load_augmented(const std::string& dir, const LabeledDataset& original);

}  // namespace qaug
