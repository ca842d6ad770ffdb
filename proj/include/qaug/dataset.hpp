#pragma once

// MNIST-style IDX loading, class subsetting and downscaling.

#include <cstdint>
#include <string>
#include <vector>

#include "qaug/tensor.hpp"

namespace qaug {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Images as [H, W] tensors with pixels in [0, 1], labels as class indices.
struct LabeledDataset {
  std::vector<Tensor> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  int n_classes() const { return static_cast<int>(class_names.size()); }
  std::vector<std::size_t> class_counts() const;
  /// Images whose label equals c.
  std::vector<Tensor> images_of(int c) const;
  void push_back(Tensor image, int label);
  /// Throws unless images and labels agree and pixels lie in [0, 1].
  void validate() const;
};

/// Reads a file fully, inflating it when it is gzip-compressed.
std::vector<std::uint8_t> read_maybe_gzip(const std::string& path);

/// Parses big-endian IDX image and label files (gzip is detected automatically).
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);
LabeledDataset parse_idx(const std::vector<std::uint8_t>& image_bytes,
                         const std::vector<std::uint8_t>& label_bytes);

/// Serializes to IDX bytes; pixels are stored as round(255 * value).
std::vector<std::uint8_t> encode_idx_images(const LabeledDataset& ds);
std::vector<std::uint8_t> encode_idx_labels(const LabeledDataset& ds);
/// Writes plain IDX, or gzip when the path ends in ".gz".
void write_idx(const std::string& images_path, const std::string& labels_path, const LabeledDataset& ds);

/// per_class samples of each listed class, chosen by a seeded shuffle.
/// Labels are remapped to positions in `classes`.
LabeledDataset subset(const LabeledDataset& ds, const std::vector<int>& classes, std::size_t per_class,
                      std::uint64_t seed);

/// Area-weighted resize to size x size; equals repeated 2x2 mean pooling for power-of-two factors.
LabeledDataset downscale(const LabeledDataset& ds, int size);
Tensor downscale_image(const Tensor& image, int size);

/// Keeps only the first `count` samples of class c (in dataset order).
LabeledDataset truncate_class(const LabeledDataset& ds, int c, std::size_t count);

/// Concatenation; class names are taken from `a`.
LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

}  // namespace qaug
