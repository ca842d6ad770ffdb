#include "qaug/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "qaug/errors.hpp"
#include "qaug/rng.hpp"

namespace qaug {
namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

void write_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) b.push_back(static_cast<std::uint8_t>(v >> shift));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw DataError("cannot write " + path);
    const int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    if (n != static_cast<int>(bytes.size())) throw DataError("short write to " + path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Row weights of an area-weighted 1-D resize from n to m samples; rows sum to 1.
Eigen::MatrixXd area_weights(Eigen::Index n, Eigen::Index m) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n);
  const double scale = static_cast<double>(n) / static_cast<double>(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lo = static_cast<double>(i) * scale;
    const double hi = static_cast<double>(i + 1) * scale;
    for (auto j = static_cast<Eigen::Index>(std::floor(lo)); j < n && static_cast<double>(j) < hi; ++j) {
      const double overlap = std::min(hi, static_cast<double>(j + 1)) - std::max(lo, static_cast<double>(j));
      if (overlap > 0) a(i, j) = overlap / scale;
    }
  }
  return a;
}

}  // namespace

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (int l : labels) {
    if (l >= 0 && static_cast<std::size_t>(l) < counts.size()) ++counts[static_cast<std::size_t>(l)];
  }
  return counts;
}

std::vector<Tensor> LabeledDataset::images_of(int c) const {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (labels[i] == c) out.push_back(images[i]);
  }
  return out;
}

void LabeledDataset::push_back(Tensor image, int label) {
  images.push_back(std::move(image));
  labels.push_back(label);
}

void LabeledDataset::validate() const {
  if (images.size() != labels.size()) throw ConsistencyError("image and label counts differ");
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes()) {
      throw IndexError("label " + std::to_string(labels[i]) + " outside the class list");
    }
    const auto& d = images[i].data();
    if (!d.allFinite() || (d.size() && (d.minCoeff() < 0.0 || d.maxCoeff() > 1.0))) {
      throw DataError("pixel values of sample " + std::to_string(i) + " leave [0, 1]");
    }
  }
}

std::vector<std::uint8_t> read_maybe_gzip(const std::string& path) {
  // gzread passes non-gzip files through unchanged.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open " + path);
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + n);
  int err = Z_OK;
  const char* msg = gzerror(f, &err);
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) {
    throw LengthError(path + ": " + (msg ? msg : "read error"));
  }
  return out;
}

LabeledDataset parse_idx(const std::vector<std::uint8_t>& img, const std::vector<std::uint8_t>& lab) {
  if (img.size() < 16) throw LengthError("image file shorter than its header");
  if (lab.size() < 8) throw LengthError("label file shorter than its header");
  const std::uint32_t img_magic = read_be32(img, 0);
  const std::uint32_t lab_magic = read_be32(lab, 0);
  if (img_magic != kIdxImageMagic) {
    throw FormatError("bad image magic 0x" + [&] {
      char b[9];
      std::snprintf(b, sizeof b, "%08x", img_magic);
      return std::string(b);
    }());
  }
  if (lab_magic != kIdxLabelMagic) throw FormatError("bad label magic");

  const std::size_t n = read_be32(img, 4);
  const std::size_t rows = read_be32(img, 8);
  const std::size_t cols = read_be32(img, 12);
  const std::size_t n_labels = read_be32(lab, 4);
  if (img.size() < 16 + n * rows * cols) throw LengthError("image file truncated");
  if (lab.size() < 8 + n_labels) throw LengthError("label file truncated");
  if (n != n_labels) {
    throw ConsistencyError(std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");
  }

  LabeledDataset ds;
  int max_label = -1;
  ds.images.reserve(n);
  ds.labels.reserve(n);
  const Shape shape{static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
  const std::size_t px = rows * cols;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(px));
    for (std::size_t k = 0; k < px; ++k) d(static_cast<Eigen::Index>(k)) = img[16 + i * px + k] / 255.0;
    ds.images.emplace_back(shape, std::move(d));
    ds.labels.push_back(lab[8 + i]);
    max_label = std::max(max_label, int{lab[8 + i]});
  }
  for (int c = 0; c <= max_label; ++c) ds.class_names.push_back(std::to_string(c));
  return ds;
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  return parse_idx(read_maybe_gzip(images_path), read_maybe_gzip(labels_path));
}

std::vector<std::uint8_t> encode_idx_images(const LabeledDataset& ds) {
  std::vector<std::uint8_t> b;
  const Eigen::Index rows = ds.empty() ? 0 : ds.images[0].dim(0);
  const Eigen::Index cols = ds.empty() ? 0 : ds.images[0].dim(1);
  write_be32(b, kIdxImageMagic);
  write_be32(b, static_cast<std::uint32_t>(ds.size()));
  write_be32(b, static_cast<std::uint32_t>(rows));
  write_be32(b, static_cast<std::uint32_t>(cols));
  for (const auto& im : ds.images) {
    if (im.rank() != 2 || im.dim(0) != rows || im.dim(1) != cols) {
      throw ShapeError("IDX images must share one [H, W] shape");
    }
    for (Eigen::Index k = 0; k < im.size(); ++k) {
      b.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(im[k], 0.0, 1.0) * 255.0)));
    }
  }
  return b;
}

std::vector<std::uint8_t> encode_idx_labels(const LabeledDataset& ds) {
  std::vector<std::uint8_t> b;
  write_be32(b, kIdxLabelMagic);
  write_be32(b, static_cast<std::uint32_t>(ds.size()));
  for (int l : ds.labels) b.push_back(static_cast<std::uint8_t>(l));
  return b;
}

void write_idx(const std::string& images_path, const std::string& labels_path, const LabeledDataset& ds) {
  write_bytes(images_path, encode_idx_images(ds));
  write_bytes(labels_path, encode_idx_labels(ds));
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<int>& classes, std::size_t per_class,
                      std::uint64_t seed) {
  LabeledDataset out;
  for (int c : classes) {
    out.class_names.push_back(c >= 0 && c < ds.n_classes() ? ds.class_names[static_cast<std::size_t>(c)]
                                                           : std::to_string(c));
  }
  Rng rng(seed);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.labels[i] == classes[k]) idx.push_back(i);
    }
    if (idx.size() < per_class) {
      throw CapacityError("class " + std::to_string(classes[k]) + " has " + std::to_string(idx.size()) +
                          " samples, " + std::to_string(per_class) + " requested");
    }
    rng.shuffle(idx);
    for (std::size_t i = 0; i < per_class; ++i) out.push_back(ds.images[idx[i]], static_cast<int>(k));
  }
  return out;
}

Tensor downscale_image(const Tensor& image, int size) {
  if (image.rank() != 2) throw ShapeError("downscale expects [H, W] images");
  const Eigen::Index h = image.dim(0), w = image.dim(1);
  if (size < 1 || size > h || size > w) {
    throw ShapeError("target size " + std::to_string(size) + " exceeds image " + shape_string(image.shape()));
  }
  if (size == h && size == w) return image;
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> src(image.data().data(), h, w);
  const RowMatrix dst = area_weights(h, size) * src * area_weights(w, size).transpose();
  Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(dst.data(), dst.size());
  return Tensor({size, size}, flat.cwiseMax(0.0).cwiseMin(1.0));
}

LabeledDataset downscale(const LabeledDataset& ds, int size) {
  LabeledDataset out;
  out.class_names = ds.class_names;
  out.labels = ds.labels;
  out.images.reserve(ds.size());
  for (const auto& im : ds.images) out.images.push_back(downscale_image(im, size));
  return out;
}

LabeledDataset truncate_class(const LabeledDataset& ds, int c, std::size_t count) {
  LabeledDataset out;
  out.class_names = ds.class_names;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] == c && kept++ >= count) continue;
    out.push_back(ds.images[i], ds.labels[i]);
  }
  return out;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  LabeledDataset out = a;
  out.images.insert(out.images.end(), b.images.begin(), b.images.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

}  // namespace qaug
