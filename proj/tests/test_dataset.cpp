#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "qaug/dataset.hpp"
#include "qaug/errors.hpp"
#include "qaug/hash.hpp"
#include "qaug/apportion.hpp"
#include "qaug/rng.hpp"

using namespace qaug;
namespace fs = std::filesystem;

namespace {

LabeledDataset byte_dataset(std::size_t n, int size, std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset ds;
  ds.class_names = {"0", "1", "2", "3"};
  for (std::size_t i = 0; i < n; ++i) {
    Tensor t({size, size});
    for (Eigen::Index k = 0; k < t.size(); ++k) t[k] = static_cast<double>(rng.below(256)) / 255.0;
    ds.push_back(std::move(t), static_cast<int>(rng.below(4)));
  }
  return ds;
}

std::vector<std::uint8_t> read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("IDX encode/parse round trip is bitwise exact") {
  const LabeledDataset ds = byte_dataset(25, 7, 1);
  const auto img = encode_idx_images(ds);
  const auto lab = encode_idx_labels(ds);
  CHECK(img.size() == 16 + 25 * 49);
  CHECK(lab.size() == 8 + 25);
  CHECK(img[2] == 0x08);
  CHECK(img[3] == 0x03);
  const LabeledDataset back = parse_idx(img, lab);
  CHECK(back.labels == ds.labels);
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back.images[i] == ds.images[i]);
  CHECK(encode_idx_images(back) == img);
}

TEST_CASE("IDX files round trip with and without gzip") {
  const LabeledDataset ds = byte_dataset(10, 5, 2);
  const fs::path dir = fs::temp_directory_path() / "qaug_test_idx";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_idx((dir / "i.idx").string(), (dir / "l.idx").string(), ds);
  write_idx((dir / "i.idx.gz").string(), (dir / "l.idx.gz").string(), ds);
  const auto gz = read_file(dir / "i.idx.gz");
  REQUIRE(gz.size() > 2);
  CHECK(gz[0] == 0x1f);
  CHECK(gz[1] == 0x8b);
  CHECK(read_maybe_gzip((dir / "i.idx.gz").string()) == read_file(dir / "i.idx"));
  const LabeledDataset a = load_idx((dir / "i.idx").string(), (dir / "l.idx").string());
  const LabeledDataset b = load_idx((dir / "i.idx.gz").string(), (dir / "l.idx.gz").string());
  CHECK(a.labels == ds.labels);
  CHECK(b.labels == ds.labels);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(b.images[i] == ds.images[i]);
  CHECK_THROWS_AS(load_idx((dir / "missing").string(), (dir / "l.idx").string()), DataError);
  fs::remove_all(dir);
}

TEST_CASE("IDX parse errors") {
  const LabeledDataset ds = byte_dataset(4, 4, 3);
  auto img = encode_idx_images(ds);
  auto lab = encode_idx_labels(ds);
  auto bad = img;
  bad[3] = 0x01;
  CHECK_THROWS_AS(parse_idx(bad, lab), FormatError);
  auto bad_lab = lab;
  bad_lab[3] = 0x03;
  CHECK_THROWS_AS(parse_idx(img, bad_lab), FormatError);
  CHECK_THROWS_AS(parse_idx({img.begin(), img.end() - 1}, lab), LengthError);
  CHECK_THROWS_AS(parse_idx({img.begin(), img.begin() + 10}, lab), LengthError);
  CHECK_THROWS_AS(parse_idx(img, {lab.begin(), lab.end() - 1}), LengthError);
  const LabeledDataset fewer = byte_dataset(3, 4, 3);
  CHECK_THROWS_AS(parse_idx(img, encode_idx_labels(fewer)), ConsistencyError);
}

TEST_CASE("subset draws per_class samples and remaps labels") {
  const LabeledDataset ds = byte_dataset(200, 4, 4);
  const LabeledDataset s = subset(ds, {3, 1}, 10, 9);
  CHECK(s.size() == 20);
  CHECK(s.class_names == std::vector<std::string>{"3", "1"});
  CHECK(s.class_counts() == std::vector<std::size_t>{10, 10});
  const LabeledDataset again = subset(ds, {3, 1}, 10, 9);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(again.images[i] == s.images[i]);
  const LabeledDataset other = subset(ds, {3, 1}, 10, 10);
  bool differs = false;
  for (std::size_t i = 0; i < s.size(); ++i) differs |= !(other.images[i] == s.images[i]);
  CHECK(differs);
  CHECK_THROWS_AS(subset(ds, {0}, 1000, 1), CapacityError);
}

TEST_CASE("downscale is area averaging") {
  Tensor t({4, 4});
  for (int i = 0; i < 16; ++i) t[i] = i / 15.0;
  const Tensor d = downscale_image(t, 2);
  CHECK(d.shape() == Shape{2, 2});
  CHECK(d[0] == doctest::Approx((0 + 1 + 4 + 5) / 60.0));
  CHECK(d[3] == doctest::Approx((10 + 11 + 14 + 15) / 60.0));
  CHECK(downscale_image(t, 4) == t);
  CHECK(downscale_image(t, 1)[0] == doctest::Approx(0.5));
  // 28 -> 8 preserves the mean.
  Rng rng(1);
  Tensor big({28, 28});
  for (Eigen::Index k = 0; k < big.size(); ++k) big[k] = rng.uniform();
  CHECK(downscale_image(big, 8).data().mean() == doctest::Approx(big.data().mean()).epsilon(1e-12));
  CHECK_THROWS_AS(downscale_image(t, 5), ShapeError);
}

TEST_CASE("truncate_class and concat") {
  const LabeledDataset ds = byte_dataset(100, 3, 5);
  const auto counts = ds.class_counts();
  const LabeledDataset t = truncate_class(ds, 2, 3);
  CHECK(t.class_counts()[2] == 3);
  CHECK(t.class_counts()[0] == counts[0]);
  const LabeledDataset both = concat(t, ds);
  CHECK(both.size() == t.size() + ds.size());
}

TEST_CASE("validate rejects inconsistent datasets") {
  LabeledDataset ds = byte_dataset(3, 3, 6);
  ds.validate();
  ds.labels.pop_back();
  CHECK_THROWS_AS(ds.validate(), ConsistencyError);
  ds = byte_dataset(3, 3, 6);
  ds.images[0][0] = 1.5;
  CHECK_THROWS_AS(ds.validate(), DataError);
}

TEST_CASE("git blob hash") {
  CHECK(git_blob_hash(std::string_view("")) == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash(std::string_view("hello world\n")) == "3b18e512dba79e4c8300dd08aeb37f8e728b8dad");
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
}

TEST_CASE("largest remainder apportionment") {
  CHECK(largest_remainder(300, std::vector<std::int64_t>{16, 4, 76}) == std::vector<std::int64_t>{50, 13, 237});
  CHECK(largest_remainder(10, std::vector<double>{1, 1, 1}) == std::vector<std::int64_t>{4, 3, 3});
  CHECK(largest_remainder(5, std::vector<double>{0, 0}) == std::vector<std::int64_t>{3, 2});
  CHECK(largest_remainder(7, std::vector<double>{0, 1}) == std::vector<std::int64_t>{0, 7});
}
