#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <string>
#include <vector>

namespace qaug {

using Shape = std::vector<Eigen::Index>;

std::string shape_string(const Shape& shape);
Eigen::Index shape_size(const Shape& shape);

/// Shape-tagged dense real array, row-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, Eigen::VectorXd data);

  static Tensor vector(Eigen::VectorXd data);

  const Shape& shape() const { return shape_; }
  Eigen::Index size() const { return data_.size(); }
  Eigen::Index rank() const { return static_cast<Eigen::Index>(shape_.size()); }
  Eigen::Index dim(Eigen::Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }

  const Eigen::VectorXd& data() const { return data_; }
  Eigen::VectorXd& data() { return data_; }

  double operator[](Eigen::Index i) const { return data_(i); }
  double& operator[](Eigen::Index i) { return data_(i); }

  /// Element of a rank-3 [C, H, W] tensor.
  double at(Eigen::Index c, Eigen::Index h, Eigen::Index w) const {
    return data_((c * shape_[1] + h) * shape_[2] + w);
  }
  double& at(Eigen::Index c, Eigen::Index h, Eigen::Index w) {
    return data_((c * shape_[1] + h) * shape_[2] + w);
  }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const { return data_.allFinite(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Eigen::VectorXd data_;
};

}  // namespace qaug
