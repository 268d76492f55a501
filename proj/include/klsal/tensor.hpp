#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace klsal {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// Construction validates that the data length matches the shape and that
/// every element is finite; after that the value is never mutated in place.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  /// Zero-filled tensor.
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;
  bool empty() const { return data_.empty(); }

  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_.at(1) + c]; }
  double at(std::size_t ch, std::size_t r, std::size_t c) const {
    return data_[(ch * shape_.at(1) + r) * shape_.at(2) + c];
  }

  /// Same data under a different shape with equal element count.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// (t - min) / (max - min); all zeros when the range is below 1e-12.
Tensor minmax_normalize(const Tensor& t);

/// Align-corners bilinear resize of a 2-D tensor. A source axis of extent 1
/// is replicated; an output axis of extent 1 samples source index 0.
Tensor resize_bilinear(const Tensor& t, std::size_t out_h, std::size_t out_w);

}  // namespace klsal
