#include "klsal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "klsal/error.hpp"

namespace klsal {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto extent : shape_) {
    if (extent == 0) {
      throw InvalidArgument("tensor extents must be positive, got " + shape_string(shape_));
    }
  }
  if (data_.size() != shape_size(shape_)) {
    throw InvalidArgument("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                          shape_string(shape_));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument("tensor contains non-finite values");
  }
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  auto n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeMismatch("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
  }
  return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeMismatch("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

Tensor minmax_normalize(const Tensor& t) {
  if (t.empty()) {
    throw InvalidArgument("minmax_normalize: empty tensor");
  }
  auto [lo_it, hi_it] = std::minmax_element(t.values().begin(), t.values().end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<double> out(t.size(), 0.0);
  if (range >= 1e-12) {
    std::transform(t.values().begin(), t.values().end(), out.begin(), [&](double v) { return (v - lo) / range; });
  }
  return Tensor(t.shape(), std::move(out));
}

namespace {

struct Sample {
  std::size_t i0, i1;
  double frac;
};

std::vector<Sample> axis_samples(std::size_t in, std::size_t out) {
  std::vector<Sample> samples(out);
  for (std::size_t o = 0; o < out; ++o) {
    if (in == 1 || out == 1) {
      samples[o] = {0, 0, 0.0};
      continue;
    }
    const double src = static_cast<double>(o) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
    auto i0 = std::min(static_cast<std::size_t>(std::floor(src)), in - 1);
    auto i1 = std::min(i0 + 1, in - 1);
    samples[o] = {i0, i1, src - static_cast<double>(i0)};
  }
  return samples;
}

}  // namespace

Tensor resize_bilinear(const Tensor& t, std::size_t out_h, std::size_t out_w) {
  if (t.rank() != 2) {
    throw ShapeMismatch("resize_bilinear expects a 2-D tensor, got " + shape_string(t.shape()));
  }
  if (out_h == 0 || out_w == 0) {
    throw InvalidArgument("resize_bilinear: output size must be positive");
  }
  const auto h = t.dim(0);
  const auto w = t.dim(1);
  if (h == out_h && w == out_w) {
    return t;
  }
  const auto rows = axis_samples(h, out_h);
  const auto cols = axis_samples(w, out_w);
  std::vector<double> out(out_h * out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const auto& rs = rows[r];
    for (std::size_t c = 0; c < out_w; ++c) {
      const auto& cs = cols[c];
      const double top = t.at(rs.i0, cs.i0) + (t.at(rs.i0, cs.i1) - t.at(rs.i0, cs.i0)) * cs.frac;
      const double bottom = t.at(rs.i1, cs.i0) + (t.at(rs.i1, cs.i1) - t.at(rs.i1, cs.i0)) * cs.frac;
      out[r * out_w + c] = top + (bottom - top) * rs.frac;
    }
  }
  return Tensor({out_h, out_w}, std::move(out));
}

}  // namespace klsal
