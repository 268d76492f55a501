#pragma once

#include <cstddef>
#include <filesystem>
#include <variant>
#include <vector>

#include "klsal/affinity.hpp"
#include "klsal/saliency.hpp"
#include "klsal/tensor.hpp"

namespace klsal::tinycnn {

/// Valid 3x3 cross-correlation, stride 1: (C,H,W) * (F,C,3,3) + bias(F) -> (F,H-2,W-2).
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);

Tensor relu(const Tensor& input);

/// 2x2 max pooling, stride 2; an odd trailing row/column is dropped.
Tensor maxpool2(const Tensor& input);

/// weights (K,N) times the flattened input plus bias(K).
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct ConvLayer {
  Tensor weights;
  Tensor bias;
};
struct ReluLayer {};
struct MaxPoolLayer {};
struct DenseLayer {
  Tensor weights;
  Tensor bias;
};

using Layer = std::variant<ConvLayer, ReluLayer, MaxPoolLayer, DenseLayer>;

struct ForwardResult {
  FeatureStack features;
  ScoreVector logits;
};

/// Inference-only network. Immutable once constructed; forward() may be
/// called concurrently.
class Model {
 public:
  /// Validates the shape chain: every layer accepts its predecessor's output,
  /// the last layer produces `classes` values and `feature_layer` yields a
  /// 3-D activation.
  Model(Shape input_shape, std::size_t classes, std::size_t feature_layer, std::vector<Layer> layers);

  /// Reads a JSON manifest; weight paths resolve relative to its directory.
  static Model load(const std::filesystem::path& manifest);

  const Shape& input_shape() const { return input_shape_; }
  std::size_t classes() const { return classes_; }
  std::size_t feature_layer() const { return feature_layer_; }
  const std::vector<Layer>& layers() const { return layers_; }
  /// Output shape of each layer, as computed at construction.
  const std::vector<Shape>& layer_shapes() const { return shapes_; }

  /// Runs every layer, capturing the activation of `feature_layer` and the
  /// final (pre-softmax) outputs.
  ForwardResult forward(const Tensor& image) const;

 private:
  Shape input_shape_;
  std::size_t classes_;
  std::size_t feature_layer_;
  std::vector<Layer> layers_;
  std::vector<Shape> shapes_;
};

}  // namespace klsal::tinycnn
