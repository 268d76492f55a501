#include "klsal/tinycnn.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "klsal/error.hpp"
#include "klsal/io.hpp"
#include "klsal/npy.hpp"
#include "json.hpp"

namespace klsal::tinycnn {

using nlohmann::json;

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  if (input.rank() != 3) {
    throw ShapeMismatch("conv2d input must be C x H x W, got " + shape_string(input.shape()));
  }
  if (kernels.rank() != 4 || kernels.dim(2) != 3 || kernels.dim(3) != 3) {
    throw ShapeMismatch("conv2d kernels must be F x C x 3 x 3, got " + shape_string(kernels.shape()));
  }
  const auto c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const auto f = kernels.dim(0);
  if (kernels.dim(1) != c) {
    throw ShapeMismatch("conv2d kernels expect " + std::to_string(kernels.dim(1)) + " channels, input has " +
                        std::to_string(c));
  }
  if (bias.rank() != 1 || bias.dim(0) != f) {
    throw ShapeMismatch("conv2d bias must have " + std::to_string(f) + " entries, got " + shape_string(bias.shape()));
  }
  if (h < 3 || w < 3) {
    throw ShapeMismatch("conv2d input spatial size must be at least 3x3, got " + shape_string(input.shape()));
  }
  const auto oh = h - 2, ow = w - 2;
  const auto x = input.data();
  const auto k = kernels.data();
  std::vector<double> out(f * oh * ow);
  for (std::size_t o = 0; o < f; ++o) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t col = 0; col < ow; ++col) {
        double acc = bias[o];
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double* kk = &k[(o * c + ch) * 9];
          const double* xx = &x[(ch * h + r) * w + col];
          for (std::size_t dr = 0; dr < 3; ++dr) {
            for (std::size_t dc = 0; dc < 3; ++dc) acc += kk[dr * 3 + dc] * xx[dr * w + dc];
          }
        }
        out[(o * oh + r) * ow + col] = acc;
      }
    }
  }
  return Tensor({f, oh, ow}, std::move(out));
}

Tensor relu(const Tensor& input) {
  std::vector<double> out(input.values());
  for (auto& v : out) v = std::max(v, 0.0);
  return Tensor(input.shape(), std::move(out));
}

Tensor maxpool2(const Tensor& input) {
  if (input.rank() != 3 || input.dim(1) < 2 || input.dim(2) < 2) {
    throw ShapeMismatch("maxpool2 input must be C x H x W with H, W >= 2, got " + shape_string(input.shape()));
  }
  const auto c = input.dim(0), oh = input.dim(1) / 2, ow = input.dim(2) / 2;
  std::vector<double> out(c * oh * ow);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t col = 0; col < ow; ++col) {
        out[(ch * oh + r) * ow + col] =
            std::max({input.at(ch, 2 * r, 2 * col), input.at(ch, 2 * r, 2 * col + 1), input.at(ch, 2 * r + 1, 2 * col),
                      input.at(ch, 2 * r + 1, 2 * col + 1)});
      }
    }
  }
  return Tensor({c, oh, ow}, std::move(out));
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2 || weights.dim(1) != input.size()) {
    throw ShapeMismatch("dense weights " + shape_string(weights.shape()) + " do not accept " +
                        std::to_string(input.size()) + " inputs");
  }
  const auto k = weights.dim(0), n = weights.dim(1);
  if (bias.rank() != 1 || bias.dim(0) != k) {
    throw ShapeMismatch("dense bias must have " + std::to_string(k) + " entries, got " + shape_string(bias.shape()));
  }
  std::vector<double> out(k);
  for (std::size_t o = 0; o < k; ++o) {
    double acc = bias[o];
    for (std::size_t i = 0; i < n; ++i) acc += weights.at(o, i) * input[i];
    out[o] = acc;
  }
  return Tensor({k}, std::move(out));
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Shape output_shape(const Layer& layer, const Shape& in, std::size_t index) {
  auto where = "layer " + std::to_string(index) + ": ";
  return std::visit(
      overloaded{
          [&](const ConvLayer& l) -> Shape {
            const auto& ws = l.weights.shape();
            if (in.size() != 3 || ws.size() != 4 || ws[1] != in[0] || ws[2] != 3 || ws[3] != 3) {
              throw ShapeMismatch(where + "conv weights " + shape_string(ws) + " incompatible with input " +
                                  shape_string(in));
            }
            if (l.bias.shape() != Shape{ws[0]}) {
              throw ShapeMismatch(where + "conv bias " + shape_string(l.bias.shape()) + " does not match " +
                                  std::to_string(ws[0]) + " filters");
            }
            if (in[1] < 3 || in[2] < 3) throw ShapeMismatch(where + "conv input smaller than 3x3");
            return {ws[0], in[1] - 2, in[2] - 2};
          },
          [&](const ReluLayer&) -> Shape { return in; },
          [&](const MaxPoolLayer&) -> Shape {
            if (in.size() != 3 || in[1] < 2 || in[2] < 2) {
              throw ShapeMismatch(where + "maxpool input " + shape_string(in) + " is not C x H x W with H, W >= 2");
            }
            return {in[0], in[1] / 2, in[2] / 2};
          },
          [&](const DenseLayer& l) -> Shape {
            const auto& ws = l.weights.shape();
            if (ws.size() != 2 || ws[1] != shape_size(in)) {
              throw ShapeMismatch(where + "dense weights " + shape_string(ws) + " incompatible with input " +
                                  shape_string(in));
            }
            if (l.bias.shape() != Shape{ws[0]}) {
              throw ShapeMismatch(where + "dense bias " + shape_string(l.bias.shape()) + " does not match " +
                                  std::to_string(ws[0]) + " outputs");
            }
            return {ws[0]};
          },
      },
      layer);
}

Tensor run_layer(const Layer& layer, const Tensor& x) {
  return std::visit(overloaded{
                        [&](const ConvLayer& l) { return conv2d(x, l.weights, l.bias); },
                        [&](const ReluLayer&) { return relu(x); },
                        [&](const MaxPoolLayer&) { return maxpool2(x); },
                        [&](const DenseLayer& l) { return dense(x, l.weights, l.bias); },
                    },
                    layer);
}

}  // namespace

Model::Model(Shape input_shape, std::size_t classes, std::size_t feature_layer, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)),
      classes_(classes),
      feature_layer_(feature_layer),
      layers_(std::move(layers)) {
  if (input_shape_.size() != 3) {
    throw ShapeMismatch("model input shape must be [C, H, W], got " + shape_string(input_shape_));
  }
  if (layers_.empty()) {
    throw ShapeMismatch("model has no layers");
  }
  if (feature_layer_ >= layers_.size()) {
    throw ShapeMismatch("feature layer " + std::to_string(feature_layer_) + " out of range for " +
                        std::to_string(layers_.size()) + " layers");
  }
  Shape current = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    current = output_shape(layers_[i], current, i);
    shapes_.push_back(current);
  }
  if (shapes_.back() != Shape{classes_}) {
    throw ShapeMismatch("model output shape " + shape_string(shapes_.back()) + " does not match " +
                        std::to_string(classes_) + " classes");
  }
  if (shapes_[feature_layer_].size() != 3) {
    throw ShapeMismatch("feature layer " + std::to_string(feature_layer_) + " output " +
                        shape_string(shapes_[feature_layer_]) + " is not M x H x W");
  }
}

Model Model::load(const std::filesystem::path& manifest) {
  json doc;
  try {
    auto bytes = io::read_file(manifest);
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw MalformedContainer("manifest '" + manifest.string() + "' is not valid JSON: " + e.what());
  }
  const auto dir = manifest.parent_path();
  try {
    auto input_shape = doc.at("input_shape").get<Shape>();
    auto classes = doc.at("classes").get<std::size_t>();
    auto feature_layer = doc.at("feature_layer").get<std::size_t>();
    std::vector<Layer> layers;
    std::vector<std::optional<Shape>> declared;
    for (const auto& entry : doc.at("layers")) {
      const auto type = entry.at("type").get<std::string>();
      if (type == "conv") {
        layers.emplace_back(ConvLayer{npy::load(dir / entry.at("weights").get<std::string>()),
                                      npy::load(dir / entry.at("bias").get<std::string>())});
      } else if (type == "dense") {
        layers.emplace_back(DenseLayer{npy::load(dir / entry.at("weights").get<std::string>()),
                                       npy::load(dir / entry.at("bias").get<std::string>())});
      } else if (type == "relu") {
        layers.emplace_back(ReluLayer{});
      } else if (type == "maxpool") {
        layers.emplace_back(MaxPoolLayer{});
      } else {
        throw MalformedContainer("manifest layer type '" + type + "' is not one of conv/relu/maxpool/dense");
      }
      declared.push_back(entry.contains("output_shape") ? std::optional(entry["output_shape"].get<Shape>())
                                                        : std::nullopt);
    }
    Model model(std::move(input_shape), classes, feature_layer, std::move(layers));
    for (std::size_t i = 0; i < declared.size(); ++i) {
      if (declared[i] && *declared[i] != model.shapes_[i]) {
        throw ShapeMismatch("layer " + std::to_string(i) + " declares output " + shape_string(*declared[i]) +
                            " but computes " + shape_string(model.shapes_[i]));
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw MalformedContainer("manifest '" + manifest.string() + "': " + e.what());
  }
}

ForwardResult Model::forward(const Tensor& image) const {
  if (image.shape() != input_shape_) {
    throw ShapeMismatch("input shape check: image is " + shape_string(image.shape()) + ", model expects " +
                        shape_string(input_shape_));
  }
  Tensor x = image;
  std::optional<Tensor> captured;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = run_layer(layers_[i], x);
    if (i == feature_layer_) captured = x;
  }
  return {FeatureStack(std::move(*captured)), ScoreVector(x.values())};
}

}  // namespace klsal::tinycnn
