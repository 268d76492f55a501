#include "klsal/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "klsal/error.hpp"

namespace klsal {

FeatureStack::FeatureStack(Tensor maps) : maps_(std::move(maps)) {
  if (maps_.rank() != 3) {
    throw ShapeMismatch("feature maps must be M x H x W, got shape " + shape_string(maps_.shape()));
  }
}

std::string_view to_string(CombineMode mode) { return mode == CombineMode::literal ? "literal" : "matched"; }

CombineMode parse_combine_mode(std::string_view name) {
  if (name == "literal") return CombineMode::literal;
  if (name == "matched") return CombineMode::matched;
  throw InvalidArgument("unknown combine mode '" + std::string(name) + "'");
}

namespace {

SaliencyMap make_map(const FeatureStack& f, std::vector<double> raw, CombineMode mode) {
  Tensor t({f.height(), f.width()}, std::move(raw));
  auto normalized = minmax_normalize(t);
  return {std::move(t), std::move(normalized), mode};
}

}  // namespace

SaliencyMap combine_literal(const FeatureStack& features, const AlphaVector& alpha) {
  const auto n = features.height() * features.width();
  std::vector<double> e(n, 0.0);
  std::vector<double> temp(n);
  for (std::size_t i = 0; i < features.count(); ++i) {
    const auto x = features.map(i);
    std::fill(temp.begin(), temp.end(), 0.0);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      const double w = std::abs(alpha[j]);
      for (std::size_t p = 0; p < n; ++p) temp[p] += x[p] * w;
    }
    for (std::size_t p = 0; p < n; ++p) e[p] += temp[p];
  }
  return make_map(features, std::move(e), CombineMode::literal);
}

SaliencyMap combine_matched(const FeatureStack& features, const AlphaVector& alpha) {
  if (features.count() != alpha.size()) {
    throw ShapeMismatch("matched mode needs one weight per feature map: " + std::to_string(features.count()) +
                        " maps vs " + std::to_string(alpha.size()) + " weights");
  }
  const auto n = features.height() * features.width();
  std::vector<double> e(n, 0.0);
  for (std::size_t i = 0; i < features.count(); ++i) {
    const auto x = features.map(i);
    const double w = std::abs(alpha[i]);
    for (std::size_t p = 0; p < n; ++p) e[p] += w * x[p];
  }
  return make_map(features, std::move(e), CombineMode::matched);
}

SaliencyMap combine(const FeatureStack& features, const AlphaVector& alpha, CombineMode mode) {
  return mode == CombineMode::literal ? combine_literal(features, alpha) : combine_matched(features, alpha);
}

Tensor finalize_map(const SaliencyMap& m, std::size_t out_h, std::size_t out_w) {
  return resize_bilinear(minmax_normalize(m.raw), out_h, out_w);
}

std::string_view to_string(Colormap cmap) { return cmap == Colormap::jet ? "jet" : "gray"; }

Colormap parse_colormap(std::string_view name) {
  if (name == "jet") return Colormap::jet;
  if (name == "gray") return Colormap::gray;
  throw InvalidArgument("unknown colormap '" + std::string(name) + "'");
}

std::uint8_t quantize_unit(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(255.0 * v + 0.5), 0.0, 255.0));
}

Rgb colormap_lookup(double t, Colormap cmap) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ValueOutOfRange("heat value " + std::to_string(t) + " outside [0, 1]");
  }
  if (cmap == Colormap::gray) {
    const auto v = quantize_unit(t);
    return {v, v, v};
  }
  auto ramp = [](double a, double b) { return std::clamp(std::min(a, b), 0.0, 1.0); };
  return {quantize_unit(ramp(4.0 * t - 1.5, -4.0 * t + 4.5)), quantize_unit(ramp(4.0 * t - 0.5, -4.0 * t + 3.5)),
          quantize_unit(ramp(4.0 * t + 0.5, -4.0 * t + 2.5))};
}

RenderedHeatmap render(const Tensor& heat, Colormap cmap) {
  if (heat.rank() != 2) {
    throw ShapeMismatch("render expects a 2-D heatmap, got shape " + shape_string(heat.shape()));
  }
  RgbImage img{heat.dim(0), heat.dim(1), {}};
  img.pixels.reserve(heat.size() * 3);
  for (double t : heat.values()) {
    const auto c = colormap_lookup(t, cmap);
    img.pixels.insert(img.pixels.end(), {c.r, c.g, c.b});
  }
  return {std::move(img), cmap, 0.0};
}

RenderedHeatmap overlay(const RgbImage& base, const RenderedHeatmap& heat, double blend) {
  if (!(blend >= 0.0 && blend <= 1.0)) {
    throw ValueOutOfRange("blend " + std::to_string(blend) + " outside [0, 1]");
  }
  if (base.height != heat.image.height || base.width != heat.image.width) {
    throw ShapeMismatch("overlay base is " + std::to_string(base.height) + "x" + std::to_string(base.width) +
                        " but heatmap is " + std::to_string(heat.image.height) + "x" +
                        std::to_string(heat.image.width));
  }
  RenderedHeatmap out{{base.height, base.width, std::vector<std::uint8_t>(base.pixels.size())}, heat.colormap, blend};
  for (std::size_t i = 0; i < base.pixels.size(); ++i) {
    const double v = (1.0 - blend) * base.pixels[i] + blend * heat.image.pixels[i];
    out.image.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
  }
  return out;
}

double salient_area_fraction(const Tensor& heat, double tau) {
  if (heat.empty()) {
    throw InvalidArgument("salient_area_fraction: empty heatmap");
  }
  const auto hits = std::count_if(heat.values().begin(), heat.values().end(), [&](double v) { return v >= tau; });
  return static_cast<double>(hits) / static_cast<double>(heat.size());
}

}  // namespace klsal
