#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "klsal/klgrad.hpp"
#include "klsal/tensor.hpp"

namespace klsal {

/// M >= 1 feature maps of a common H x W, stored as an M x H x W tensor.
class FeatureStack {
 public:
  explicit FeatureStack(Tensor maps);

  std::size_t count() const { return maps_.dim(0); }
  std::size_t height() const { return maps_.dim(1); }
  std::size_t width() const { return maps_.dim(2); }
  const Tensor& tensor() const { return maps_; }

  /// Row-major view of map `m`.
  std::span<const double> map(std::size_t m) const {
    return maps_.data().subspan(m * height() * width(), height() * width());
  }

 private:
  Tensor maps_;
};

enum class CombineMode { literal, matched };

std::string_view to_string(CombineMode mode);
CombineMode parse_combine_mode(std::string_view name);

struct SaliencyMap {
  Tensor raw;
  Tensor normalized;
  CombineMode mode;
};

/// E = sum_i sum_j x_i |alpha_j|, evaluated as the literal double loop:
/// every map is scaled by every weight. Works for any M and K.
SaliencyMap combine_literal(const FeatureStack& features, const AlphaVector& alpha);

/// E = sum_i |alpha_i| x_i. Requires one weight per map.
SaliencyMap combine_matched(const FeatureStack& features, const AlphaVector& alpha);

SaliencyMap combine(const FeatureStack& features, const AlphaVector& alpha, CombineMode mode);

/// Normalizes the raw map to [0, 1] then resizes it to out_h x out_w.
Tensor finalize_map(const SaliencyMap& m, std::size_t out_h, std::size_t out_w);

/// Interleaved 8-bit RGB pixels.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  std::uint8_t at(std::size_t r, std::size_t c, std::size_t ch) const { return pixels[(r * width + c) * 3 + ch]; }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

enum class Colormap { gray, jet };

std::string_view to_string(Colormap cmap);
Colormap parse_colormap(std::string_view name);

struct Rgb {
  std::uint8_t r, g, b;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Color of a single value in [0, 1].
Rgb colormap_lookup(double t, Colormap cmap);

/// round(255 * v), halves rounded up.
std::uint8_t quantize_unit(double v);

struct RenderedHeatmap {
  RgbImage image;
  Colormap colormap;
  /// Set when the heatmap was blended over a base image.
  double blend = 0.0;
};

/// Throws ValueOutOfRange when any value lies outside [0, 1].
RenderedHeatmap render(const Tensor& heat, Colormap cmap);

/// round((1 - blend) * base + blend * heat) per channel.
RenderedHeatmap overlay(const RgbImage& base, const RenderedHeatmap& heat, double blend);

/// Share of entries >= tau.
double salient_area_fraction(const Tensor& heat, double tau = 0.5);

}  // namespace klsal
