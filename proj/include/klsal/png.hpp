#pragma once

#include <filesystem>

#include "klsal/saliency.hpp"

namespace klsal::png {

/// Decoded 8-bit image with 1 (gray) or 3 (RGB) channels; alpha is dropped
/// and palettes and 16-bit depths are expanded/stripped.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;
};

Image load(const std::filesystem::path& path);

/// Gray images are replicated across the three channels.
RgbImage to_rgb(const Image& img);

/// Channels x H x W tensor with values scaled to [0, 1].
Tensor to_tensor(const Image& img);

std::vector<std::uint8_t> encode_rgb(const RgbImage& img);
void save_rgb(const std::filesystem::path& path, const RgbImage& img);

}  // namespace klsal::png
