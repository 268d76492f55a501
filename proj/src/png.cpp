#include "klsal/png.hpp"

#include <png.h>

#include <cstring>

#include "klsal/error.hpp"
#include "klsal/io.hpp"

namespace klsal::png {

namespace {

struct ImageGuard {
  png_image image{};
  ImageGuard() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~ImageGuard() { png_image_free(&image); }
  ImageGuard(const ImageGuard&) = delete;
  ImageGuard& operator=(const ImageGuard&) = delete;
};

}  // namespace

Image load(const std::filesystem::path& path) {
  auto bytes = io::read_file(path);
  ImageGuard g;
  if (!png_image_begin_read_from_memory(&g.image, bytes.data(), bytes.size())) {
    throw IoError("cannot decode PNG '" + path.string() + "': " + g.image.message);
  }
  const bool color = (g.image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  g.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image out{g.image.height, g.image.width, color ? 3u : 1u, {}};
  out.pixels.resize(PNG_IMAGE_SIZE(g.image));
  if (!png_image_finish_read(&g.image, nullptr, out.pixels.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG '" + path.string() + "': " + g.image.message);
  }
  return out;
}

RgbImage to_rgb(const Image& img) {
  RgbImage out{img.height, img.width, {}};
  if (img.channels == 3) {
    out.pixels = img.pixels;
    return out;
  }
  out.pixels.reserve(img.pixels.size() * 3);
  for (auto v : img.pixels) out.pixels.insert(out.pixels.end(), {v, v, v});
  return out;
}

Tensor to_tensor(const Image& img) {
  const auto plane = img.height * img.width;
  std::vector<double> data(plane * img.channels);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < img.channels; ++c) {
      data[c * plane + p] = img.pixels[p * img.channels + c] / 255.0;
    }
  }
  return Tensor({img.channels, img.height, img.width}, std::move(data));
}

std::vector<std::uint8_t> encode_rgb(const RgbImage& img) {
  if (img.pixels.size() != img.height * img.width * 3) {
    throw ShapeMismatch("RGB buffer size does not match its dimensions");
  }
  ImageGuard g;
  g.image.width = static_cast<png_uint_32>(img.width);
  g.image.height = static_cast<png_uint_32>(img.height);
  g.image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&g.image, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + g.image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&g.image, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + g.image.message);
  }
  out.resize(size);
  return out;
}

void save_rgb(const std::filesystem::path& path, const RgbImage& img) { io::write_file_atomic(path, encode_rgb(img)); }

}  // namespace klsal::png
