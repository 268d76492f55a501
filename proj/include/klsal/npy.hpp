#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "klsal/tensor.hpp"

namespace klsal::npy {

/// Parses an NPY v1.0 container holding '<f4' or '<f8' data in C order.
/// f4 payloads are widened to double.
Tensor read(std::span<const std::uint8_t> bytes);

/// Serializes as NPY v1.0, descr '<f8', C order, header padded to 64 bytes.
std::vector<std::uint8_t> write(const Tensor& t);

Tensor load(const std::filesystem::path& path);
void save(const std::filesystem::path& path, const Tensor& t);

}  // namespace klsal::npy
