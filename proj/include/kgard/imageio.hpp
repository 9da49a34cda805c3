#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kgard/image.hpp"

namespace kgard {

/// Round half away from zero, then clamp to [0, 255].
std::uint8_t quantize_pixel(double v);

/// Binary 8-bit PGM (P5, maxval 255). Header comments are accepted.
/// Throws FormatError carrying the byte offset of the first problem.
GrayImage read_pgm(std::span<const std::uint8_t> bytes);
/// Canonical "P5\n<w> <h>\n255\n" header followed by the quantized payload.
std::vector<std::uint8_t> write_pgm(const GrayImage& image);

GrayImage load_pgm(const std::string& path);
void save_pgm(const std::string& path, const GrayImage& image);

}  // namespace kgard
