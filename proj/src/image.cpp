#include "kgard/image.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "kgard/errors.hpp"

namespace kgard {

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), pixels_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width * height) {
    throw ArgumentError("image: expected " + std::to_string(width * height) + " pixels, got " +
                        std::to_string(pixels_.size()));
  }
}

double GrayImage::clamped(long row, long col) const {
  const long r = std::clamp(row, 0L, static_cast<long>(height_) - 1);
  const long c = std::clamp(col, 0L, static_cast<long>(width_) - 1);
  return pixels_[static_cast<std::size_t>(r) * width_ + static_cast<std::size_t>(c)];
}

}  // namespace kgard
