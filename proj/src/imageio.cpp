#include "kgard/imageio.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "kgard/errors.hpp"

namespace kgard {

std::uint8_t quantize_pixel(double v) {
  if (std::isnan(v)) return 0;
  const double r = std::round(v);
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

namespace {

class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, std::size_t start)
      : bytes_(bytes), pos_(start) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (v > 1000000000UL) throw FormatError(std::string("PGM ") + what + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      throw FormatError(std::string("PGM header: expected ") + what,
                        pos_);
    }
    return v;
  }

  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("PGM header: expected whitespace after maxval", pos_);
    }
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("not a binary PGM file (magic must be P5)", 0);
  }
  if (bytes.size() < 3 || !std::isspace(bytes[2])) {
    throw FormatError("PGM header: expected whitespace after magic", 2);
  }
  HeaderReader r(bytes, 2);
  const std::size_t width = r.number("width");
  const std::size_t height = r.number("height");
  if (width == 0 || height == 0) throw FormatError("PGM dimensions must be positive", r.pos());
  r.skip_space_and_comments();
  const std::size_t mpos = r.pos();
  const unsigned long maxval = r.number("maxval");
  if (maxval != 255) throw FormatError("only maxval 255 is supported", mpos);
  r.single_whitespace();
  const std::size_t offset = r.pos();
  const std::size_t count = width * height;
  if (bytes.size() - offset < count) {
    throw FormatError("PGM payload truncated: expected " + std::to_string(count) + " bytes, found " +
                          std::to_string(bytes.size() - offset),
                      bytes.size());
  }
  std::vector<double> px(count);
  for (std::size_t i = 0; i < count; ++i) px[i] = static_cast<double>(bytes[offset + i]);
  return GrayImage(width, height, std::move(px));
}

std::vector<std::uint8_t> write_pgm(const GrayImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + image.size());
  for (double v : image.pixels()) out.push_back(quantize_pixel(v));
  return out;
}

GrayImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return read_pgm(bytes);
}

void save_pgm(const std::string& path, const GrayImage& image) {
  const auto bytes = write_pgm(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace kgard
