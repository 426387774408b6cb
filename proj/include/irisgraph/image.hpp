#pragma once

// Raster types shared by the whole pipeline: 8-bit grayscale images, RGB
// images (only as grayscale-conversion input) and binary iris masks.

#include <cstdint>
#include <numeric>
#include <vector>

#include "irisgraph/error.hpp"

namespace irisgraph {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(std::size_t(w) * std::size_t(h), fill) {}

  std::uint8_t at(int row, int col) const {
    return pixels[std::size_t(row) * width + col];
  }
  std::uint8_t& at(int row, int col) {
    return pixels[std::size_t(row) * width + col];
  }
  std::size_t size() const { return pixels.size(); }

  bool valid() const {
    return width > 0 && height > 0 &&
           pixels.size() == std::size_t(width) * std::size_t(height);
  }

  bool operator==(const Image& o) const = default;
};

// Interleaved RGB, 8 bits per channel.
struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  bool valid() const {
    return width > 0 && height > 0 &&
           rgb.size() == 3 * std::size_t(width) * std::size_t(height);
  }
};

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  Mask() = default;
  Mask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), bits(std::size_t(w) * std::size_t(h), fill) {}

  std::uint8_t at(int row, int col) const {
    return bits[std::size_t(row) * width + col];
  }
  std::uint8_t& at(int row, int col) {
    return bits[std::size_t(row) * width + col];
  }

  std::size_t true_count() const {
    return std::accumulate(bits.begin(), bits.end(), std::size_t{0});
  }
  bool empty_mask() const { return true_count() == 0; }
};

inline void require_valid(const Image& img, const char* what) {
  if (!img.valid()) throw DataError(std::string(what) + ": invalid image buffer");
}

}  // namespace irisgraph
