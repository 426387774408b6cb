#pragma once

// Portable anymap IO. Readers accept P2/P5 graymaps and P3/P6 pixmaps with
// `#` comments anywhere in the header; the writer emits binary P5. Only
// 8-bit data (maxval <= 255) is supported.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "irisgraph/error.hpp"
#include "irisgraph/image.hpp"

namespace irisgraph {
namespace detail {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof()) throw FormatError("read failure: " + path);
  return ss.str();
}

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;  // first byte after the maxval whitespace
};

// Scans magic, width, height, maxval. Comments run to end of line.
inline PnmHeader parse_pnm_header(const std::string& bytes, const std::string& path) {
  PnmHeader h;
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto next_token = [&]() -> std::string {
    skip_space();
    std::size_t start = pos;
    while (pos < bytes.size() &&
           !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
           bytes[pos] != '#')
      ++pos;
    if (start == pos) throw FormatError(path + ": truncated header");
    return bytes.substr(start, pos - start);
  };
  auto next_int = [&](const char* field) -> int {
    std::string tok = next_token();
    try {
      std::size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return static_cast<int>(v);
    } catch (const std::exception&) {
      throw FormatError(path + ": bad " + field + " field '" + tok + "'");
    }
  };

  h.magic = next_token();
  h.width = next_int("width");
  h.height = next_int("height");
  h.maxval = next_int("maxval");
  if (h.width <= 0 || h.height <= 0)
    throw FormatError(path + ": non-positive dimensions");
  if (h.maxval <= 0) throw FormatError(path + ": non-positive maxval");
  if (h.maxval > 255)
    throw FormatError(path + ": maxval " + std::to_string(h.maxval) +
                      " (only 8-bit maps are supported)");
  // binary formats: exactly one whitespace byte separates maxval from data
  if (pos < bytes.size()) ++pos;
  h.data_offset = pos;
  return h;
}

inline std::vector<std::uint8_t> parse_ascii_samples(const std::string& bytes,
                                                     std::size_t pos,
                                                     std::size_t count,
                                                     const std::string& path) {
  std::vector<std::uint8_t> out;
  out.reserve(count);
  while (out.size() < count) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size()) throw FormatError(path + ": truncated pixel data");
    int v = 0;
    bool any = false;
    while (pos < bytes.size() &&
           std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) throw FormatError(path + ": non-numeric pixel data");
    if (v > 255) throw FormatError(path + ": sample out of 8-bit range");
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

}  // namespace detail

inline Image load_pgm(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  const auto h = detail::parse_pnm_header(bytes, path);
  if (h.magic != "P5" && h.magic != "P2")
    throw FormatError(path + ": magic '" + h.magic + "' is not a P2/P5 graymap");
  Image img(h.width, h.height);
  const std::size_t n = img.size();
  if (h.magic == "P5") {
    if (bytes.size() < h.data_offset + n)
      throw FormatError(path + ": truncated pixel data");
    std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data()) + h.data_offset,
                n, img.pixels.begin());
  } else {
    img.pixels = detail::parse_ascii_samples(bytes, h.data_offset, n, path);
  }
  return img;
}

inline ColorImage load_ppm(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  const auto h = detail::parse_pnm_header(bytes, path);
  if (h.magic != "P6" && h.magic != "P3")
    throw FormatError(path + ": magic '" + h.magic + "' is not a P3/P6 pixmap");
  ColorImage img;
  img.width = h.width;
  img.height = h.height;
  const std::size_t n = 3 * std::size_t(h.width) * std::size_t(h.height);
  img.rgb.resize(n);
  if (h.magic == "P6") {
    if (bytes.size() < h.data_offset + n)
      throw FormatError(path + ": truncated pixel data");
    std::copy_n(reinterpret_cast<const std::uint8_t*>(bytes.data()) + h.data_offset,
                n, img.rgb.begin());
  } else {
    img.rgb = detail::parse_ascii_samples(bytes, h.data_offset, n, path);
  }
  return img;
}

// Writes binary P5. `comments` become `#` header lines (no newlines inside).
inline void save_pgm(const Image& img, const std::string& path,
                     const std::vector<std::string>& comments = {}) {
  require_valid(img, "save_pgm");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot create file: " + path);
  out << "P5\n";
  for (const auto& c : comments) out << "# " << c << "\n";
  out << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            std::streamsize(img.size()));
  if (!out) throw FormatError("write failure: " + path);
}

}  // namespace irisgraph
