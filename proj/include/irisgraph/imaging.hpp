#pragma once

// Preprocessing pipeline: grayscale conversion, mask crop, bilinear resize,
// contrast stretching / histogram equalization, reflection inpainting and
// the 3x3 cross spectral filter. All operations are pure and keep pixel
// values in [0, 255].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "irisgraph/ccl.hpp"
#include "irisgraph/error.hpp"
#include "irisgraph/image.hpp"
#include "irisgraph/pnm.hpp"

namespace irisgraph {

// Loads any supported map as grayscale: P2/P5 directly, P3/P6 via luma.
inline Image load_image_any(const std::string& path);

// Masks are PGM files; pixels above 127 count as iris.
inline Mask load_mask(const std::string& path);

inline std::uint8_t clamp_u8(long v) {
  return std::uint8_t(std::clamp(v, 0L, 255L));
}

// --------------------------------------------------------------------------
// grayscale

// Rec.601 luma, rounded.
inline Image to_grayscale(const ColorImage& color) {
  if (!color.valid()) throw DataError("to_grayscale: invalid color image");
  Image out(color.width, color.height);
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double r = color.rgb[3 * p + 0];
    const double g = color.rgb[3 * p + 1];
    const double b = color.rgb[3 * p + 2];
    out.pixels[p] = clamp_u8(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
  }
  return out;
}

// Grayscale input passes through unchanged.
inline Image to_grayscale(const Image& gray) {
  require_valid(gray, "to_grayscale");
  return gray;
}

// --------------------------------------------------------------------------
// mask crop

// Zeroes everything outside the mask, then crops to the tight bounding
// rectangle of the mask's true bits.
inline Image apply_mask_and_crop(const Image& img, const Mask& mask) {
  require_valid(img, "apply_mask_and_crop");
  if (mask.width != img.width || mask.height != img.height)
    throw DataError("apply_mask_and_crop: mask dimensions do not match image");
  int min_r = img.height, max_r = -1, min_c = img.width, max_c = -1;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (mask.at(r, c)) {
        min_r = std::min(min_r, r);
        max_r = std::max(max_r, r);
        min_c = std::min(min_c, c);
        max_c = std::max(max_c, c);
      }
    }
  }
  if (max_r < 0) throw DataError("apply_mask_and_crop: empty mask, image rejected");
  Image out(max_c - min_c + 1, max_r - min_r + 1);
  for (int r = min_r; r <= max_r; ++r) {
    for (int c = min_c; c <= max_c; ++c) {
      out.at(r - min_r, c - min_c) = mask.at(r, c) ? img.at(r, c) : 0;
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// resize

// Bilinear with corner-aligned sampling: output corner pixels sample input
// corner pixels exactly; a singleton output axis samples coordinate 0.
inline Image resize_bilinear(const Image& img, int out_width, int out_height) {
  require_valid(img, "resize_bilinear");
  if (out_width <= 0 || out_height <= 0)
    throw ConfigError("resize_bilinear: non-positive output size");
  Image out(out_width, out_height);
  const double sx = out_width > 1 ? double(img.width - 1) / (out_width - 1) : 0.0;
  const double sy = out_height > 1 ? double(img.height - 1) / (out_height - 1) : 0.0;
  for (int r = 0; r < out_height; ++r) {
    const double fy = r * sy;
    const int y0 = int(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < out_width; ++c) {
      const double fx = c * sx;
      const int x0 = int(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * img.at(y0, x0) + wx * img.at(y0, x1);
      const double bot = (1.0 - wx) * img.at(y1, x0) + wx * img.at(y1, x1);
      out.at(r, c) = clamp_u8(std::lround((1.0 - wy) * top + wy * bot));
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// contrast

// Linear min-max stretch onto [0, 255]. A constant image maps to constant 0.
inline Image stretch_contrast(const Image& img) {
  require_valid(img, "stretch_contrast");
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const int lo = *lo_it, hi = *hi_it;
  Image out(img.width, img.height);
  if (hi == lo) return out;  // degenerate rule: constant -> 0
  const double scale = 255.0 / (hi - lo);
  std::array<std::uint8_t, 256> lut{};
  for (int v = lo; v <= hi; ++v) lut[v] = clamp_u8(std::lround((v - lo) * scale));
  for (std::size_t p = 0; p < img.size(); ++p) out.pixels[p] = lut[img.pixels[p]];
  return out;
}

// Cumulative-histogram equalization (optional alternative to stretching).
// Same degenerate rule: a constant image maps to constant 0.
inline Image equalize_histogram(const Image& img) {
  require_valid(img, "equalize_histogram");
  std::array<std::size_t, 256> hist{};
  for (std::uint8_t v : img.pixels) ++hist[v];
  std::array<std::size_t, 256> cdf{};
  std::size_t run = 0;
  for (int v = 0; v < 256; ++v) {
    run += hist[v];
    cdf[v] = run;
  }
  std::size_t cdf_min = 0;
  for (int v = 0; v < 256; ++v) {
    if (hist[v]) {
      cdf_min = cdf[v];
      break;
    }
  }
  Image out(img.width, img.height);
  const std::size_t total = img.size();
  if (total == cdf_min) return out;
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    if (cdf[v] < cdf_min) continue;
    lut[v] = clamp_u8(std::lround(255.0 * double(cdf[v] - cdf_min) / double(total - cdf_min)));
  }
  for (std::size_t p = 0; p < img.size(); ++p) out.pixels[p] = lut[img.pixels[p]];
  return out;
}

// --------------------------------------------------------------------------
// reflection removal

// Each 8-connected region of pixels >= threshold is replaced by the rounded
// mean of its one-pixel-wide outer boundary. Regions touching the border use
// whatever boundary pixels exist. If the whole image saturates there is no
// boundary to sample; the image is returned unchanged and *all_saturated is
// set when provided.
inline Image remove_reflections(const Image& img, int threshold = 250,
                                bool* all_saturated = nullptr) {
  require_valid(img, "remove_reflections");
  if (all_saturated) *all_saturated = false;

  std::vector<std::uint8_t> fg(img.size());
  std::size_t fg_count = 0;
  for (std::size_t p = 0; p < img.size(); ++p) {
    fg[p] = img.pixels[p] >= threshold;
    fg_count += fg[p];
  }
  if (fg_count == 0) return img;
  if (fg_count == img.size()) {
    if (all_saturated) *all_saturated = true;
    return img;
  }

  const LabelMap lm = label_components_8(fg.data(), img.width, img.height);
  std::vector<double> sum(std::size_t(lm.count) + 1, 0.0);
  std::vector<std::size_t> cnt(std::size_t(lm.count) + 1, 0);
  // stamp buffer dedupes boundary pixels shared by several region pixels
  std::vector<std::int32_t> stamp(img.size(), 0);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const std::int32_t label = lm.at(r, c);
      if (!label) continue;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nr = r + dr, nc = c + dc;
          if (nr < 0 || nr >= img.height || nc < 0 || nc >= img.width) continue;
          const std::size_t np = std::size_t(nr) * img.width + nc;
          if (lm.labels[np] != 0) continue;  // boundary is below threshold by construction
          if (stamp[np] == label) continue;
          stamp[np] = label;
          sum[label] += img.pixels[np];
          ++cnt[label];
        }
      }
    }
  }

  Image out = img;
  std::vector<std::uint8_t> fill(std::size_t(lm.count) + 1, 0);
  for (std::int32_t k = 1; k <= lm.count; ++k) {
    if (cnt[k]) fill[k] = clamp_u8(std::lround(sum[k] / double(cnt[k])));
  }
  for (std::size_t p = 0; p < img.size(); ++p) {
    const std::int32_t label = lm.labels[p];
    if (label && cnt[label]) out.pixels[p] = fill[label];
  }
  return out;
}

// --------------------------------------------------------------------------
// spectral filter

// 3x3 cross kernel [[0,a,0],[a,1,a],[0,a,0]] with a = 1/denominator.
struct SpectralFilter {
  int denominator = 7;

  double alpha() const { return 1.0 / denominator; }

  static SpectralFilter from_denominator(int denom) {
    if (denom < 5 || denom > 10)
      throw ConfigError("spectral filter: alpha 1/" + std::to_string(denom) +
                        " is not one of 1/10..1/5");
    return SpectralFilter{denom};
  }

  // Accepts "1/7" or a bare denominator "7".
  static SpectralFilter parse(const std::string& text) {
    std::string t = text;
    if (auto slash = t.find('/'); slash != std::string::npos) {
      if (t.substr(0, slash) != "1")
        throw ConfigError("spectral filter: numerator must be 1 in '" + text + "'");
      t = t.substr(slash + 1);
    }
    try {
      std::size_t used = 0;
      const int denom = std::stoi(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return from_denominator(denom);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("spectral filter: cannot parse alpha '" + text + "'");
    }
  }

  std::string to_string() const { return "1/" + std::to_string(denominator); }
};

// Cross-kernel convolution with replicate border padding; round, then clamp.
inline Image spectral_filter(const Image& img, SpectralFilter filter) {
  require_valid(img, "spectral_filter");
  SpectralFilter::from_denominator(filter.denominator);  // re-validate
  const double a = filter.alpha();
  Image out(img.width, img.height);
  for (int r = 0; r < img.height; ++r) {
    const int up = std::max(r - 1, 0);
    const int down = std::min(r + 1, img.height - 1);
    for (int c = 0; c < img.width; ++c) {
      const int left = std::max(c - 1, 0);
      const int right = std::min(c + 1, img.width - 1);
      const double v = img.at(r, c) +
                       a * (img.at(up, c) + img.at(down, c) +
                            img.at(r, left) + img.at(r, right));
      out.at(r, c) = clamp_u8(std::lround(v));
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// pipeline

enum class EqualizeMode { stretch, histogram };

struct PreprocessOptions {
  int out_width = 200;
  int out_height = 200;
  EqualizeMode equalize = EqualizeMode::stretch;
  bool remove_reflections = true;
  int reflect_threshold = 250;
  std::optional<SpectralFilter> filter;  // applied last when present
};

// Full chain: mask-crop (when a mask is given) -> resize -> contrast ->
// de-reflect -> optional spectral filter.
inline Image preprocess(const Image& img, const Mask* mask,
                        const PreprocessOptions& opt,
                        bool* all_saturated = nullptr) {
  Image work = mask ? apply_mask_and_crop(img, *mask) : img;
  work = resize_bilinear(work, opt.out_width, opt.out_height);
  work = opt.equalize == EqualizeMode::stretch ? stretch_contrast(work)
                                               : equalize_histogram(work);
  if (opt.remove_reflections)
    work = remove_reflections(work, opt.reflect_threshold, all_saturated);
  if (opt.filter) work = spectral_filter(work, *opt.filter);
  return work;
}

}  // namespace irisgraph
