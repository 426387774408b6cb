#pragma once

// Synthetic corpus generator: seeded value-noise textures replace the
// license-restricted iris data. Each user gets a unique multi-octave noise
// signature (frequencies, phases, lattice keys); each image is the user's
// base texture under a small affine jitter plus bounded additive noise, so
// same-user images differ less than different-user images.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "irisgraph/dataset.hpp"
#include "irisgraph/error.hpp"
#include "irisgraph/image.hpp"
#include "irisgraph/imaging.hpp"
#include "irisgraph/pnm.hpp"
#include "irisgraph/rng.hpp"

namespace irisgraph {

struct SyntheticSpec {
  int n_users = 10;
  int images_per_user = 20;
  int width = 200;
  int height = 200;
  double perturbation = 0.06;  // 0 = identical images within a user
  std::uint64_t seed = 0;
};

namespace detail {

inline double lattice_unit(std::uint64_t key, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h =
      splitmix64(splitmix64(key ^ std::uint64_t(ix)) ^ std::uint64_t(iy) * 0x9e3779b97f4a7c15ull);
  return double(h >> 11) * 0x1.0p-53;
}

inline double fade(double t) { return t * t * (3.0 - 2.0 * t); }

// Smoothed bilinear interpolation of a hashed unit lattice.
inline double value_noise(std::uint64_t key, double x, double y, double cell) {
  const double fx = x / cell, fy = y / cell;
  const double bx = std::floor(fx), by = std::floor(fy);
  const std::int64_t ix = std::int64_t(bx), iy = std::int64_t(by);
  const double tx = fade(fx - bx), ty = fade(fy - by);
  const double v00 = lattice_unit(key, ix, iy);
  const double v10 = lattice_unit(key, ix + 1, iy);
  const double v01 = lattice_unit(key, ix, iy + 1);
  const double v11 = lattice_unit(key, ix + 1, iy + 1);
  const double top = v00 + (v10 - v00) * tx;
  const double bot = v01 + (v11 - v01) * tx;
  return top + (bot - top) * ty;
}

struct NoiseOctave {
  std::uint64_t key = 0;
  double cell = 16.0;
  double amplitude = 1.0;
  double phase_x = 0.0;
  double phase_y = 0.0;
};

struct UserTexture {
  std::vector<NoiseOctave> octaves;
  double amplitude_sum = 0.0;

  double sample(double x, double y) const {
    double v = 0.0;
    for (const NoiseOctave& o : octaves) {
      v += o.amplitude * value_noise(o.key, x + o.phase_x, y + o.phase_y, o.cell);
    }
    return v / amplitude_sum;  // in [0, 1]
  }
};

// The octave count and base cell size vary per user, so node counts of the
// extracted graphs spread over a wide range instead of clustering.
inline UserTexture make_user_texture(std::uint64_t corpus_seed, int user_index) {
  Rng rng(mix_seed(corpus_seed, 0x75736572 + std::uint64_t(user_index)));
  UserTexture tex;
  const int octaves = 2 + int(rng.below(2));          // 2 or 3
  const double base_cell = rng.range(16.0, 40.0);     // px per lattice cell
  double amplitude = 1.0;
  double cell = base_cell;
  for (int k = 0; k < octaves; ++k) {
    NoiseOctave o;
    o.key = rng.next_u64();
    o.cell = cell;
    o.amplitude = amplitude;
    o.phase_x = rng.range(0.0, 1024.0);
    o.phase_y = rng.range(0.0, 1024.0);
    tex.octaves.push_back(o);
    tex.amplitude_sum += amplitude;
    amplitude *= 0.55;
    cell *= 0.5;
  }
  return tex;
}

}  // namespace detail

// One rendered image of one user: affine-jittered base texture plus additive
// per-image noise, both scaled by the perturbation strength.
inline Image render_synthetic_image(const SyntheticSpec& spec, int user_index,
                                    int image_index) {
  const detail::UserTexture tex = detail::make_user_texture(spec.seed, user_index);
  Rng rng(mix_seed(spec.seed, (std::uint64_t(user_index) << 20) ^
                                  (0x696d67ull << 40) ^ std::uint64_t(image_index)));
  const double s = spec.perturbation;
  const double dx = rng.range(-8.0, 8.0) * s;
  const double dy = rng.range(-8.0, 8.0) * s;
  const double zoom = 1.0 + rng.range(-0.05, 0.05) * s;
  const std::uint64_t noise_key = rng.next_u64();
  const double cx = spec.width / 2.0, cy = spec.height / 2.0;

  Image img(spec.width, spec.height);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const double x = (c - cx) * zoom + cx + dx;
      const double y = (r - cy) * zoom + cy + dy;
      double v = tex.sample(x, y);
      v += s * (detail::value_noise(noise_key, c, r, 9.0) - 0.5);
      img.at(r, c) = clamp_u8(std::lround(v * 255.0));
    }
  }
  return img;
}

inline std::string synthetic_user_id(int user_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%03d", user_index);
  return buf;
}

// Writes <out_dir>/<user>/img_###.pgm plus <out_dir>/manifest.csv with paths
// relative to the manifest. Byte-identical for identical specs.
inline CorpusManifest generate_synthetic_corpus(const SyntheticSpec& spec,
                                                const std::string& out_dir,
                                                const std::vector<std::string>& provenance = {}) {
  if (spec.n_users < 2) throw ConfigError("synthetic corpus: need at least 2 users");
  if (spec.images_per_user < 5)
    throw ConfigError("synthetic corpus: need at least 5 images per user");
  if (spec.width < 8 || spec.height < 8)
    throw ConfigError("synthetic corpus: image size too small");

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  CorpusManifest manifest;
  manifest.seed = spec.seed;
  for (int u = 0; u < spec.n_users; ++u) {
    const std::string user = synthetic_user_id(u);
    fs::create_directories(fs::path(out_dir) / user);
    for (int i = 0; i < spec.images_per_user; ++i) {
      const Image img = render_synthetic_image(spec, u, i);
      char name[32];
      std::snprintf(name, sizeof name, "img_%03d.pgm", i);
      const std::string rel = user + "/" + name;
      save_pgm(img, (fs::path(out_dir) / rel).string(), provenance);
      ManifestEntry e;
      e.user_id = user;
      e.image_path = rel;
      e.distance_m = 4.0 + i % 5;  // mimic the 4..8 m capture distances
      manifest.entries.push_back(std::move(e));
    }
  }
  save_manifest(manifest, (fs::path(out_dir) / "manifest.csv").string());
  return manifest;
}

}  // namespace irisgraph
