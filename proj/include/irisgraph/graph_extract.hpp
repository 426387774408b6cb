#pragma once

// Image-to-graph conversion. Intensities are discretized into bins of width
// delta; each bin (except bin 0) is binarized; 8-connected components become
// nodes carrying 7 geometric features; two nodes are linked when their
// bounding boxes intersect, weighted by the distance between box centers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "irisgraph/ccl.hpp"
#include "irisgraph/error.hpp"
#include "irisgraph/image.hpp"

namespace irisgraph {

inline constexpr int kFeatureCount = 7;
// components_in_bin is normalized by this fixed cap (clamped above it);
// raw counts would dwarf every other feature.
inline constexpr int kComponentsInBinCap = 64;

// ---------------------------------------------------------------------------
// discretization

struct DiscretizedImage {
  int width = 0;
  int height = 0;
  int delta = 20;
  int bins = 0;                        // B = ceil(255/delta)
  std::vector<std::uint8_t> bin_index; // row-major, values in [0, B-1]

  std::uint8_t at(int row, int col) const {
    return bin_index[std::size_t(row) * width + col];
  }
  // representative intensity of a bin
  int bin_value(int bin) const { return bin * delta; }
};

inline DiscretizedImage discretize(const Image& img, int delta = 20) {
  require_valid(img, "discretize");
  if (delta < 1 || delta > 255)
    throw ConfigError("discretize: delta must be in [1,255]");
  DiscretizedImage out;
  out.width = img.width;
  out.height = img.height;
  out.delta = delta;
  out.bins = (255 + delta - 1) / delta;
  out.bin_index.resize(img.size());
  const int cap = out.bins - 1;
  for (std::size_t p = 0; p < img.size(); ++p) {
    out.bin_index[p] = std::uint8_t(std::min(img.pixels[p] / delta, cap));
  }
  return out;
}

// ---------------------------------------------------------------------------
// binarization

struct BinaryImage {
  int width = 0;
  int height = 0;
  int bin = 0;  // which bin this plane marks
  std::vector<std::uint8_t> bits;
};

// One binary image per bin 1..B-1. Bin 0 (intensity below delta) is excluded.
inline std::vector<BinaryImage> binarize(const DiscretizedImage& disc) {
  std::vector<BinaryImage> planes;
  planes.reserve(std::size_t(disc.bins - 1));
  for (int b = 1; b < disc.bins; ++b) {
    BinaryImage plane;
    plane.width = disc.width;
    plane.height = disc.height;
    plane.bin = b;
    plane.bits.resize(disc.bin_index.size());
    for (std::size_t p = 0; p < disc.bin_index.size(); ++p) {
      plane.bits[p] = disc.bin_index[p] == b;
    }
    planes.push_back(std::move(plane));
  }
  return planes;
}

// ---------------------------------------------------------------------------
// connected components

struct BBox {
  int min_row = 0;
  int min_col = 0;
  int max_row = 0;
  int max_col = 0;

  int height() const { return max_row - min_row + 1; }
  int width() const { return max_col - min_col + 1; }
  std::int64_t area() const { return std::int64_t(height()) * width(); }

  // pixel-center coordinates of the box center
  double center_row() const { return (min_row + max_row) / 2.0 + 0.5; }
  double center_col() const { return (min_col + max_col) / 2.0 + 0.5; }

  bool intersects(const BBox& o) const {
    return min_row <= o.max_row && o.min_row <= max_row &&
           min_col <= o.max_col && o.min_col <= max_col;
  }

  bool operator==(const BBox& o) const = default;
};

struct Component {
  BBox bbox;
  std::int64_t pixel_count = 0;
};

// Maximal 8-connected regions of set bits, ordered by
// (min_row, min_col, pixel_count).
inline std::vector<Component> connected_components(const BinaryImage& plane) {
  const LabelMap lm = label_components_8(plane.bits.data(), plane.width, plane.height);
  std::vector<Component> comps(std::size_t(lm.count));
  std::vector<bool> seen(std::size_t(lm.count) + 1, false);
  for (int r = 0; r < plane.height; ++r) {
    for (int c = 0; c < plane.width; ++c) {
      const std::int32_t label = lm.at(r, c);
      if (!label) continue;
      Component& comp = comps[std::size_t(label) - 1];
      if (!seen[label]) {
        seen[label] = true;
        comp.bbox = BBox{r, c, r, c};
      } else {
        comp.bbox.min_row = std::min(comp.bbox.min_row, r);
        comp.bbox.min_col = std::min(comp.bbox.min_col, c);
        comp.bbox.max_row = std::max(comp.bbox.max_row, r);
        comp.bbox.max_col = std::max(comp.bbox.max_col, c);
      }
      ++comp.pixel_count;
    }
  }
  std::sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
    if (a.bbox.min_row != b.bbox.min_row) return a.bbox.min_row < b.bbox.min_row;
    if (a.bbox.min_col != b.bbox.min_col) return a.bbox.min_col < b.bbox.min_col;
    return a.pixel_count < b.pixel_count;
  });
  return comps;
}

// ---------------------------------------------------------------------------
// node features

struct ComponentNode {
  int bin = 0;
  BBox bbox;
  std::int64_t pixel_count = 0;
  std::array<double, kFeatureCount> features{};
};

// Feature order: [size/image, size/bbox, center_x, center_y, height, width,
// components_in_bin], everything normalized to (0, 1].
inline std::array<double, kFeatureCount> component_features(
    const Component& comp, int components_in_bin, int image_width, int image_height) {
  const double image_area = double(image_width) * double(image_height);
  std::array<double, kFeatureCount> f{};
  f[0] = double(comp.pixel_count) / image_area;
  f[1] = double(comp.pixel_count) / double(comp.bbox.area());
  f[2] = comp.bbox.center_col() / image_width;
  f[3] = comp.bbox.center_row() / image_height;
  f[4] = double(comp.bbox.height()) / image_height;
  f[5] = double(comp.bbox.width()) / image_width;
  f[6] = double(std::min(components_in_bin, kComponentsInBinCap)) / kComponentsInBinCap;
  return f;
}

// ---------------------------------------------------------------------------
// edges

struct Edge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;   // i < j
  double weight = 0.0;   // Euclidean distance between bbox centers

  bool operator==(const Edge& o) const = default;
};

inline double center_distance(const BBox& a, const BBox& b) {
  const double dr = a.center_row() - b.center_row();
  const double dc = a.center_col() - b.center_col();
  return std::sqrt(dr * dr + dc * dc);
}

// Edge (i,j) exists iff the bboxes intersect (shared edge or corner counts).
// Row-interval sweep keeps this near-linear on typical graphs; the result is
// sorted by (i, j).
inline std::vector<Edge> build_edges(const std::vector<ComponentNode>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<std::uint32_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = std::uint32_t(k);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (nodes[a].bbox.min_row != nodes[b].bbox.min_row)
      return nodes[a].bbox.min_row < nodes[b].bbox.min_row;
    return a < b;
  });

  std::vector<Edge> edges;
  for (std::size_t x = 0; x < n; ++x) {
    const std::uint32_t i = order[x];
    const BBox& bi = nodes[i].bbox;
    for (std::size_t y = x + 1; y < n; ++y) {
      const std::uint32_t j = order[y];
      const BBox& bj = nodes[j].bbox;
      if (bj.min_row > bi.max_row) break;  // sorted by min_row: nothing later overlaps
      if (bi.intersects(bj)) {
        const std::uint32_t a = std::min(i, j), b = std::max(i, j);
        edges.push_back(Edge{a, b, center_distance(bi, bj)});
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return edges;
}

// ---------------------------------------------------------------------------
// whole-image extraction

struct SourceId {
  std::string user;
  std::uint32_t session = 0;
  std::uint32_t index = 0;

  bool operator==(const SourceId& o) const = default;
};

struct IrisGraph {
  std::vector<ComponentNode> nodes;
  std::vector<Edge> edges;
  SourceId source;
  int image_width = 0;
  int image_height = 0;
  int delta = 20;

  // an image whose pixels all fall in excluded bin 0 yields no nodes
  bool usable() const { return !nodes.empty(); }
  std::size_t node_count() const { return nodes.size(); }
};

// discretize -> binarize -> per-bin components -> features -> edges.
// Node order is (bin, min_row, min_col): deterministic for serialization
// and padding.
inline IrisGraph extract_graph(const Image& img, int delta = 20,
                               SourceId source = {}) {
  IrisGraph graph;
  graph.source = std::move(source);
  graph.image_width = img.width;
  graph.image_height = img.height;
  graph.delta = delta;

  const DiscretizedImage disc = discretize(img, delta);
  for (const BinaryImage& plane : binarize(disc)) {
    const std::vector<Component> comps = connected_components(plane);
    const int in_bin = int(comps.size());
    for (const Component& comp : comps) {
      ComponentNode node;
      node.bin = plane.bin;
      node.bbox = comp.bbox;
      node.pixel_count = comp.pixel_count;
      node.features = component_features(comp, in_bin, img.width, img.height);
      graph.nodes.push_back(node);
    }
  }
  graph.edges = build_edges(graph.nodes);
  return graph;
}

}  // namespace irisgraph
