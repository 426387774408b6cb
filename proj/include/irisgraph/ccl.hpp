#pragma once

// Two-pass 8-connectivity labeling with union-find and path compression.
// Shared by graph extraction (component nodes) and reflection removal
// (saturated regions).

#include <cstdint>
#include <vector>

namespace irisgraph {

struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;  // 0 = background, 1..count = components
  std::int32_t count = 0;

  std::int32_t at(int row, int col) const {
    return labels[std::size_t(row) * width + col];
  }
};

namespace detail {

class UnionFind {
 public:
  std::int32_t make() {
    parent_.push_back(std::int32_t(parent_.size()));
    return std::int32_t(parent_.size() - 1);
  }
  std::int32_t find(std::int32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);  // keep the smaller provisional label as root
    parent_[b] = a;
  }
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::int32_t> parent_;
};

}  // namespace detail

// Labels maximal 8-connected regions of nonzero bytes in `fg` (w*h,
// row-major). Final labels are compacted to 1..count in scan order of each
// component's first pixel.
inline LabelMap label_components_8(const std::uint8_t* fg, int width, int height) {
  LabelMap out;
  out.width = width;
  out.height = height;
  out.labels.assign(std::size_t(width) * std::size_t(height), 0);

  detail::UnionFind uf;
  uf.make();  // slot 0 reserved for background

  auto idx = [width](int r, int c) { return std::size_t(r) * width + c; };

  // pass 1: provisional labels from the W, NW, N, NE neighbours
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (!fg[idx(r, c)]) continue;
      std::int32_t neighbours[4];
      int n = 0;
      if (c > 0 && out.labels[idx(r, c - 1)]) neighbours[n++] = out.labels[idx(r, c - 1)];
      if (r > 0) {
        if (c > 0 && out.labels[idx(r - 1, c - 1)]) neighbours[n++] = out.labels[idx(r - 1, c - 1)];
        if (out.labels[idx(r - 1, c)]) neighbours[n++] = out.labels[idx(r - 1, c)];
        if (c + 1 < width && out.labels[idx(r - 1, c + 1)]) neighbours[n++] = out.labels[idx(r - 1, c + 1)];
      }
      if (n == 0) {
        out.labels[idx(r, c)] = uf.make();
      } else {
        std::int32_t m = neighbours[0];
        for (int i = 1; i < n; ++i) m = std::min(m, neighbours[i]);
        out.labels[idx(r, c)] = m;
        for (int i = 0; i < n; ++i) uf.unite(m, neighbours[i]);
      }
    }
  }

  // pass 2: resolve roots and compact in first-pixel scan order
  std::vector<std::int32_t> compact(uf.size(), 0);
  std::int32_t next = 0;
  for (auto& label : out.labels) {
    if (!label) continue;
    const std::int32_t root = uf.find(label);
    if (!compact[root]) compact[root] = ++next;
    label = compact[root];
  }
  out.count = next;
  return out;
}

}  // namespace irisgraph
