#pragma once

// Corpus manifests, per-user stratified splits, node-cap filtering, padding
// to fixed-size matrices and same/different pair generation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "irisgraph/error.hpp"
#include "irisgraph/graph_extract.hpp"
#include "irisgraph/matrix.hpp"
#include "irisgraph/rng.hpp"
#include "irisgraph/serialize.hpp"

namespace irisgraph {

// ---------------------------------------------------------------------------
// manifest

struct ManifestEntry {
  std::string user_id;
  std::string image_path;
  std::string mask_path;  // empty = no mask
  double distance_m = 0.0;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
};

inline constexpr const char* kManifestHeader = "user_id,image_path,mask_path,distance_m";

inline CorpusManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty manifest");
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader)
    throw FormatError(path + ": expected header '" + kManifestHeader + "'");
  CorpusManifest m;
  std::map<std::string, int> seen_paths;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string, 4> field;
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = line.find(',', start);
      if (f < 3) {
        if (comma == std::string::npos)
          throw FormatError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        field[f] = line.substr(start, comma - start);
        start = comma + 1;
      } else {
        field[f] = line.substr(start);
      }
    }
    ManifestEntry e;
    e.user_id = field[0];
    e.image_path = field[1];
    e.mask_path = field[2];
    e.distance_m = field[3].empty() ? 0.0 : std::stod(field[3]);
    if (e.user_id.empty())
      throw FormatError(path + ":" + std::to_string(lineno) + ": empty user_id");
    if (e.image_path.empty())
      throw FormatError(path + ":" + std::to_string(lineno) + ": empty image_path");
    if (++seen_paths[e.image_path] > 1)
      throw FormatError(path + ":" + std::to_string(lineno) + ": duplicate image_path " +
                        e.image_path);
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void save_manifest(const CorpusManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot create manifest: " + path);
  out << kManifestHeader << "\n";
  char dist[32];
  for (const ManifestEntry& e : m.entries) {
    std::snprintf(dist, sizeof dist, "%g", e.distance_m);
    out << e.user_id << ',' << e.image_path << ',' << e.mask_path << ',' << dist << "\n";
  }
  if (!out) throw FormatError("write failure: " + path);
}

// ---------------------------------------------------------------------------
// split

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

namespace detail {

// Per-user image counts -> (train, val, test) sizes. Rounding: ceil for
// train, then ceil for val, remainder for test; the first two are clamped so
// that every split keeps at least one image (all users appear everywhere).
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& r) {
  if (n < 3) throw DataError("split: need at least 3 items per user");
  std::size_t train = std::size_t(std::ceil(n * r.train));
  train = std::min(train, n - 2);
  std::size_t val = std::size_t(std::ceil(n * r.val));
  val = std::min(val, n - train - 1);
  const std::size_t test = n - train - val;
  return {train, val, test};
}

// Assigns each item of one user to a split. The shuffle is keyed by
// (seed, user_id) only, so a user's assignment does not depend on which other
// users are in the corpus.
inline std::vector<Split> assign_user_split(const std::string& user_id,
                                            std::size_t n_items,
                                            const SplitRatios& ratios,
                                            std::uint64_t seed) {
  const auto sizes = split_sizes(n_items, ratios);
  std::vector<std::size_t> order(n_items);
  for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
  Rng rng(mix_seed(seed, hash_str(user_id)));
  rng.shuffle(order);
  std::vector<Split> out(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    const Split s = i < sizes[0]                ? Split::train
                    : i < sizes[0] + sizes[1]   ? Split::val
                                                : Split::test;
    out[order[i]] = s;
  }
  return out;
}

inline void check_ratios(const SplitRatios& r) {
  if (r.train <= 0 || r.val <= 0 || r.test <= 0 ||
      std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must be positive and sum to 1");
}

// Generic per-user split over any item list with a user_id accessor.
template <class Item, class UserOf>
std::array<std::vector<Item>, 3> split_items(const std::vector<Item>& items,
                                             UserOf user_of,
                                             const SplitRatios& ratios,
                                             std::uint64_t seed,
                                             std::size_t min_per_user) {
  check_ratios(ratios);
  std::map<std::string, std::vector<std::size_t>> by_user;  // sorted users
  for (std::size_t i = 0; i < items.size(); ++i) by_user[user_of(items[i])].push_back(i);

  std::string too_few;
  for (const auto& [user, idx] : by_user) {
    if (idx.size() < min_per_user) too_few += (too_few.empty() ? "" : ", ") + user;
  }
  if (!too_few.empty())
    throw DataError("users with fewer than " + std::to_string(min_per_user) +
                    " images: " + too_few);

  std::array<std::vector<Item>, 3> out;
  std::vector<Split> tag(items.size());
  for (const auto& [user, idx] : by_user) {
    const std::vector<Split> assign = assign_user_split(user, idx.size(), ratios, seed);
    for (std::size_t k = 0; k < idx.size(); ++k) tag[idx[k]] = assign[k];
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    out[std::size_t(tag[i])].push_back(items[i]);
  }
  return out;
}

}  // namespace detail

struct SplitManifests {
  CorpusManifest train;
  CorpusManifest val;
  CorpusManifest test;
};

// Per-user stratified 60/20/20 split (every user lands in every split).
inline SplitManifests split_corpus(const CorpusManifest& manifest,
                                   const SplitRatios& ratios, std::uint64_t seed) {
  auto parts = detail::split_items(
      manifest.entries, [](const ManifestEntry& e) { return e.user_id; }, ratios,
      seed, 5);
  SplitManifests out;
  out.train.entries = std::move(parts[0]);
  out.val.entries = std::move(parts[1]);
  out.test.entries = std::move(parts[2]);
  out.train.seed = out.val.seed = out.test.seed = seed;
  return out;
}

// Same split rule applied to already-extracted graphs (keyed by source user).
// Graphs extracted from a manifest in order land in the same splits as the
// manifest entries themselves.
inline std::array<std::vector<IrisGraph>, 3> split_graphs(
    const std::vector<IrisGraph>& graphs, const SplitRatios& ratios,
    std::uint64_t seed, std::size_t min_per_user = 5) {
  return detail::split_items(
      graphs, [](const IrisGraph& g) { return g.source.user; }, ratios, seed,
      min_per_user);
}

// ---------------------------------------------------------------------------
// node-cap filter

struct FilterResult {
  std::vector<IrisGraph> kept;
  std::size_t removed = 0;

  double retention() const {
    const std::size_t total = kept.size() + removed;
    return total == 0 ? 0.0 : double(kept.size()) / double(total);
  }
};

// Keeps graphs with at most `cap` nodes.
inline FilterResult filter_by_node_cap(const std::vector<IrisGraph>& graphs, int cap) {
  if (cap <= 0) throw ConfigError("node cap must be positive");
  FilterResult out;
  for (const IrisGraph& g : graphs) {
    if (int(g.node_count()) <= cap) {
      out.kept.push_back(g);
    } else {
      ++out.removed;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// padding

struct PaddedGraph {
  int n = 0;           // node cap
  int f = kFeatureCount;
  int real_nodes = 0;
  std::string label_user;
  Mat adjacency;       // n x n, symmetric, zero diagonal, zero outside real block
  Mat features;        // n x f, zero rows past real_nodes

  bool operator==(const PaddedGraph& o) const = default;
};

inline PaddedGraph pad_graph(const IrisGraph& graph, int cap) {
  if (cap <= 0) throw ConfigError("node cap must be positive");
  const int n_real = int(graph.node_count());
  if (n_real > cap)
    throw DataError("pad_graph: graph has " + std::to_string(n_real) +
                    " nodes, above cap " + std::to_string(cap) +
                    " (filter before padding)");
  PaddedGraph out;
  out.n = cap;
  out.real_nodes = n_real;
  out.label_user = graph.source.user;
  out.adjacency = Mat(cap, cap);
  out.features = Mat(cap, kFeatureCount);
  for (int i = 0; i < n_real; ++i) {
    for (int k = 0; k < kFeatureCount; ++k)
      out.features(i, k) = graph.nodes[std::size_t(i)].features[std::size_t(k)];
  }
  for (const Edge& e : graph.edges) {
    out.adjacency(int(e.i), int(e.j)) = e.weight;
    out.adjacency(int(e.j), int(e.i)) = e.weight;
  }
  return out;
}

// ---------------------------------------------------------------------------
// pairs

struct PairRef {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint8_t label = 0;  // 1 = same user
};

struct GraphPair {
  const PaddedGraph& a;
  const PaddedGraph& b;
  int label;
};

struct PairSet {
  std::vector<PaddedGraph> graphs;  // deduplicated graph table
  std::vector<PairRef> pairs;

  GraphPair pair(std::size_t i) const {
    const PairRef& p = pairs[i];
    return GraphPair{graphs[p.a], graphs[p.b], p.label};
  }
  std::size_t positives() const {
    std::size_t n = 0;
    for (const PairRef& p : pairs) n += p.label;
    return n;
  }
};

// Positive pairs: per user, all unordered graph pairs, deduplicated.
// Negatives: the anchor that introduces each positive also samples one
// other-user graph (without replacement per anchor), so |neg| == |pos|.
// Falls back to with-replacement only when the other-user pool is too small;
// `replacement_fallbacks` counts those draws when provided.
inline PairSet make_pairs(std::vector<PaddedGraph> graphs, std::uint64_t seed,
                          std::size_t* replacement_fallbacks = nullptr,
                          std::size_t* single_graph_users = nullptr) {
  std::map<std::string, std::vector<std::uint32_t>> by_user;
  for (std::uint32_t i = 0; i < graphs.size(); ++i)
    by_user[graphs[i].label_user].push_back(i);
  if (by_user.size() < 2) throw DataError("make_pairs: need at least 2 users");

  PairSet out;
  out.graphs = std::move(graphs);
  if (replacement_fallbacks) *replacement_fallbacks = 0;
  if (single_graph_users) *single_graph_users = 0;

  Rng rng(mix_seed(seed, 0x70616972));  // "pair" stream
  std::vector<std::uint32_t> pool;
  for (const auto& [user, mine] : by_user) {
    if (mine.size() < 2 && single_graph_users) ++*single_graph_users;

    pool.clear();
    for (const auto& [other, theirs] : by_user) {
      if (other != user) pool.insert(pool.end(), theirs.begin(), theirs.end());
    }

    for (std::size_t i = 0; i < mine.size(); ++i) {
      // positives introduced by this anchor
      const std::size_t quota = mine.size() - 1 - i;
      for (std::size_t j = i + 1; j < mine.size(); ++j)
        out.pairs.push_back(PairRef{mine[i], mine[j], 1});

      // negatives: `quota` draws without replacement from the pool
      std::size_t available = pool.size();
      for (std::size_t q = 0; q < quota; ++q) {
        std::uint32_t pick;
        if (available > 0) {
          const std::size_t at = rng.below(available);
          pick = pool[at];
          std::swap(pool[at], pool[available - 1]);
          --available;
        } else {
          pick = pool[rng.below(pool.size())];
          if (replacement_fallbacks) ++*replacement_fallbacks;
        }
        out.pairs.push_back(PairRef{mine[i], pick, 0});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// dataset file
//   file  := "IGPAIRSV1"[8] | u16 version | str provenance
//            | u64 graph_count | graph* | u64 pair_count | (u32,u32,u8)*
//   graph := u32 n | u32 f | u32 real_nodes | str user
//            | f64 features[real_nodes*f] | u64 edges | (u32 i,u32 j,f64 w)*

inline constexpr char kDatasetMagic[9] = "IGPAIRS1";
inline constexpr std::uint16_t kDatasetVersion = 1;

inline void save_dataset(const PairSet& set, const std::string& path,
                         const std::string& provenance = {}) {
  ByteWriter w;
  w.magic(kDatasetMagic);
  w.u16(kDatasetVersion);
  w.str(provenance);
  w.u64(set.graphs.size());
  for (const PaddedGraph& g : set.graphs) {
    w.u32(std::uint32_t(g.n));
    w.u32(std::uint32_t(g.f));
    w.u32(std::uint32_t(g.real_nodes));
    w.str(g.label_user);
    for (int i = 0; i < g.real_nodes; ++i)
      for (int k = 0; k < g.f; ++k) w.f64(g.features(i, k));
    std::uint64_t edges = 0;
    for (int i = 0; i < g.real_nodes; ++i)
      for (int j = i + 1; j < g.real_nodes; ++j)
        if (g.adjacency(i, j) != 0.0) ++edges;
    w.u64(edges);
    for (int i = 0; i < g.real_nodes; ++i) {
      for (int j = i + 1; j < g.real_nodes; ++j) {
        if (g.adjacency(i, j) != 0.0) {
          w.u32(std::uint32_t(i));
          w.u32(std::uint32_t(j));
          w.f64(g.adjacency(i, j));
        }
      }
    }
  }
  w.u64(set.pairs.size());
  for (const PairRef& p : set.pairs) {
    w.u32(p.a);
    w.u32(p.b);
    w.u8(p.label);
  }
  w.write_file(path);
}

inline PairSet load_dataset(const std::string& path, std::string* provenance = nullptr) {
  ByteReader r = ByteReader::from_file(path);
  r.expect_magic(kDatasetMagic);
  const std::uint16_t version = r.u16();
  if (version != kDatasetVersion)
    throw FormatError(path + ": unsupported dataset version " + std::to_string(version));
  const std::string prov = r.str();
  if (provenance) *provenance = prov;
  PairSet set;
  const std::uint64_t graph_count = r.u64();
  set.graphs.resize(graph_count);
  for (PaddedGraph& g : set.graphs) {
    g.n = int(r.u32());
    g.f = int(r.u32());
    g.real_nodes = int(r.u32());
    if (g.real_nodes > g.n || g.f <= 0 || g.n <= 0)
      throw FormatError(path + ": corrupt graph header");
    g.label_user = r.str();
    g.features = Mat(g.n, g.f);
    for (int i = 0; i < g.real_nodes; ++i)
      for (int k = 0; k < g.f; ++k) g.features(i, k) = r.f64();
    g.adjacency = Mat(g.n, g.n);
    const std::uint64_t edges = r.u64();
    for (std::uint64_t e = 0; e < edges; ++e) {
      const std::uint32_t i = r.u32();
      const std::uint32_t j = r.u32();
      const double w = r.f64();
      if (int(i) >= g.real_nodes || int(j) >= g.real_nodes)
        throw FormatError(path + ": edge endpoint out of range");
      g.adjacency(int(i), int(j)) = w;
      g.adjacency(int(j), int(i)) = w;
    }
  }
  const std::uint64_t pair_count = r.u64();
  set.pairs.resize(pair_count);
  for (PairRef& p : set.pairs) {
    p.a = r.u32();
    p.b = r.u32();
    p.label = r.u8();
    if (p.a >= graph_count || p.b >= graph_count)
      throw FormatError(path + ": pair index out of range");
  }
  return set;
}

}  // namespace irisgraph
