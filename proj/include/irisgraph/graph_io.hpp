#pragma once

// Graph archive format (little-endian, see README "File formats"):
//   archive := "IGARCHV1" | u16 version | str provenance | u64 count | record*
//   record  := "GRAPHREC" | u16 version | str user | u32 session | u32 index
//              | u32 width | u32 height | u32 delta
//              | u32 node_count | u64 edge_count | node* | edge*
//   node    := u16 bin | u32 min_row | u32 min_col | u32 max_row | u32 max_col
//              | u64 pixel_count | f64 features[7]
//   edge    := u32 i | u32 j | f64 weight

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "irisgraph/graph_extract.hpp"
#include "irisgraph/serialize.hpp"

namespace irisgraph {

inline constexpr char kArchiveMagic[9] = "IGARCHV1";
inline constexpr char kRecordMagic[9] = "GRAPHREC";
inline constexpr std::uint16_t kArchiveVersion = 1;

inline void write_graph_record(ByteWriter& w, const IrisGraph& g) {
  w.magic(kRecordMagic);
  w.u16(kArchiveVersion);
  w.str(g.source.user);
  w.u32(g.source.session);
  w.u32(g.source.index);
  w.u32(std::uint32_t(g.image_width));
  w.u32(std::uint32_t(g.image_height));
  w.u32(std::uint32_t(g.delta));
  w.u32(std::uint32_t(g.nodes.size()));
  w.u64(g.edges.size());
  for (const ComponentNode& n : g.nodes) {
    w.u16(std::uint16_t(n.bin));
    w.u32(std::uint32_t(n.bbox.min_row));
    w.u32(std::uint32_t(n.bbox.min_col));
    w.u32(std::uint32_t(n.bbox.max_row));
    w.u32(std::uint32_t(n.bbox.max_col));
    w.u64(std::uint64_t(n.pixel_count));
    for (double f : n.features) w.f64(f);
  }
  for (const Edge& e : g.edges) {
    w.u32(e.i);
    w.u32(e.j);
    w.f64(e.weight);
  }
}

inline IrisGraph read_graph_record(ByteReader& r) {
  r.expect_magic(kRecordMagic);
  const std::uint16_t version = r.u16();
  if (version != kArchiveVersion)
    throw FormatError(r.name() + ": unsupported graph record version " +
                      std::to_string(version));
  IrisGraph g;
  g.source.user = r.str();
  g.source.session = r.u32();
  g.source.index = r.u32();
  g.image_width = int(r.u32());
  g.image_height = int(r.u32());
  g.delta = int(r.u32());
  const std::uint32_t node_count = r.u32();
  const std::uint64_t edge_count = r.u64();
  g.nodes.resize(node_count);
  for (ComponentNode& n : g.nodes) {
    n.bin = r.u16();
    n.bbox.min_row = int(r.u32());
    n.bbox.min_col = int(r.u32());
    n.bbox.max_row = int(r.u32());
    n.bbox.max_col = int(r.u32());
    n.pixel_count = std::int64_t(r.u64());
    for (double& f : n.features) f = r.f64();
  }
  g.edges.resize(edge_count);
  for (Edge& e : g.edges) {
    e.i = r.u32();
    e.j = r.u32();
    e.weight = r.f64();
    if (e.i >= node_count || e.j >= node_count)
      throw FormatError(r.name() + ": edge endpoint out of range");
  }
  return g;
}

inline std::string serialize_graph(const IrisGraph& g) {
  ByteWriter w;
  write_graph_record(w, g);
  return w.data();
}

inline void save_graph_archive(const std::vector<IrisGraph>& graphs,
                               const std::string& path,
                               const std::string& provenance = {}) {
  ByteWriter w;
  w.magic(kArchiveMagic);
  w.u16(kArchiveVersion);
  w.str(provenance);
  w.u64(graphs.size());
  for (const IrisGraph& g : graphs) write_graph_record(w, g);
  w.write_file(path);
}

inline std::vector<IrisGraph> load_graph_archive(const std::string& path,
                                                 std::string* provenance = nullptr) {
  ByteReader r = ByteReader::from_file(path);
  r.expect_magic(kArchiveMagic);
  const std::uint16_t version = r.u16();
  if (version != kArchiveVersion)
    throw FormatError(path + ": unsupported archive version " + std::to_string(version));
  const std::string prov = r.str();
  if (provenance) *provenance = prov;
  const std::uint64_t count = r.u64();
  std::vector<IrisGraph> graphs;
  graphs.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) graphs.push_back(read_graph_record(r));
  return graphs;
}

// Debug export: one text section per graph with a feature table and edge list.
inline std::string graph_to_text(const IrisGraph& g) {
  std::ostringstream os;
  os << "graph user=" << g.source.user << " session=" << g.source.session
     << " index=" << g.source.index << " dims=" << g.image_width << "x"
     << g.image_height << " delta=" << g.delta << " nodes=" << g.nodes.size()
     << " edges=" << g.edges.size() << "\n";
  os << "  node bin bbox(pix) count  features\n";
  char line[256];
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    const ComponentNode& n = g.nodes[k];
    std::snprintf(line, sizeof line, "  %4zu %3d [%d,%d..%d,%d] %5lld ", k, n.bin,
                  n.bbox.min_row, n.bbox.min_col, n.bbox.max_row, n.bbox.max_col,
                  static_cast<long long>(n.pixel_count));
    os << line;
    for (double f : n.features) {
      std::snprintf(line, sizeof line, " %.6f", f);
      os << line;
    }
    os << "\n";
  }
  for (const Edge& e : g.edges) {
    std::snprintf(line, sizeof line, "  edge %u %u %.6f\n", e.i, e.j, e.weight);
    os << line;
  }
  return os.str();
}

}  // namespace irisgraph
