#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace osnlab {

using NodeId = std::uint64_t;

/// Undirected edge in canonical on-disk form (u < v).
struct EdgeRecord {
  NodeId u = 0;
  NodeId v = 0;

  friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
  friend std::strong_ordering operator<=>(const EdgeRecord&,
                                          const EdgeRecord&) = default;
};

/// Returns (min(u,v), max(u,v)); throws SelfLoopError when u == v.
EdgeRecord canonicalize_edge(NodeId u, NodeId v);

/// Undirected simple graph over sparse 64-bit node ids.
///
/// Immutable after construction: build through Builder (or the file
/// loaders) and read from any number of threads. Adjacency lists are kept
/// sorted ascending, which gives O(log d) edge membership and cheap sorted
/// intersections downstream.
class SocialGraph {
 public:
  class Builder {
   public:
    Builder& add_node(NodeId v);
    Builder& add_edge(NodeId u, NodeId v);  // throws SelfLoopError when u == v
    Builder& add_edge(const EdgeRecord& e) { return add_edge(e.u, e.v); }
    Builder& reserve_edges(std::size_t n);

    /// Collapses duplicate edges; the count is available afterwards.
    SocialGraph build();
    std::size_t duplicates_collapsed() const { return duplicates_; }

   private:
    std::vector<NodeId> extra_nodes_;
    std::vector<EdgeRecord> staged_;
    std::size_t duplicates_ = 0;
  };

  SocialGraph() = default;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  const std::vector<NodeId>& nodes() const { return nodes_; }  // ascending

  bool has_node(NodeId v) const { return index_.count(v) != 0; }
  bool has_edge(NodeId u, NodeId v) const;
  std::size_t degree(NodeId v) const;              // throws NotFoundError
  std::span<const NodeId> neighbors(NodeId v) const;  // ascending ids

  /// Position of v in nodes(); node/neighbor access by index avoids the
  /// hash lookup in tight loops.
  std::size_t index_of(NodeId v) const;  // throws NotFoundError
  NodeId node_at(std::size_t idx) const { return nodes_[idx]; }
  std::size_t degree_at(std::size_t idx) const {
    return offsets_[idx + 1] - offsets_[idx];
  }
  std::span<const NodeId> neighbors_at(std::size_t idx) const {
    return {adjacency_.data() + offsets_[idx], degree_at(idx)};
  }

  /// All edges in canonical ascending (u, v) order.
  std::vector<EdgeRecord> edges() const;

  /// Re-checks every structural invariant; throws IntegrityError listing
  /// the first offending records.
  void validate() const;

  /// Assembles a graph from raw CSR parts without any checking. The parts
  /// must already satisfy the invariants; validate() will say if not.
  static SocialGraph unchecked_from_parts(std::vector<NodeId> nodes,
                                          std::vector<std::size_t> offsets,
                                          std::vector<NodeId> adjacency);

  friend bool operator==(const SocialGraph& a, const SocialGraph& b) {
    return a.nodes_ == b.nodes_ && a.offsets_ == b.offsets_ &&
           a.adjacency_ == b.adjacency_;
  }

 private:
  std::vector<NodeId> nodes_;          // ascending
  std::vector<std::size_t> offsets_;   // CSR offsets, size node_count()+1
  std::vector<NodeId> adjacency_;      // neighbor ids, ascending per node
  std::unordered_map<NodeId, std::uint32_t> index_;
  std::size_t edge_count_ = 0;
};

struct EdgeListStats {
  std::size_t lines = 0;
  std::size_t duplicates = 0;
};

/// TAB-separated edge list, one "u<TAB>v" per line. Reading tolerates
/// non-canonical order and duplicates (counted in stats); writing emits
/// canonical sorted order, one line per edge.
SocialGraph read_edge_list(const std::filesystem::path& path,
                           EdgeListStats* stats = nullptr);
void write_edge_list(const SocialGraph& g, const std::filesystem::path& path);

}  // namespace osnlab
