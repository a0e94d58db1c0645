#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gossipfield {

using NodeId = std::uint32_t;
using UndirectedEdge = std::pair<NodeId, NodeId>;

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

/// Simple undirected graph on nodes 0..n-1. Edges are stored once with
/// u < v, sorted; adjacency lists are sorted ascending.
class UndirectedGraph {
 public:
  struct BuildStats {
    std::size_t self_loops_dropped = 0;
    std::size_t parallel_edges_collapsed = 0;
  };

  UndirectedGraph() = default;

  /// Builds a simple graph from an arbitrary edge multiset: self-loops are
  /// dropped and parallel edges collapsed (counted in build_stats()).
  static UndirectedGraph from_edges(std::size_t num_nodes, std::vector<UndirectedEdge> edges);

  std::size_t num_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::span<const UndirectedEdge> edges() const noexcept { return edges_; }
  std::span<const NodeId> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }
  bool has_edge(NodeId u, NodeId v) const;
  const BuildStats& build_stats() const noexcept { return stats_; }

  bool is_connected() const;
  bool is_tree() const { return is_connected() && num_edges() + 1 == num_nodes(); }

  /// Hop distances from `source`; kUnreachable for other components.
  std::vector<std::size_t> bfs_distances(NodeId source) const;

  /// "u v" per line, u < v, ascending.
  std::string to_edge_list() const;

 private:
  std::vector<UndirectedEdge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> adjacency_;
  BuildStats stats_;
};

}  // namespace gossipfield
