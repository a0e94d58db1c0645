#include "gossipfield/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "gossipfield/error.hpp"

namespace gossipfield {

UndirectedGraph UndirectedGraph::from_edges(std::size_t num_nodes, std::vector<UndirectedEdge> edges) {
  UndirectedGraph g;
  for (auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge {" + std::to_string(u) + "," + std::to_string(v) + "} references a node >= " +
                      std::to_string(num_nodes));
    }
    if (u > v) std::swap(u, v);
  }
  const auto loops = std::remove_if(edges.begin(), edges.end(), [](const UndirectedEdge& e) { return e.first == e.second; });
  g.stats_.self_loops_dropped = static_cast<std::size_t>(edges.end() - loops);
  edges.erase(loops, edges.end());
  std::sort(edges.begin(), edges.end());
  const auto dup = std::unique(edges.begin(), edges.end());
  g.stats_.parallel_edges_collapsed = static_cast<std::size_t>(edges.end() - dup);
  edges.erase(dup, edges.end());
  g.edges_ = std::move(edges);

  std::vector<std::size_t> degree(num_nodes, 0);
  for (const auto& [u, v] : g.edges_) {
    ++degree[u];
    ++degree[v];
  }
  g.offsets_.assign(num_nodes + 1, 0);
  for (std::size_t v = 0; v < num_nodes; ++v) g.offsets_[v + 1] = g.offsets_[v] + degree[v];
  g.adjacency_.assign(g.offsets_.back(), 0);
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [u, v] : g.edges_) {
    g.adjacency_[fill[u]++] = v;
    g.adjacency_[fill[v]++] = u;
  }
  for (std::size_t v = 0; v < num_nodes; ++v) {
    std::sort(g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]),
              g.adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]));
  }
  return g;
}

std::span<const NodeId> UndirectedGraph::neighbors(NodeId v) const {
  if (v >= num_nodes()) throw Error(ErrorCode::kInvalidArgument, "node out of range");
  return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
}

bool UndirectedGraph::has_edge(NodeId u, NodeId v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::size_t> UndirectedGraph::bfs_distances(NodeId source) const {
  std::vector<std::size_t> dist(num_nodes(), kUnreachable);
  if (source >= num_nodes()) throw Error(ErrorCode::kInvalidArgument, "node out of range");
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    for (NodeId w : neighbors(v)) {
      if (dist[w] == kUnreachable) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

bool UndirectedGraph::is_connected() const {
  if (num_nodes() <= 1) return true;
  const auto dist = bfs_distances(0);
  return std::none_of(dist.begin(), dist.end(), [](std::size_t d) { return d == kUnreachable; });
}

std::string UndirectedGraph::to_edge_list() const {
  std::ostringstream out;
  for (const auto& [u, v] : edges_) out << u << ' ' << v << '\n';
  return out.str();
}

}  // namespace gossipfield
