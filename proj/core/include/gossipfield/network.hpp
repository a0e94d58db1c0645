#pragma once

#include <Eigen/SparseCore>

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gossipfield/graph.hpp"

namespace gossipfield {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Directed interaction (a, v): agent a meets v at Poisson rate `rate` and
/// moves a fraction `trust` of the way towards v's belief.
struct DirectedEdge {
  NodeId from = 0;
  NodeId to = 0;
  double rate = 0.0;
  double trust = 1.0;
};

inline constexpr std::size_t kNotIndexed = static_cast<std::size_t>(-1);

/// Validated, immutable social network. Copies share the same storage and
/// are safe to read from several threads.
class SocialNetwork {
 public:
  std::size_t size() const noexcept;
  const std::string& name(NodeId v) const;
  std::optional<NodeId> find(std::string_view name) const;
  NodeId id(std::string_view name) const;

  bool is_stubborn(NodeId v) const;
  std::span<const NodeId> regular_agents() const noexcept;
  std::span<const NodeId> stubborn_agents() const noexcept;
  /// Position of v in regular_agents() / stubborn_agents(), or kNotIndexed.
  std::size_t regular_index(NodeId v) const;
  std::size_t stubborn_index(NodeId v) const;

  /// Fixed belief of a stubborn agent.
  double belief(NodeId s) const;
  /// Beliefs aligned with stubborn_agents().
  std::span<const double> stubborn_beliefs() const noexcept;
  double min_belief() const noexcept;
  double max_belief() const noexcept;
  double max_abs_belief() const noexcept;

  /// All edges sorted by (from, to); out_edges(v) is the contiguous slice for v.
  std::span<const DirectedEdge> edges() const noexcept;
  std::span<const DirectedEdge> out_edges(NodeId v) const;
  double out_rate(NodeId v) const;
  double total_rate() const noexcept;
  bool unit_trust() const noexcept;
  double min_trust() const noexcept;

  /// Stubborn agents reachable from each node by a directed path (sorted);
  /// for a stubborn node this is just the node itself.
  std::span<const NodeId> influence_set(NodeId v) const;

  /// Q with Q_vw = trust * rate off the diagonal and zero row sums.
  const SparseMatrix& generator() const noexcept;
  /// P_av = Q_av / -Q_aa on regular rows; stubborn rows are empty.
  const SparseMatrix& jump() const noexcept;

  /// Same topology, rates and trust with new stubborn beliefs (aligned with
  /// stubborn_agents()).
  SocialNetwork with_stubborn_beliefs(std::vector<double> beliefs) const;

 private:
  friend class NetworkBuilder;
  struct Data;
  explicit SocialNetwork(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

/// Incremental construction; build() performs every structural check and the
/// influence check (each regular agent must reach a stubborn agent).
class NetworkBuilder {
 public:
  NodeId add_node(std::string name);
  /// Existing id for `name`, or a fresh node.
  NodeId node(std::string_view name);
  NetworkBuilder& set_stubborn(NodeId v, double belief);
  NetworkBuilder& add_edge(NodeId from, NodeId to, double rate, double trust = 1.0);

  std::size_t size() const noexcept { return names_.size(); }

  SocialNetwork build() const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, NodeId, std::less<>> index_;
  std::vector<std::optional<double>> beliefs_;
  std::vector<DirectedEdge> edges_;
};

/// Canonical network of an undirected graph: regular-regular edges in both
/// directions, regular-stubborn edges pointing at the stubborn agent,
/// r_av = 1/d_a and constant trust. Node names default to "0".."n-1".
SocialNetwork build_canonical(const UndirectedGraph& graph, std::span<const NodeId> stubborn,
                              std::span<const double> beliefs, double trust,
                              std::vector<std::string> names = {});

/// The influence sets S_a of all regular agents, keyed by agent.
std::map<NodeId, std::vector<NodeId>> validate_influence(const SocialNetwork& net);

using GeneratorQ = SparseMatrix;
using JumpP = SparseMatrix;

const GeneratorQ& generator_q(const SocialNetwork& net);
const JumpP& jump_p(const SocialNetwork& net);

/// Row-stochastic extension of P to V x V obtained by reversing the stubborn
/// in-edges with detailed-balance weights, plus its invariant distribution.
struct ReversibleExtension {
  SparseMatrix jump;             ///< extended P on V x V
  std::vector<double> weights;   ///< unnormalized detailed-balance weights
  std::vector<double> pi;        ///< invariant distribution
  double pi_stubborn = 0.0;      ///< pi(S)
  double pi_min = 0.0;           ///< min_v pi_v
  double max_balance_violation = 0.0;
  std::string label = "stubborn-reversal";
};

/// Throws kNetworkReducible / kNetworkIrreversible when the regular block of P
/// is not irreducible or fails detailed balance beyond `tolerance`.
ReversibleExtension reversible_extension(const SocialNetwork& net, double tolerance = 1e-10);

/// Undirected support of a network (an edge wherever P_vw > 0 or P_wv > 0).
UndirectedGraph underlying_graph(const SocialNetwork& net);

}  // namespace gossipfield
