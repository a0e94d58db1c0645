#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gossipfield/network.hpp"

namespace gossipfield {

using NodePair = std::pair<NodeId, NodeId>;

/// One off-diagonal entry K[(v, v'), (w, w')].
struct PairTransition {
  NodePair to;
  double rate = 0.0;
};

/// Generator of the coupled pair walk on V x V. Rows are produced on demand;
/// materialize() builds the sparse matrix over a chosen set of pairs.
///
/// From (v, v') with v != v' each coordinate moves on its own: (w, v') at rate
/// Q_vw and (v, w') at rate Q_v'w'. From (v, v) the pair jumps jointly to
/// (w, w) at rate theta_vw Q_vw, or only one coordinate moves, to (w, v) or
/// (v, w), at rate (1 - theta_vw) Q_vw each.
class CoupledK {
 public:
  explicit CoupledK(SocialNetwork net);

  const SocialNetwork& network() const noexcept { return net_; }

  /// Appends the off-diagonal entries of row (v, v') to `out` and returns the
  /// diagonal entry K[(v, v'), (v, v')].
  double row(NodePair pair, std::vector<PairTransition>& out) const;

  /// Row-major index v * n + v'.
  std::size_t index(NodePair pair) const noexcept { return static_cast<std::size_t>(pair.first) * net_.size() + pair.second; }

  /// Full n^2 x n^2 matrix; refuses above `max_pairs` rows.
  SparseMatrix materialize(std::size_t max_pairs = 1'000'000) const;

 private:
  SocialNetwork net_;
  std::vector<double> exit_rate_;  // -Q_vv
};

inline CoupledK coupled_k(const SocialNetwork& net) { return CoupledK(net); }

}  // namespace gossipfield
