#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

#include "gossipfield/generators.hpp"
#include "gossipfield/network.hpp"

namespace gossipfield {

inline constexpr NodeId kLastNode = static_cast<NodeId>(-1);

struct TreeOracle {
  Eigen::VectorXd mean;
  std::optional<Eigen::VectorXd> variance;  ///< only when every trust is 1
};

/// Closed form for a canonical network on a tree with S = {s0, s1}: linear
/// interpolation in graph distance along the s0-s1 path, constant on the
/// subtrees hanging off it. A direct s0-s1 edge, which the network cannot
/// represent, is assumed when the support is otherwise disconnected. Throws
/// kOracleInvalidInput when the underlying graph is not a tree, S differs
/// from {s0, s1}, or jump rows are not uniform over neighbours.
TreeOracle tree_oracle(const SocialNetwork& net, NodeId s0, NodeId s1);

/// Closed form for the barbell produced by the generator (cliques {0..n/2-1}
/// and {n/2..n-1}, bridge {n/2-1, n/2}) with s0 in the first clique and s1 in
/// the second, neither on the bridge. Entry v is E[X_v].
Eigen::VectorXd barbell_oracle(std::size_t n, double x0, double x1, NodeId s0 = 0, NodeId s1 = kLastNode);

struct CayleyOracle {
  std::vector<double> gamma_s1;  ///< P(walk from a is absorbed at s1), indexed by lattice_index
  double max_imaginary = 0.0;    ///< largest imaginary residue of the Fourier sums
  double hitting_time_gap = 0.0; ///< |E_{s0 s1} - E_{s1 s0}| / E_{s0 s1} from the Green function
};

/// Fourier evaluation of the absorption probabilities of the simple random
/// walk on the Abelian Cayley graph of Z_m^d with generating set `theta`,
/// S = {s0, s1} given as lattice node ids.
CayleyOracle cayley_oracle(std::size_t m, std::size_t d, std::span<const LatticePoint> theta, NodeId s0, NodeId s1);

}  // namespace gossipfield
