#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <unordered_map>
#include <vector>

#include "gossipfield/coupled.hpp"
#include "gossipfield/linear_solve.hpp"
#include "gossipfield/network.hpp"

namespace gossipfield {

/// gamma(v, i) = probability that the walk from v is absorbed at
/// stubborn_agents()[i]. Stubborn rows are indicators.
struct HittingDistribution {
  Eigen::MatrixXd gamma;
  SolveReport report;
};

/// Solves (I - P_AA) Gamma = P_AS.
HittingDistribution hitting_gamma(const SocialNetwork& net, const SolveOptions& options = {});

struct ExpectedBeliefs {
  Eigen::VectorXd mean;           ///< E[X_v] for every node
  double dual_path_gap = 0.0;     ///< max |gamma x - harmonic solve|
};

/// Computes E[X_v] as gamma x and, independently, from -Q_AA m = Q_AS x.
/// Throws kMomentsInconsistent when the two disagree by more than
/// 1e-10 * max(1, max |x_s|).
ExpectedBeliefs expected_beliefs(const SocialNetwork& net, const SolveOptions& options = {});

struct SecondMomentOptions {
  /// Pairs of interest in addition to every diagonal pair (a, a). When
  /// unset, the support is all of A x A (refused above max_unknowns pairs).
  std::optional<std::vector<NodePair>> pairs;
  /// Also solve the pairwise hitting tensor eta on the closed support.
  bool with_eta = false;
  std::size_t max_unknowns = 4'000'000;
  SolveOptions solve;
};

/// Exact stationary first and second moments. The unknowns are the
/// unordered regular pairs {a, a'} in the closure of the requested support
/// under transitions of the coupled walk; everything else is boundary data
/// E[X_v X_w] = E[X_v] E[X_w].
class MomentSolution {
 public:
  std::size_t size() const noexcept { return static_cast<std::size_t>(mean.size()); }

  /// E[X_v X_w]; throws if {v, w} is a regular pair outside the support.
  double second(NodeId v, NodeId w) const;
  double covariance(NodeId v, NodeId w) const;
  /// Pearson correlation; 0 when either variance vanishes.
  double correlation(NodeId v, NodeId w) const;
  bool in_support(NodeId v, NodeId w) const;

  /// eta for a pair: row-major |S| x |S| matrix of joint absorption
  /// probabilities (requires with_eta).
  Eigen::MatrixXd eta(NodeId v, NodeId w) const;

  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  std::vector<NodePair> support;  ///< unknown pairs, first <= second
  Eigen::VectorXd support_values; ///< E[X_a X_a'] aligned with support
  Eigen::MatrixXd eta_values;     ///< rows aligned with support, |S|^2 columns
  std::size_t clamped_variances = 0;
  double max_clamped = 0.0;       ///< most negative variance set to 0
  SolveReport report;

 private:
  friend MomentSolution second_moments(const SocialNetwork&, const SecondMomentOptions&);
  std::size_t n_ = 0;
  std::vector<std::size_t> stubborn_pos_;  // kNotIndexed for regular nodes
  Eigen::MatrixXd gamma_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::size_t lookup(NodeId v, NodeId w) const;
};

MomentSolution second_moments(const SocialNetwork& net, const SecondMomentOptions& options = {});

struct OdeOptions {
  double abs_tolerance = 1e-9;
  double rel_tolerance = 1e-9;
  std::vector<double> checkpoints;  ///< times at which to record the state
  std::size_t max_steps = 10'000'000;
};

struct MomentTrajectory {
  Eigen::VectorXd mean;     ///< m(t)
  Eigen::MatrixXd second;   ///< M(t) on V x V
  std::vector<double> times;
  std::vector<Eigen::VectorXd> means;     ///< aligned with times
  std::vector<Eigen::MatrixXd> seconds;   ///< aligned with times
};

/// Integrates dm/dt = Q m and dM/dt = K M (M on all of V x V, row-major
/// pair index) with an adaptive Dormand-Prince 5(4) scheme.
MomentTrajectory backward_ode(const SocialNetwork& net, const Eigen::VectorXd& first, const Eigen::MatrixXd& second,
                              double t, const OdeOptions& options = {});

/// ||Q m||_inf + ||K M||_inf, the derivative norm at a moment state.
double moment_derivative_norm(const SocialNetwork& net, const Eigen::VectorXd& first, const Eigen::MatrixXd& second);

}  // namespace gossipfield
