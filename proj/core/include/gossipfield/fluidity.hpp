#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gossipfield/linear_solve.hpp"
#include "gossipfield/network.hpp"

namespace gossipfield {

// All times below refer to the continuous-time chain with generator P - I
// (unit holding rates) on the extended jump matrix, not to the simulation
// clock. Hitting probabilities do not depend on holding rates, mixing and
// hitting times do.

using DenseRowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MixingOptions {
  double tol_time = 1e-3;      ///< bisection resolution
  double truncation = 1e-12;   ///< Poisson tail mass allowed per evaluated time
  std::size_t state_cap = 5000;
};

struct MixingTime {
  double tau = 0.0;  ///< first evaluated t with distance <= 2/e (upper end of the final bracket)
  /// (t, max_{v,v'} sum_w |H_t(v,w) - H_t(v',w)|) at every evaluated time, sorted by t.
  std::vector<std::pair<double, double>> trace;
  bool monotone = true;  ///< trace distances non-increasing in t
};

/// Bisection on the pairwise L1 distance of e^{t(P - I)}, computed by
/// uniformization. Throws kFluidityStateCap above options.state_cap states.
MixingTime mixing_time(const SparseMatrix& p, const MixingOptions& options = {});

/// e^{t(P - I)} as a dense matrix (uniformization, tail mass <= truncation).
DenseRowMatrix heat_kernel(const SparseMatrix& p, double t, double truncation = 1e-12);

/// max over row pairs of the L1 distance, exact.
double max_pairwise_l1(const DenseRowMatrix& h);

struct RelaxationTime {
  double tau2 = 0.0;
  double lambda2 = 0.0;
  bool exact = true;  ///< false when obtained by deflated power iteration
  Eigen::VectorXd eigenvector;  ///< P f = lambda_2 f, unit norm in l2(pi)
};

/// 1 / (1 - lambda_2) of D^{1/2} P D^{-1/2}, D = diag(pi); dense symmetric
/// eigensolver up to 3000 states, deflated power iteration above.
RelaxationTime relaxation_time(const SparseMatrix& p, std::span<const double> pi);

struct Conductance {
  double phi = 0.0;
  std::vector<NodeId> set;  ///< minimizing (or best found) set
  bool exact = true;        ///< false: spectral sweep-cut upper bound
};

/// min over V' with 0 < pi(V') <= 1/2 of sum_{v in V', w not in V'} pi_v P_vw / pi(V').
/// Above `exact_limit` states the sweep runs along `sweep` (a second
/// eigenvector of P), computed on demand when null.
Conductance conductance(const SparseMatrix& p, std::span<const double> pi, std::size_t exact_limit = 20,
                        const Eigen::VectorXd* sweep = nullptr);

/// E_pi[T_targets] for the unit-rate chain: h = 0 on targets,
/// h_v = 1 + sum_w P_vw h_w elsewhere.
double expected_hitting_time(const SparseMatrix& p, std::span<const double> pi, std::span<const NodeId> targets,
                             const SolveOptions& options = {});

/// n pi_* / (pi(S) tau), always evaluated in this order.
inline double fluidity_from_parts(std::size_t n, double pi_min, double pi_stubborn, double tau) {
  return static_cast<double>(n) * pi_min / (pi_stubborn * tau);
}

struct FluidityOptions {
  MixingOptions mixing;
  std::size_t conductance_exact_limit = 20;
  SolveOptions solve;
};

struct FluidityReport {
  std::string extension;
  std::size_t n = 0;
  std::vector<double> pi;
  double pi_stubborn = 0.0;
  double pi_min = 0.0;
  double tau = 0.0;
  bool tau_exact = true;  ///< false: tau replaced by the relaxation time
  std::vector<std::pair<double, double>> mixing_trace;
  double tau2 = 0.0;
  bool tau2_exact = true;
  double conductance = 0.0;
  bool conductance_exact = true;
  double hitting_time = 0.0;              ///< E_pi[T_S]
  double hitting_time_lower_bound = 0.0;  ///< 1 / (2 pi(S)) - 3/2
  double fluidity = 0.0;                  ///< Phi
  std::vector<double> gamma_bar;          ///< aligned with stubborn_agents()
  double mean_z = 0.0;
  double var_z = 0.0;
  double delta_star = 0.0;
};

FluidityReport fluidity(const SocialNetwork& net, const FluidityOptions& options = {});

/// 16 / eps * log(2 e^2 / eps).
double psi(double eps);

struct ConcentrationRow {
  double epsilon = 0.0;
  double mean_threshold = 0.0;          ///< Delta_* eps
  double mean_violation_fraction = 0.0;
  std::optional<double> variance_threshold;  ///< Delta_*^2 eps
  std::optional<double> variance_violation_fraction;
  double bound = 0.0;                   ///< psi(eps) / Phi
};

struct ConcentrationReport {
  bool applicable = false;  ///< pi(S) <= 1/4
  double pi_stubborn = 0.0;
  double fluidity = 0.0;
  double mean_z = 0.0;
  double var_z = 0.0;
  double delta_star = 0.0;
  std::vector<ConcentrationRow> rows;
};

/// Counts nodes v in V with |E[X_v] - E[Z]| > Delta_* eps (and, when
/// `variance` is given, |sigma_v^2 - sigma_Z^2| > Delta_*^2 eps), divided by n.
/// The variance channel requires unit trust (kFluidityNotApplicable otherwise).
ConcentrationReport concentration_report(const SocialNetwork& net, const FluidityReport& report,
                                         const Eigen::VectorXd& mean, const Eigen::VectorXd* variance,
                                         std::span<const double> epsilons);

/// Variances for unit trust from hitting probabilities:
/// sigma_v^2 = sum_s gamma^v_s x_s^2 - (sum_s gamma^v_s x_s)^2.
Eigen::VectorXd unit_trust_variances(const SocialNetwork& net, const Eigen::MatrixXd& gamma);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
};

/// Histogram of E[X_a] over regular agents, `bins` equal bins on
/// [min_s x_s, max_s x_s] (the last bin is closed).
std::vector<HistogramBin> belief_histogram(const SocialNetwork& net, const Eigen::VectorXd& mean, std::size_t bins = 50);

nlohmann::json to_json(const FluidityReport& report);
nlohmann::json to_json(const ConcentrationReport& report);

}  // namespace gossipfield
