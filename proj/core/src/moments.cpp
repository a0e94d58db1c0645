#include "gossipfield/moments.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "gossipfield/error.hpp"

namespace gossipfield {

namespace {

// (I - P_AA) over regular positions, plus P_AS as a dense right-hand side.
struct AbsorbingSystem {
  ColSparseMatrix lhs;
  Eigen::MatrixXd p_as;
};

AbsorbingSystem absorbing_system(const SocialNetwork& net) {
  const auto regular = net.regular_agents();
  const auto na = static_cast<Eigen::Index>(regular.size());
  const auto ns = static_cast<Eigen::Index>(net.stubborn_agents().size());
  std::vector<Eigen::Triplet<double>> entries;
  AbsorbingSystem sys;
  sys.p_as = Eigen::MatrixXd::Zero(na, ns);
  const SparseMatrix& p = net.jump();
  for (Eigen::Index i = 0; i < na; ++i) {
    entries.emplace_back(i, i, 1.0);
    for (SparseMatrix::InnerIterator it(p, regular[static_cast<std::size_t>(i)]); it; ++it) {
      const auto w = static_cast<NodeId>(it.col());
      const std::size_t ri = net.regular_index(w);
      if (ri != kNotIndexed) {
        entries.emplace_back(i, static_cast<Eigen::Index>(ri), -it.value());
      } else {
        sys.p_as(i, static_cast<Eigen::Index>(net.stubborn_index(w))) += it.value();
      }
    }
  }
  sys.lhs.resize(na, na);
  sys.lhs.setFromTriplets(entries.begin(), entries.end());
  sys.lhs.makeCompressed();
  return sys;
}

std::uint64_t pair_key(NodeId v, NodeId w, std::size_t n) {
  if (v > w) std::swap(v, w);
  return static_cast<std::uint64_t>(v) * n + w;
}

}  // namespace

HittingDistribution hitting_gamma(const SocialNetwork& net, const SolveOptions& options) {
  const auto sys = absorbing_system(net);
  HittingDistribution out;
  const Eigen::MatrixXd regular_gamma = solve_linear(sys.lhs, sys.p_as, options, &out.report);
  const auto ns = static_cast<Eigen::Index>(net.stubborn_agents().size());
  out.gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(net.size()), ns);
  for (std::size_t i = 0; i < net.regular_agents().size(); ++i) {
    out.gamma.row(net.regular_agents()[i]) = regular_gamma.row(static_cast<Eigen::Index>(i));
  }
  for (Eigen::Index j = 0; j < ns; ++j) out.gamma(net.stubborn_agents()[static_cast<std::size_t>(j)], j) = 1.0;
  return out;
}

ExpectedBeliefs expected_beliefs(const SocialNetwork& net, const SolveOptions& options) {
  const auto beliefs = net.stubborn_beliefs();
  const Eigen::Map<const Eigen::VectorXd> x(beliefs.data(), static_cast<Eigen::Index>(beliefs.size()));

  ExpectedBeliefs out;
  out.mean = hitting_gamma(net, options).gamma * x;

  // Harmonic path on Q directly: -Q_AA m = Q_AS x.
  const auto regular = net.regular_agents();
  const auto na = static_cast<Eigen::Index>(regular.size());
  std::vector<Eigen::Triplet<double>> entries;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(na);
  const SparseMatrix& q = net.generator();
  for (Eigen::Index i = 0; i < na; ++i) {
    for (SparseMatrix::InnerIterator it(q, regular[static_cast<std::size_t>(i)]); it; ++it) {
      const auto w = static_cast<NodeId>(it.col());
      const std::size_t ri = net.regular_index(w);
      if (ri != kNotIndexed) {
        entries.emplace_back(i, static_cast<Eigen::Index>(ri), -it.value());
      } else {
        rhs(i) += it.value() * net.belief(w);
      }
    }
  }
  ColSparseMatrix lhs(na, na);
  lhs.setFromTriplets(entries.begin(), entries.end());
  const Eigen::VectorXd direct = solve_linear(lhs, rhs, options);
  for (Eigen::Index i = 0; i < na; ++i) {
    out.dual_path_gap = std::max(out.dual_path_gap, std::abs(direct(i) - out.mean(regular[static_cast<std::size_t>(i)])));
  }
  const double scale = std::max(1.0, net.max_abs_belief());
  if (!(out.dual_path_gap <= 1e-10 * scale)) {
    throw Error(ErrorCode::kMomentsInconsistent,
                "hitting-probability and harmonic solves disagree by " + std::to_string(out.dual_path_gap));
  }
  return out;
}

std::size_t MomentSolution::lookup(NodeId v, NodeId w) const {
  const auto it = index_.find(pair_key(v, w, n_));
  return it == index_.end() ? kNotIndexed : it->second;
}

bool MomentSolution::in_support(NodeId v, NodeId w) const {
  if (v >= n_ || w >= n_) return false;
  if (stubborn_pos_[v] != kNotIndexed || stubborn_pos_[w] != kNotIndexed) return true;
  return lookup(v, w) != kNotIndexed;
}

double MomentSolution::second(NodeId v, NodeId w) const {
  if (v >= n_ || w >= n_) throw Error(ErrorCode::kInvalidArgument, "pair out of range");
  if (stubborn_pos_[v] != kNotIndexed || stubborn_pos_[w] != kNotIndexed) return mean(v) * mean(w);
  const std::size_t i = lookup(v, w);
  if (i == kNotIndexed) {
    throw Error(ErrorCode::kInvalidArgument,
                "pair (" + std::to_string(v) + ", " + std::to_string(w) + ") is outside the solved support");
  }
  return support_values(static_cast<Eigen::Index>(i));
}

double MomentSolution::covariance(NodeId v, NodeId w) const { return second(v, w) - mean(v) * mean(w); }

double MomentSolution::correlation(NodeId v, NodeId w) const {
  const double sv = variance(v);
  const double sw = variance(w);
  if (!(sv > 0.0) || !(sw > 0.0)) return 0.0;
  return covariance(v, w) / std::sqrt(sv * sw);
}

Eigen::MatrixXd MomentSolution::eta(NodeId v, NodeId w) const {
  const auto ns = gamma_.cols();
  if (eta_values.size() == 0) throw Error(ErrorCode::kInvalidArgument, "eta was not requested");
  if (v >= n_ || w >= n_) throw Error(ErrorCode::kInvalidArgument, "pair out of range");
  Eigen::MatrixXd out(ns, ns);
  if (stubborn_pos_[v] != kNotIndexed || stubborn_pos_[w] != kNotIndexed) {
    out = gamma_.row(v).transpose() * gamma_.row(w);
    return out;
  }
  const std::size_t i = lookup(v, w);
  if (i == kNotIndexed) throw Error(ErrorCode::kInvalidArgument, "pair is outside the solved support");
  for (Eigen::Index a = 0; a < ns; ++a) {
    for (Eigen::Index b = 0; b < ns; ++b) {
      // Stored for the canonical order (min, max); transpose for the other.
      out(a, b) = v <= w ? eta_values(static_cast<Eigen::Index>(i), a * ns + b)
                         : eta_values(static_cast<Eigen::Index>(i), b * ns + a);
    }
  }
  return out;
}

namespace {

// eta is not symmetric under swapping the two walks, so it is solved over
// ordered pairs. Rows of the result follow `support` (first <= second).
Eigen::MatrixXd solve_eta(const SocialNetwork& net, const CoupledK& k, const std::vector<NodePair>& support,
                          const Eigen::MatrixXd& gamma, const SolveOptions& solve) {
  const std::size_t n = net.size();
  const auto ns = gamma.cols();
  std::vector<NodePair> ordered;
  std::unordered_map<std::uint64_t, std::size_t> index;
  for (const auto& [v, w] : support) {
    index.emplace(static_cast<std::uint64_t>(v) * n + w, ordered.size());
    ordered.emplace_back(v, w);
    if (v != w) {
      index.emplace(static_cast<std::uint64_t>(w) * n + v, ordered.size());
      ordered.emplace_back(w, v);
    }
  }
  const auto m = static_cast<Eigen::Index>(ordered.size());
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, ns * ns);
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<PairTransition> row;
  for (Eigen::Index i = 0; i < m; ++i) {
    row.clear();
    entries.emplace_back(i, i, -k.row(ordered[static_cast<std::size_t>(i)], row));
    for (const auto& t : row) {
      const auto [v, w] = t.to;
      if (!net.is_stubborn(v) && !net.is_stubborn(w)) {
        entries.emplace_back(i, static_cast<Eigen::Index>(index.at(static_cast<std::uint64_t>(v) * n + w)), -t.rate);
        continue;
      }
      for (Eigen::Index a = 0; a < ns; ++a) {
        const double ga = gamma(v, a);
        if (ga == 0.0) continue;
        for (Eigen::Index b = 0; b < ns; ++b) rhs(i, a * ns + b) += t.rate * ga * gamma(w, b);
      }
    }
  }
  ColSparseMatrix lhs(m, m);
  lhs.setFromTriplets(entries.begin(), entries.end());
  lhs.makeCompressed();
  const Eigen::MatrixXd all = solve_linear(lhs, rhs, solve);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(support.size()), ns * ns);
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto [v, w] = support[i];
    out.row(static_cast<Eigen::Index>(i)) = all.row(static_cast<Eigen::Index>(index.at(static_cast<std::uint64_t>(v) * n + w)));
  }
  return out;
}

}  // namespace

MomentSolution second_moments(const SocialNetwork& net, const SecondMomentOptions& options) {
  const std::size_t n = net.size();
  const auto regular = net.regular_agents();

  MomentSolution sol;
  sol.n_ = n;
  sol.stubborn_pos_.resize(n);
  for (NodeId v = 0; v < n; ++v) sol.stubborn_pos_[v] = net.stubborn_index(v);
  const auto hitting = hitting_gamma(net, options.solve);
  sol.gamma_ = hitting.gamma;
  sol.mean = expected_beliefs(net, options.solve).mean;

  // Support: closure of the requested regular pairs under coupled-walk moves.
  const CoupledK k(net);
  std::vector<NodePair>& support = sol.support;
  auto add = [&](NodeId v, NodeId w) {
    if (net.is_stubborn(v) || net.is_stubborn(w)) return;
    if (v > w) std::swap(v, w);
    if (sol.index_.emplace(pair_key(v, w, n), support.size()).second) support.emplace_back(v, w);
  };
  const std::size_t na = regular.size();
  if (!options.pairs) {
    const std::size_t unknowns = na * (na + 1) / 2;
    if (na * na > options.max_unknowns) {
      throw Error(ErrorCode::kMomentsSupportTooLarge,
                  "full second-moment support needs " + std::to_string(unknowns) +
                      " unknowns; pass an explicit pair set");
    }
    support.reserve(unknowns);
    sol.index_.reserve(unknowns);
    for (std::size_t i = 0; i < na; ++i) {
      for (std::size_t j = i; j < na; ++j) add(regular[i], regular[j]);
    }
  } else {
    for (NodeId a : regular) add(a, a);
    for (const auto& [v, w] : *options.pairs) {
      if (v >= n || w >= n) throw Error(ErrorCode::kInvalidArgument, "requested pair out of range");
      add(v, w);
    }
    std::vector<PairTransition> row;
    for (std::size_t i = 0; i < support.size(); ++i) {
      row.clear();
      k.row(support[i], row);
      for (const auto& t : row) add(t.to.first, t.to.second);
      if (support.size() > options.max_unknowns) {
        throw Error(ErrorCode::kMomentsSupportTooLarge,
                    "closure of the requested pairs exceeds " + std::to_string(options.max_unknowns) + " unknowns");
      }
    }
  }

  // Linear system -K restricted to the support; boundary moves go to the rhs.
  const auto m = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 1);
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<PairTransition> row;
  for (Eigen::Index i = 0; i < m; ++i) {
    row.clear();
    const double diag = k.row(support[static_cast<std::size_t>(i)], row);
    entries.emplace_back(i, i, -diag);
    for (const auto& t : row) {
      const auto [v, w] = t.to;
      if (!net.is_stubborn(v) && !net.is_stubborn(w)) {
        entries.emplace_back(i, static_cast<Eigen::Index>(sol.index_.at(pair_key(v, w, n))), -t.rate);
      } else {
        rhs(i, 0) += t.rate * sol.mean(v) * sol.mean(w);
      }
    }
  }
  ColSparseMatrix lhs(m, m);
  lhs.setFromTriplets(entries.begin(), entries.end());
  lhs.makeCompressed();
  sol.support_values = solve_linear(lhs, rhs, options.solve, &sol.report).col(0);
  if (options.with_eta) sol.eta_values = solve_eta(net, k, support, hitting.gamma, options.solve);

  const double scale = std::max(1.0, net.max_abs_belief() * net.max_abs_belief());
  sol.variance = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (NodeId a : regular) {
    double var = sol.second(a, a) - sol.mean(a) * sol.mean(a);
    if (var < 0.0 && var >= -1e-12 * scale) {
      ++sol.clamped_variances;
      sol.max_clamped = std::min(sol.max_clamped, var);
      var = 0.0;
    }
    sol.variance(a) = var;
  }
  return sol;
}

namespace {

using OdeState = std::vector<double>;

// dm/dt = Q m on the first n entries, dM/dt = K M on the n^2 that follow.
struct MomentRhs {
  const SparseMatrix* q;
  const SparseMatrix* k;
  Eigen::Index n;

  void operator()(const OdeState& x, OdeState& dxdt, double /*t*/) const {
    const Eigen::Map<const Eigen::VectorXd> m(x.data(), n);
    const Eigen::Map<const Eigen::VectorXd> big(x.data() + n, n * n);
    Eigen::Map<Eigen::VectorXd> dm(dxdt.data(), n);
    Eigen::Map<Eigen::VectorXd> dbig(dxdt.data() + n, n * n);
    dm.noalias() = *q * m;
    dbig.noalias() = *k * big;
  }
};

OdeState pack(const Eigen::VectorXd& first, const Eigen::MatrixXd& second) {
  const Eigen::Index n = first.size();
  OdeState x(static_cast<std::size_t>(n + n * n));
  for (Eigen::Index i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = first(i);
  // Row-major pair index v * n + w, matching CoupledK::index.
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index w = 0; w < n; ++w) x[static_cast<std::size_t>(n + v * n + w)] = second(v, w);
  }
  return x;
}

void unpack(const OdeState& x, Eigen::Index n, Eigen::VectorXd& first, Eigen::MatrixXd& second) {
  first.resize(n);
  second.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) first(i) = x[static_cast<std::size_t>(i)];
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index w = 0; w < n; ++w) second(v, w) = x[static_cast<std::size_t>(n + v * n + w)];
  }
}

}  // namespace

double moment_derivative_norm(const SocialNetwork& net, const Eigen::VectorXd& first, const Eigen::MatrixXd& second) {
  const auto n = static_cast<Eigen::Index>(net.size());
  if (first.size() != n || second.rows() != n || second.cols() != n) {
    throw Error(ErrorCode::kInvalidArgument, "moment state has the wrong dimension");
  }
  const SparseMatrix k = CoupledK(net).materialize();
  const MomentRhs rhs{&net.generator(), &k, n};
  const OdeState x = pack(first, second);
  OdeState dx(x.size());
  rhs(x, dx, 0.0);
  double norm_m = 0.0;
  double norm_big = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) norm_m = std::max(norm_m, std::abs(dx[static_cast<std::size_t>(i)]));
  for (std::size_t i = static_cast<std::size_t>(n); i < dx.size(); ++i) norm_big = std::max(norm_big, std::abs(dx[i]));
  return norm_m + norm_big;
}

MomentTrajectory backward_ode(const SocialNetwork& net, const Eigen::VectorXd& first, const Eigen::MatrixXd& second,
                              double t, const OdeOptions& options) {
  namespace odeint = boost::numeric::odeint;
  const auto n = static_cast<Eigen::Index>(net.size());
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::kInvalidArgument, "backward_ode needs finite t >= 0");
  if (first.size() != n || second.rows() != n || second.cols() != n) {
    throw Error(ErrorCode::kInvalidArgument, "initial moments have the wrong dimension");
  }
  std::vector<double> times = options.checkpoints;
  for (double c : times) {
    if (!(c >= 0.0 && c <= t)) throw Error(ErrorCode::kInvalidArgument, "checkpoints must lie in [0, t]");
  }
  times.push_back(0.0);
  times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  const SparseMatrix k = CoupledK(net).materialize();
  const MomentRhs rhs{&net.generator(), &k, n};
  OdeState x = pack(first, second);

  MomentTrajectory out;
  auto observer = [&](const OdeState& state, double time) {
    if (std::find(options.checkpoints.begin(), options.checkpoints.end(), time) == options.checkpoints.end()) return;
    Eigen::VectorXd m;
    Eigen::MatrixXd big;
    unpack(state, n, m, big);
    out.times.push_back(time);
    out.means.push_back(std::move(m));
    out.seconds.push_back(std::move(big));
  };

  if (t == 0.0) {
    observer(x, 0.0);
  } else {
    auto stepper = odeint::make_controlled(options.abs_tolerance, options.rel_tolerance,
                                           odeint::runge_kutta_dopri5<OdeState>());
    const double dt0 = std::min(1e-3, t);
    try {
      odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt0, observer,
                              odeint::max_step_checker(static_cast<int>(std::min<std::size_t>(
                                  options.max_steps, static_cast<std::size_t>(std::numeric_limits<int>::max())))));
    } catch (const odeint::step_adjustment_error& e) {
      throw Error(ErrorCode::kMomentsStepUnderflow, std::string("step size underflow: ") + e.what());
    } catch (const odeint::no_progress_error& e) {
      throw Error(ErrorCode::kMomentsStepUnderflow, std::string("integrator made no progress: ") + e.what());
    } catch (const odeint::odeint_error& e) {
      throw Error(ErrorCode::kMomentsStepUnderflow, e.what());
    }
  }
  unpack(x, n, out.mean, out.second);
  return out;
}

}  // namespace gossipfield
