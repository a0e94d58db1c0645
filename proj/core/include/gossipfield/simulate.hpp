#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gossipfield/coupled.hpp"
#include "gossipfield/network.hpp"
#include "gossipfield/rng.hpp"

namespace gossipfield {

struct BeliefState {
  double time = 0.0;
  std::vector<double> beliefs;
  std::uint64_t events = 0;  ///< N(t)
};

/// One belief update: `agent` met edges()[edge].to at `time`.
struct BeliefEvent {
  double time = 0.0;
  std::size_t edge = 0;
  NodeId agent = 0;
  double old_belief = 0.0;
  double new_belief = 0.0;
};

class SimulationObserver {
 public:
  virtual ~SimulationObserver() = default;
  virtual void on_start(const SocialNetwork& /*net*/, const BeliefState& /*state*/) {}
  /// Called after the update has been applied to `state`.
  virtual void on_event(const BeliefEvent& /*event*/, const BeliefState& /*state*/) {}
  virtual void on_finish(const BeliefState& /*state*/) {}
};

struct ForwardOptions {
  std::uint64_t event_cap = 1'000'000'000;
  /// Assert min_s x_s <= X_v <= max_s x_s after every event when X0 starts
  /// inside that interval.
  bool check_bounds = true;
};

struct TrajectorySummary {
  BeliefState final_state;
  bool started_in_hull = false;
};

/// Exact event-driven simulation: one exponential clock of rate r = sum r_av,
/// each event picks edge (a, v) with probability r_av / r (alias table) and sets
/// X_a <- (1 - theta_av) X_a + theta_av X_v.
class ForwardSimulator {
 public:
  explicit ForwardSimulator(SocialNetwork net);

  const SocialNetwork& network() const noexcept { return net_; }

  TrajectorySummary run(std::span<const double> x0, double horizon, std::uint64_t seed,
                        std::span<SimulationObserver* const> observers = {}, const ForwardOptions& options = {}) const;

 private:
  SocialNetwork net_;
  AliasTable edges_;
};

TrajectorySummary simulate_forward(const SocialNetwork& net, std::span<const double> x0, double horizon,
                                   std::uint64_t seed, std::span<SimulationObserver* const> observers = {},
                                   const ForwardOptions& options = {});

/// Initial state with stubborn beliefs in place and every regular agent at `fill`.
std::vector<double> initial_beliefs(const SocialNetwork& net, double fill);

/// Running min and max of every coordinate after time `from`.
class RangeObserver : public SimulationObserver {
 public:
  explicit RangeObserver(double from = 0.0) : from_(from) {}
  void on_start(const SocialNetwork& net, const BeliefState& state) override;
  void on_event(const BeliefEvent& event, const BeliefState& state) override;

  const std::vector<double>& min() const noexcept { return min_; }
  const std::vector<double>& max() const noexcept { return max_; }

 private:
  double from_;
  bool armed_ = false;
  std::vector<double> min_;
  std::vector<double> max_;
};

/// CSV event log: time,edge,new_belief with edge written as "from->to".
class EventLogObserver : public SimulationObserver {
 public:
  explicit EventLogObserver(std::ostream& out) : out_(out) {}
  void on_start(const SocialNetwork& net, const BeliefState& state) override;
  void on_event(const BeliefEvent& event, const BeliefState& state) override;

 private:
  std::ostream& out_;
  const SocialNetwork* net_ = nullptr;
};

struct ErgodicEstimate {
  std::vector<double> mean;
  std::vector<double> mean_se;
  std::vector<NodePair> pairs;       ///< first <= second
  std::vector<double> second;        ///< time-averaged X_v X_w, aligned with pairs
  std::vector<double> second_se;
  std::vector<double> variance;      ///< E[X_v^2] - E[X_v]^2 for every node
  std::vector<double> variance_se;   ///< jackknife over batches
  double total_time = 0.0;
  std::size_t batches = 0;
};

/// Exact time integrals of X_v and X_v X_w between events, split into equal
/// time batches for batch-means standard errors. Diagonal pairs are always
/// tracked. Accumulators over the same node and pair sets merge by
/// concatenating their batches.
class ErgodicAccumulator : public SimulationObserver {
 public:
  ErgodicAccumulator(std::size_t n, std::vector<NodePair> pairs, double burn_in, double horizon,
                     std::size_t batches = 100);

  void on_start(const SocialNetwork& net, const BeliefState& state) override;
  void on_event(const BeliefEvent& event, const BeliefState& state) override;
  void on_finish(const BeliefState& state) override;

  void merge(const ErgodicAccumulator& other);
  ErgodicEstimate estimate() const;

 private:
  void advance_to(double t);
  void flush_node(NodeId v, double t);
  void flush_pair(std::size_t p, double t);
  void flush_all(double t);

  std::size_t n_;
  std::vector<NodePair> pairs_;
  std::vector<std::vector<std::size_t>> pairs_of_node_;
  std::vector<std::size_t> diagonal_;  // pair index of (v, v)
  double burn_in_;
  double horizon_;
  std::size_t batch_count_;
  double batch_length_;

  std::vector<double> x_;
  std::vector<double> node_last_;
  std::vector<double> pair_last_;
  std::size_t batch_ = 0;
  double batch_end_ = 0.0;
  // Completed batches: integrals of X_v and X_v X_w, and batch durations.
  std::vector<std::vector<double>> node_integrals_;
  std::vector<std::vector<double>> pair_integrals_;
  std::vector<double> batch_time_;
};

/// Runs a forward simulation and returns the time averages over
/// [burn_in, horizon]. `pairs` are extra second-moment pairs.
ErgodicEstimate ergodic_moments(const SocialNetwork& net, std::span<const double> x0, double horizon,
                                std::uint64_t seed, std::vector<NodePair> pairs = {}, double burn_in = 0.0,
                                std::size_t batches = 100);

struct StationarySample {
  std::vector<double> beliefs;  ///< stubborn coordinates hold x_s
  double error_bound = 0.0;     ///< bound on |sample - exact backward limit| per coordinate
  std::uint64_t events = 0;
};

struct BackwardOptions {
  std::uint64_t event_cap = 10'000'000;
};

/// Composes i.i.d. meeting events in reversed order,
///   X = B(1) + A(1) B(2) + A(1) A(2) B(3) + ...,
/// keeping the prefix product M = A(1)...A(k-1) and its row sums. Stops once
/// max_i rowsum_i(M) * max_s |x_s| < tol, which bounds the remaining tail.
class BackwardSampler {
 public:
  explicit BackwardSampler(SocialNetwork net);
  StationarySample sample(double tol, CounterRng& rng, const BackwardOptions& options = {}) const;

 private:
  SocialNetwork net_;
  AliasTable edges_;
};

StationarySample sample_stationary_backward(const SocialNetwork& net, double tol, std::uint64_t seed,
                                            const BackwardOptions& options = {});

/// Coalescing random walks with generator Q. Only the jump order matters for
/// where walks meet and where they are absorbed, so the embedded chain over
/// occupied nodes is simulated: the next mover is drawn in proportion to
/// -Q_vv (Fenwick tree) and moves along P.
class CoalescingWalks {
 public:
  explicit CoalescingWalks(SocialNetwork net);

  /// Stubborn agent absorbing each start (a stubborn start is its own answer).
  std::vector<NodeId> run(std::span<const NodeId> starts, CounterRng& rng) const;

  /// Exact stationary draw for unit trust: X_a = x at the absorbing agent of
  /// the walk started from a. Throws kSimulateTrustNotOne otherwise.
  StationarySample voter_sample(CounterRng& rng) const;

 private:
  SocialNetwork net_;
  std::vector<AliasTable> moves_;  // per node, over out_edges
  std::vector<double> exit_rate_;
};

StationarySample voter_dual_sample(const SocialNetwork& net, std::uint64_t seed);

}  // namespace gossipfield
