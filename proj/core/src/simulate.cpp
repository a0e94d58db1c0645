#include "gossipfield/simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>

#include "gossipfield/error.hpp"

namespace gossipfield {

namespace {

// Per-operation streams, so one user seed drives unrelated draws.
constexpr std::uint64_t kForwardStream = 0xF0;
constexpr std::uint64_t kBackwardStream = 0xB0;
constexpr std::uint64_t kDualStream = 0xD0;

std::vector<double> edge_rates(const SocialNetwork& net) {
  std::vector<double> rates;
  rates.reserve(net.edges().size());
  for (const auto& e : net.edges()) rates.push_back(e.rate);
  return rates;
}

// Fenwick tree over node weights with prefix-descent sampling.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0.0), weight_(n, 0.0) {}

  void set(std::size_t i, double w) {
    const double delta = w - weight_[i];
    weight_[i] = w;
    for (std::size_t j = i + 1; j < tree_.size(); j += j & (~j + 1)) tree_[j] += delta;
  }

  double total() const {
    double s = 0.0;
    for (std::size_t j = tree_.size() - 1; j > 0; j -= j & (~j + 1)) s += tree_[j];
    return s;
  }

  // Node holding the mass point `target` in [0, total); may land on a
  // zero-weight node through rounding, which callers reject.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    const std::size_t n = tree_.size() - 1;
    for (std::size_t step = std::bit_floor(n); step > 0; step >>= 1) {
      if (pos + step <= n && tree_[pos + step] <= target) {
        pos += step;
        target -= tree_[pos];
      }
    }
    return pos;
  }

  double weight(std::size_t i) const { return weight_[i]; }

 private:
  std::vector<double> tree_;
  std::vector<double> weight_;
};

}  // namespace

std::vector<double> initial_beliefs(const SocialNetwork& net, double fill) {
  std::vector<double> x(net.size(), fill);
  for (NodeId s : net.stubborn_agents()) x[s] = net.belief(s);
  return x;
}

ForwardSimulator::ForwardSimulator(SocialNetwork net) : net_(std::move(net)), edges_(edge_rates(net_)) {}

TrajectorySummary ForwardSimulator::run(std::span<const double> x0, double horizon, std::uint64_t seed,
                                        std::span<SimulationObserver* const> observers,
                                        const ForwardOptions& options) const {
  const std::size_t n = net_.size();
  if (x0.size() != n) throw Error(ErrorCode::kSimulateInvalidState, "initial state has the wrong size");
  for (NodeId s : net_.stubborn_agents()) {
    if (x0[s] != net_.belief(s)) {
      throw Error(ErrorCode::kSimulateInvalidState, "initial state changes the belief of stubborn agent '" + net_.name(s) + "'");
    }
  }
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::kInvalidArgument, "horizon must be finite and >= 0");
  const double rate = net_.total_rate();
  if (!(rate > 0.0)) throw Error(ErrorCode::kSimulateInvalidState, "total meeting rate is zero");

  TrajectorySummary summary;
  BeliefState& state = summary.final_state;
  state.beliefs.assign(x0.begin(), x0.end());
  const double lo = net_.min_belief();
  const double hi = net_.max_belief();
  summary.started_in_hull = std::all_of(x0.begin(), x0.end(), [&](double x) { return x >= lo && x <= hi; });
  const bool check = options.check_bounds && summary.started_in_hull;
  const double slack = 1e-12 * std::max(1.0, net_.max_abs_belief());

  for (auto* o : observers) o->on_start(net_, state);
  CounterRng rng(derive_seed(seed, kForwardStream));
  const auto edges = net_.edges();
  for (;;) {
    const double t = state.time + rng.exponential(rate);
    if (t > horizon) break;
    if (state.events == options.event_cap) {
      throw Error(ErrorCode::kSimulateEventCap, "forward simulation hit the event cap of " + std::to_string(options.event_cap));
    }
    const std::size_t k = edges_.sample(rng);
    const DirectedEdge& e = edges[k];
    BeliefEvent event{t, k, e.from, state.beliefs[e.from], 0.0};
    event.new_belief = (1.0 - e.trust) * event.old_belief + e.trust * state.beliefs[e.to];
    state.beliefs[e.from] = event.new_belief;
    state.time = t;
    ++state.events;
    if (check && (event.new_belief < lo - slack || event.new_belief > hi + slack)) {
      throw Error(ErrorCode::kSimulateInvalidState, "belief left the stubborn hull at t = " + std::to_string(t));
    }
    for (auto* o : observers) o->on_event(event, state);
  }
  state.time = horizon;
  for (auto* o : observers) o->on_finish(state);
  return summary;
}

TrajectorySummary simulate_forward(const SocialNetwork& net, std::span<const double> x0, double horizon,
                                   std::uint64_t seed, std::span<SimulationObserver* const> observers,
                                   const ForwardOptions& options) {
  return ForwardSimulator(net).run(x0, horizon, seed, observers, options);
}

void RangeObserver::on_start(const SocialNetwork& /*net*/, const BeliefState& state) {
  min_ = state.beliefs;
  max_ = state.beliefs;
  armed_ = from_ <= 0.0;
}

void RangeObserver::on_event(const BeliefEvent& event, const BeliefState& state) {
  if (!armed_) {
    if (event.time < from_) return;
    // The state in force at `from_` is the one just before this event.
    min_ = state.beliefs;
    max_ = state.beliefs;
    min_[event.agent] = std::min(event.old_belief, event.new_belief);
    max_[event.agent] = std::max(event.old_belief, event.new_belief);
    armed_ = true;
    return;
  }
  min_[event.agent] = std::min(min_[event.agent], event.new_belief);
  max_[event.agent] = std::max(max_[event.agent], event.new_belief);
}

void EventLogObserver::on_start(const SocialNetwork& net, const BeliefState& /*state*/) {
  net_ = &net;
  out_ << "time,edge,new_belief\n";
  out_.precision(17);
}

void EventLogObserver::on_event(const BeliefEvent& event, const BeliefState& /*state*/) {
  const auto& e = net_->edges()[event.edge];
  out_ << event.time << ',' << net_->name(e.from) << "->" << net_->name(e.to) << ',' << event.new_belief << '\n';
}

ErgodicAccumulator::ErgodicAccumulator(std::size_t n, std::vector<NodePair> pairs, double burn_in, double horizon,
                                       std::size_t batches)
    : n_(n), burn_in_(burn_in), horizon_(horizon), batch_count_(batches) {
  if (!(burn_in >= 0.0) || !(horizon > burn_in) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::kInvalidArgument, "ergodic window needs 0 <= burn_in < horizon");
  }
  if (batches < 2) throw Error(ErrorCode::kInvalidArgument, "batch means need at least 2 batches");
  for (NodeId v = 0; v < n; ++v) pairs.emplace_back(v, v);
  for (auto& [v, w] : pairs) {
    if (v >= n || w >= n) throw Error(ErrorCode::kInvalidArgument, "pair out of range");
    if (v > w) std::swap(v, w);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  pairs_ = std::move(pairs);
  pairs_of_node_.resize(n);
  diagonal_.resize(n);
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto [v, w] = pairs_[p];
    pairs_of_node_[v].push_back(p);
    if (w != v) pairs_of_node_[w].push_back(p);
    if (v == w) diagonal_[v] = p;
  }
  batch_length_ = (horizon - burn_in) / static_cast<double>(batches);
}

void ErgodicAccumulator::flush_node(NodeId v, double t) {
  node_integrals_.back()[v] += x_[v] * (t - node_last_[v]);
  node_last_[v] = t;
}

void ErgodicAccumulator::flush_pair(std::size_t p, double t) {
  const auto [v, w] = pairs_[p];
  pair_integrals_.back()[p] += x_[v] * x_[w] * (t - pair_last_[p]);
  pair_last_[p] = t;
}

void ErgodicAccumulator::flush_all(double t) {
  for (NodeId v = 0; v < n_; ++v) flush_node(v, t);
  for (std::size_t p = 0; p < pairs_.size(); ++p) flush_pair(p, t);
}

void ErgodicAccumulator::advance_to(double t) {
  while (batch_ < batch_count_ && t >= batch_end_) {
    flush_all(batch_end_);
    batch_time_.push_back(batch_length_);
    ++batch_;
    if (batch_ < batch_count_) {
      node_integrals_.emplace_back(n_, 0.0);
      pair_integrals_.emplace_back(pairs_.size(), 0.0);
      batch_end_ = batch_ + 1 == batch_count_ ? horizon_ : burn_in_ + static_cast<double>(batch_ + 1) * batch_length_;
    }
  }
}

void ErgodicAccumulator::on_start(const SocialNetwork& net, const BeliefState& state) {
  if (net.size() != n_) throw Error(ErrorCode::kInvalidArgument, "accumulator sized for a different network");
  if (state.time != 0.0) throw Error(ErrorCode::kInvalidArgument, "ergodic accumulation starts at t = 0");
  x_ = state.beliefs;
  node_last_.assign(n_, burn_in_);
  pair_last_.assign(pairs_.size(), burn_in_);
  batch_ = 0;
  batch_end_ = batch_count_ == 1 ? horizon_ : burn_in_ + batch_length_;
  node_integrals_.emplace_back(n_, 0.0);
  pair_integrals_.emplace_back(pairs_.size(), 0.0);
}

void ErgodicAccumulator::on_event(const BeliefEvent& event, const BeliefState& /*state*/) {
  if (event.time >= burn_in_) {
    advance_to(event.time);
    if (batch_ < batch_count_) {
      flush_node(event.agent, event.time);
      for (std::size_t p : pairs_of_node_[event.agent]) flush_pair(p, event.time);
    }
  }
  x_[event.agent] = event.new_belief;
}

void ErgodicAccumulator::on_finish(const BeliefState& state) {
  if (state.time != horizon_) throw Error(ErrorCode::kInvalidArgument, "run finished before the accumulator horizon");
  advance_to(horizon_);
}

void ErgodicAccumulator::merge(const ErgodicAccumulator& other) {
  if (other.n_ != n_ || other.pairs_ != pairs_) throw Error(ErrorCode::kInvalidArgument, "merging accumulators over different pairs");
  if (other.node_integrals_.size() != other.batch_time_.size() || node_integrals_.size() != batch_time_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "merging an accumulator that has not finished");
  }
  node_integrals_.insert(node_integrals_.end(), other.node_integrals_.begin(), other.node_integrals_.end());
  pair_integrals_.insert(pair_integrals_.end(), other.pair_integrals_.begin(), other.pair_integrals_.end());
  batch_time_.insert(batch_time_.end(), other.batch_time_.begin(), other.batch_time_.end());
}

ErgodicEstimate ErgodicAccumulator::estimate() const {
  const std::size_t b = batch_time_.size();
  if (b < 2 || node_integrals_.size() != b) throw Error(ErrorCode::kInvalidArgument, "no finished batches to estimate from");
  ErgodicEstimate out;
  out.pairs = pairs_;
  out.batches = b;
  out.total_time = std::accumulate(batch_time_.begin(), batch_time_.end(), 0.0);
  const double bd = static_cast<double>(b);

  auto summarize = [&](const std::vector<std::vector<double>>& integrals, std::size_t count, std::vector<double>& mean,
                       std::vector<double>& se) {
    mean.assign(count, 0.0);
    se.assign(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
      double total = 0.0;
      for (std::size_t k = 0; k < b; ++k) total += integrals[k][i];
      mean[i] = total / out.total_time;
      double ss = 0.0;
      for (std::size_t k = 0; k < b; ++k) {
        const double dev = integrals[k][i] / batch_time_[k] - mean[i];
        ss += dev * dev;
      }
      se[i] = std::sqrt(ss / (bd * (bd - 1.0)));
    }
  };
  summarize(node_integrals_, n_, out.mean, out.mean_se);
  summarize(pair_integrals_, pairs_.size(), out.second, out.second_se);

  out.variance.assign(n_, 0.0);
  out.variance_se.assign(n_, 0.0);
  std::vector<double> leave_out(b);
  for (NodeId v = 0; v < n_; ++v) {
    const std::size_t p = diagonal_[v];
    out.variance[v] = out.second[p] - out.mean[v] * out.mean[v];
    double total_x = 0.0;
    double total_xx = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
      total_x += node_integrals_[k][v];
      total_xx += pair_integrals_[k][p];
    }
    double avg = 0.0;
    for (std::size_t k = 0; k < b; ++k) {
      const double time = out.total_time - batch_time_[k];
      const double m = (total_x - node_integrals_[k][v]) / time;
      leave_out[k] = (total_xx - pair_integrals_[k][p]) / time - m * m;
      avg += leave_out[k];
    }
    avg /= bd;
    double ss = 0.0;
    for (double value : leave_out) ss += (value - avg) * (value - avg);
    out.variance_se[v] = std::sqrt((bd - 1.0) / bd * ss);
  }
  return out;
}

ErgodicEstimate ergodic_moments(const SocialNetwork& net, std::span<const double> x0, double horizon,
                                std::uint64_t seed, std::vector<NodePair> pairs, double burn_in,
                                std::size_t batches) {
  ErgodicAccumulator acc(net.size(), std::move(pairs), burn_in, horizon, batches);
  SimulationObserver* observers[] = {&acc};
  simulate_forward(net, x0, horizon, seed, observers);
  return acc.estimate();
}

BackwardSampler::BackwardSampler(SocialNetwork net) : net_(std::move(net)), edges_(edge_rates(net_)) {}

StationarySample BackwardSampler::sample(double tol, CounterRng& rng, const BackwardOptions& options) const {
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "backward sampler needs tol > 0");
  const auto regular = net_.regular_agents();
  const auto na = static_cast<Eigen::Index>(regular.size());
  const double xmax = net_.max_abs_belief();

  StationarySample out;
  out.beliefs = initial_beliefs(net_, 0.0);
  if (xmax == 0.0) return out;

  Eigen::MatrixXd prefix = Eigen::MatrixXd::Identity(na, na);
  Eigen::VectorXd rowsum = Eigen::VectorXd::Ones(na);
  Eigen::VectorXd value = Eigen::VectorXd::Zero(na);
  const auto edges = net_.edges();
  double bound = xmax;
  while (bound >= tol) {
    if (out.events == options.event_cap) {
      throw Error(ErrorCode::kSimulateEventCap, "backward sampler reached " + std::to_string(options.event_cap) +
                                                    " events with tail bound " + std::to_string(bound));
    }
    ++out.events;
    const DirectedEdge& e = edges[edges_.sample(rng)];
    const auto a = static_cast<Eigen::Index>(net_.regular_index(e.from));
    const std::size_t target = net_.regular_index(e.to);
    if (target != kNotIndexed) {
      prefix.col(static_cast<Eigen::Index>(target)) += e.trust * prefix.col(a);
      prefix.col(a) *= 1.0 - e.trust;
      continue;
    }
    value += (e.trust * net_.belief(e.to)) * prefix.col(a);
    rowsum -= e.trust * prefix.col(a);
    prefix.col(a) *= 1.0 - e.trust;
    bound = rowsum.maxCoeff() * xmax;
    if (bound < tol) {
      // Confirm with exact row sums before stopping.
      rowsum = prefix.rowwise().sum();
      bound = rowsum.maxCoeff() * xmax;
    }
  }
  out.error_bound = std::max(bound, 0.0);
  for (Eigen::Index i = 0; i < na; ++i) out.beliefs[regular[static_cast<std::size_t>(i)]] = value(i);
  return out;
}

StationarySample sample_stationary_backward(const SocialNetwork& net, double tol, std::uint64_t seed,
                                            const BackwardOptions& options) {
  CounterRng rng(derive_seed(seed, kBackwardStream));
  return BackwardSampler(net).sample(tol, rng, options);
}

CoalescingWalks::CoalescingWalks(SocialNetwork net) : net_(std::move(net)), moves_(net_.size()), exit_rate_(net_.size(), 0.0) {
  for (NodeId a : net_.regular_agents()) {
    std::vector<double> weights;
    for (const auto& e : net_.out_edges(a)) {
      weights.push_back(e.trust * e.rate);
      exit_rate_[a] += e.trust * e.rate;
    }
    moves_[a] = AliasTable(weights);
  }
}

std::vector<NodeId> CoalescingWalks::run(std::span<const NodeId> starts, CounterRng& rng) const {
  const std::size_t n = net_.size();
  constexpr std::size_t kEmpty = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(starts.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  std::vector<NodeId> absorbed(starts.size(), 0);
  std::vector<std::size_t> cluster_at(n, kEmpty);
  Fenwick active(n);
  std::size_t live = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const NodeId v = starts[i];
    if (v >= n) throw Error(ErrorCode::kInvalidArgument, "walk start out of range");
    if (net_.is_stubborn(v)) {
      absorbed[i] = v;
    } else if (cluster_at[v] != kEmpty) {
      parent[i] = cluster_at[v];
    } else {
      cluster_at[v] = i;
      active.set(v, exit_rate_[v]);
      ++live;
    }
  }
  const auto edges = net_.edges();
  while (live > 0) {
    const std::size_t v = active.find(rng.uniform() * active.total());
    if (v >= n || cluster_at[v] == kEmpty) continue;
    const auto offset = static_cast<std::size_t>(net_.out_edges(static_cast<NodeId>(v)).data() - edges.data());
    const NodeId w = edges[offset + moves_[v].sample(rng)].to;
    const std::size_t c = cluster_at[v];
    cluster_at[v] = kEmpty;
    active.set(v, 0.0);
    if (net_.is_stubborn(w)) {
      absorbed[c] = w;
      --live;
    } else if (cluster_at[w] != kEmpty) {
      parent[c] = cluster_at[w];
      --live;
    } else {
      cluster_at[w] = c;
      active.set(w, exit_rate_[w]);
    }
  }
  std::vector<NodeId> out(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) out[i] = absorbed[find(i)];
  return out;
}

StationarySample CoalescingWalks::voter_sample(CounterRng& rng) const {
  if (!net_.unit_trust()) {
    throw Error(ErrorCode::kSimulateTrustNotOne, "the coalescing dual is exact only when every trust parameter is 1");
  }
  StationarySample out;
  out.beliefs = initial_beliefs(net_, 0.0);
  const auto regular = net_.regular_agents();
  const auto absorber = run(regular, rng);
  for (std::size_t i = 0; i < regular.size(); ++i) out.beliefs[regular[i]] = net_.belief(absorber[i]);
  return out;
}

StationarySample voter_dual_sample(const SocialNetwork& net, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, kDualStream));
  return CoalescingWalks(net).voter_sample(rng);
}

}  // namespace gossipfield
