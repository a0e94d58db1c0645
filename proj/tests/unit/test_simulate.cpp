#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gossipfield/error.hpp"
#include "gossipfield/moments.hpp"
#include "gossipfield/simulate.hpp"
#include "test_support.hpp"

using namespace gossipfield;
namespace gt = gossipfield::testing;

namespace {

GraphRecipe line(std::size_t n) {
  GraphRecipe r;
  r.family = GraphFamily::kLine;
  r.n = n;
  return r;
}

std::string event_log(const SocialNetwork& net, double horizon, std::uint64_t seed) {
  std::ostringstream out;
  EventLogObserver log(out);
  SimulationObserver* obs[] = {&log};
  simulate_forward(net, initial_beliefs(net, 0.5), horizon, seed, obs);
  return out.str();
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Forward, ZeroHorizonReturnsInitialState) {
  const auto net = gt::canonical(line(5), 0.5);
  const auto x0 = initial_beliefs(net, 0.25);
  const auto out = simulate_forward(net, x0, 0.0, 1);
  EXPECT_EQ(out.final_state.beliefs, x0);
  EXPECT_EQ(out.final_state.events, 0u);
  EXPECT_TRUE(out.started_in_hull);
}

TEST(Forward, RejectsBadInitialStates) {
  const auto net = gt::canonical(line(4), 0.5);
  auto x0 = initial_beliefs(net, 0.5);
  x0[0] = 0.3;
  EXPECT_EQ(code_of([&] { simulate_forward(net, x0, 1.0, 1); }), ErrorCode::kSimulateInvalidState);
  EXPECT_EQ(code_of([&] { simulate_forward(net, std::vector<double>{0.0, 1.0}, 1.0, 1); }),
            ErrorCode::kSimulateInvalidState);
  ForwardOptions capped;
  capped.event_cap = 10;
  EXPECT_EQ(code_of([&] { simulate_forward(net, initial_beliefs(net, 0.5), 1e3, 1, {}, capped); }),
            ErrorCode::kSimulateEventCap);
}

TEST(Forward, EventCountMatchesTotalRate) {
  // N(t) is Poisson with mean r t; r = 2 for the single agent.
  const auto net = gt::single_agent(0.5);
  const auto out = simulate_forward(net, initial_beliefs(net, 0.5), 1e4, 77);
  const double mean = 2e4;
  EXPECT_LT(std::abs(static_cast<double>(out.final_state.events) - mean), 4.0 * std::sqrt(mean));
}

TEST(Forward, SameSeedSameLogDifferentSeedDifferentLog) {
  const auto net = gt::canonical(line(6), 0.7);
  const auto a = event_log(net, 50.0, 9);
  EXPECT_EQ(a, event_log(net, 50.0, 9));
  EXPECT_NE(a, event_log(net, 50.0, 10));
  EXPECT_EQ(a.substr(0, a.find('\n')), "time,edge,new_belief");
}

TEST(Forward, SingleAgentVisitsBothExtremes) {
  const auto net = gt::single_agent(0.5);
  RangeObserver range(100.0);
  SimulationObserver* obs[] = {&range};
  simulate_forward(net, initial_beliefs(net, 0.5), 1e4, 3, obs);
  EXPECT_LT(range.min()[0], 0.01);
  EXPECT_GT(range.max()[0], 0.99);
  EXPECT_EQ(range.min()[1], 0.0);
  EXPECT_EQ(range.max()[2], 1.0);
}

TEST(Forward, BoundsHoldOnCorpus) {
  for (const auto& entry : gt::corpus()) {
    const auto& net = entry.net;
    RangeObserver range;
    SimulationObserver* obs[] = {&range};
    const auto x0 = initial_beliefs(net, 0.5 * (net.min_belief() + net.max_belief()));
    EXPECT_NO_THROW(simulate_forward(net, x0, 50.0, 4, obs)) << entry.name;
    for (NodeId v = 0; v < net.size(); ++v) {
      EXPECT_GE(range.min()[v], net.min_belief()) << entry.name;
      EXPECT_LE(range.max()[v], net.max_belief()) << entry.name;
    }
  }
}

TEST(Ergodic, LineFourMeans) {
  const auto net = gt::canonical(line(4), 0.5);
  const auto est = ergodic_moments(net, initial_beliefs(net, 0.5), 2e4, 21);
  EXPECT_LT(gt::z_score(est.mean[1], 1.0 / 3.0, est.mean_se[1]), gt::family_z(2));
  EXPECT_LT(gt::z_score(est.mean[2], 2.0 / 3.0, est.mean_se[2]), gt::family_z(2));
  EXPECT_EQ(est.mean[0], 0.0);
  EXPECT_EQ(est.mean_se[3], 0.0);
  for (double m : est.mean) {
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0);
  }
}

TEST(Ergodic, SingleAgentVariance) {
  const auto net = gt::single_agent(0.5);
  const auto est = ergodic_moments(net, initial_beliefs(net, 0.5), 2e4, 5);
  EXPECT_LT(gt::z_score(est.variance[0], 1.0 / 12.0, est.variance_se[0]), 3.0);
  EXPECT_GT(est.variance_se[0], 0.0);
}

TEST(Ergodic, SingleInfluencerDriftsToItsBelief) {
  NetworkBuilder b;
  const auto s = b.node("s");
  const auto a = b.node("a");
  const auto c = b.node("c");
  b.set_stubborn(s, 1.0).add_edge(a, s, 1.0, 0.5).add_edge(a, c, 1.0, 0.5).add_edge(c, a, 1.0, 0.5);
  const auto net = b.build();
  const auto est = ergodic_moments(net, initial_beliefs(net, 0.0), 1e4, 8, {}, 100.0);
  EXPECT_LT(std::abs(est.mean[a] - 1.0), 1e-3);
  EXPECT_LT(std::abs(est.mean[c] - 1.0), 1e-3);
}

TEST(Ergodic, PairsAndMerge) {
  const auto net = gt::canonical(line(5), 1.0);
  const auto x0 = initial_beliefs(net, 0.5);
  const std::vector<NodePair> pairs{{1, 3}};
  ErgodicAccumulator a(net.size(), pairs, 10.0, 2000.0, 20);
  ErgodicAccumulator b(net.size(), pairs, 10.0, 2000.0, 20);
  SimulationObserver* oa[] = {&a};
  SimulationObserver* ob[] = {&b};
  simulate_forward(net, x0, 2000.0, 1, oa);
  simulate_forward(net, x0, 2000.0, 2, ob);
  const auto ea = a.estimate();
  a.merge(b);
  const auto merged = a.estimate();
  EXPECT_EQ(merged.batches, 40u);
  EXPECT_NEAR(merged.total_time, 2.0 * 1990.0, 1e-9);
  EXPECT_NEAR(merged.mean[2], 0.5 * (ea.mean[2] + b.estimate().mean[2]), 1e-12);
  const auto it = std::find(merged.pairs.begin(), merged.pairs.end(), NodePair{1, 3});
  ASSERT_NE(it, merged.pairs.end());
  const auto exact = second_moments(net);
  const auto i = static_cast<std::size_t>(it - merged.pairs.begin());
  EXPECT_LT(gt::z_score(merged.second[i], exact.second(1, 3), merged.second_se[i]), 3.0);

  ErgodicAccumulator other(net.size(), {}, 10.0, 2000.0, 20);
  EXPECT_THROW(a.merge(other), Error);
}

TEST(Backward, VoterSingleAgentIsBernoulli) {
  const auto net = gt::single_agent(1.0);
  const BackwardSampler sampler(net);
  CounterRng rng(12);
  const int draws = 20000;
  int ones = 0;
  for (int i = 0; i < draws; ++i) {
    const auto s = sampler.sample(1e-12, rng);
    ASSERT_TRUE(s.beliefs[0] == 0.0 || s.beliefs[0] == 1.0);
    ones += s.beliefs[0] == 1.0;
    EXPECT_EQ(s.error_bound, 0.0);
  }
  EXPECT_LT(std::abs(ones - draws / 2.0), 3.0 * std::sqrt(draws / 4.0));
}

TEST(Backward, TerminatesWithSmallBoundOnCorpus) {
  for (const auto& entry : gt::corpus()) {
    const auto s = sample_stationary_backward(entry.net, 1e-12, 31);
    EXPECT_LT(s.error_bound, 1e-12) << entry.name;
    for (NodeId v : entry.net.stubborn_agents()) EXPECT_EQ(s.beliefs[v], entry.net.belief(v));
    for (double x : s.beliefs) {
      EXPECT_GE(x, entry.net.min_belief() - 1e-12);
      EXPECT_LE(x, entry.net.max_belief() + 1e-12);
    }
  }
}

TEST(Backward, EventCapIsReported) {
  BackwardOptions capped;
  capped.event_cap = 3;
  EXPECT_EQ(code_of([&] { sample_stationary_backward(gt::canonical(line(20), 0.5), 1e-12, 1, capped); }),
            ErrorCode::kSimulateEventCap);
}

TEST(Voter, LineSevenTakesStubbornValues) {
  const auto net = gt::canonical(line(7), 1.0, {-1.0, 3.0});
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = voter_dual_sample(net, seed);
    for (double x : s.beliefs) EXPECT_TRUE(x == -1.0 || x == 3.0);
  }
}

TEST(Voter, RequiresUnitTrust) {
  EXPECT_EQ(code_of([&] { voter_dual_sample(gt::single_agent(0.5), 1); }), ErrorCode::kSimulateTrustNotOne);
}

TEST(Voter, WalksFromOneNodeCoalesce) {
  const auto net = gt::canonical(line(9), 1.0);
  const CoalescingWalks walks(net);
  CounterRng rng(4);
  for (int i = 0; i < 100; ++i) {
    const std::vector<NodeId> starts{4, 4, 0, 8};
    const auto out = walks.run(starts, rng);
    EXPECT_EQ(out[0], out[1]);
    EXPECT_EQ(out[2], 0u);
    EXPECT_EQ(out[3], 8u);
  }
}

TEST(Voter, MeansMatchHittingWeights) {
  const auto net = gt::canonical(line(5), 1.0);
  const auto exact = expected_beliefs(net).mean;
  const int draws = 20000;
  std::vector<double> sum(net.size(), 0.0);
  for (int i = 0; i < draws; ++i) {
    const auto s = voter_dual_sample(net, derive_seed(55, static_cast<std::uint64_t>(i)));
    for (NodeId v = 0; v < net.size(); ++v) sum[v] += s.beliefs[v];
  }
  const double z = gt::family_z(net.regular_agents().size());
  for (NodeId a : net.regular_agents()) {
    const double p = exact[a];
    const double se = std::sqrt(p * (1.0 - p) / draws);
    EXPECT_LT(gt::z_score(sum[a] / draws, p, se), z) << a;
  }
}
