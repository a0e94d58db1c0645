#include <gtest/gtest.h>

#include <cmath>

#include "gossipfield/error.hpp"
#include "gossipfield/moments.hpp"
#include "gossipfield/oracles.hpp"
#include "test_support.hpp"

using namespace gossipfield;
namespace gt = gossipfield::testing;

namespace {

GraphRecipe make(GraphFamily family, std::size_t n, std::uint64_t seed = 0) {
  GraphRecipe r;
  r.family = family;
  r.n = n;
  r.seed = seed;
  return r;
}

SocialNetwork torus(std::size_t m, std::size_t d, NodeId s0, NodeId s1, const std::vector<LatticePoint>& gens = {}) {
  auto r = make(GraphFamily::kCayleyTorus, 0);
  r.m = m;
  r.d = d;
  r.generating_set = gens;
  r.placement.strategy = PlacementStrategy::kExplicit;
  r.placement.ids = {s0, s1};
  return gt::canonical(r, 1.0);
}

// Column of gamma for stubborn node s.
Eigen::VectorXd absorbed_at(const SocialNetwork& net, NodeId s) {
  return hitting_gamma(net).gamma.col(static_cast<Eigen::Index>(net.stubborn_index(s)));
}

}  // namespace

TEST(TreeOracle, LineFive) {
  const auto net = gt::canonical(make(GraphFamily::kLine, 5), 1.0);
  const auto o = tree_oracle(net, 0, 4);
  for (NodeId v = 0; v < 5; ++v) EXPECT_NEAR(o.mean[v], v / 4.0, 1e-15);
  ASSERT_TRUE(o.variance.has_value());
  EXPECT_NEAR((*o.variance)[2], 0.25, 1e-15);
  EXPECT_NEAR((*o.variance)[1], 3.0 / 16.0, 1e-15);
}

TEST(TreeOracle, Stars) {
  const auto star = UndirectedGraph::from_edges(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
  const std::vector<NodeId> center{0, 1};
  const std::vector<double> xc{0.3, 0.9};
  const auto o = tree_oracle(build_canonical(star, center, xc, 0.5), 0, 1);
  for (NodeId v = 2; v < 6; ++v) EXPECT_NEAR(o.mean[v], 0.3, 1e-15);
  EXPECT_FALSE(o.variance.has_value());

  const std::vector<NodeId> leaves{1, 2};
  const std::vector<double> xl{0.2, 1.0};
  const auto net = build_canonical(star, leaves, xl, 1.0);
  const auto l = tree_oracle(net, 1, 2);
  for (NodeId v : {0u, 3u, 4u, 5u}) EXPECT_NEAR(l.mean[v], 0.6, 1e-15);
  EXPECT_LT((l.mean - expected_beliefs(net).mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TreeOracle, RandomTreeMatchesSolver) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto r = make(GraphFamily::kTree, 50, seed);
    const auto net = gt::canonical(r, 1.0, {-1.0, 2.0});
    const auto s = net.stubborn_agents();
    const auto o = tree_oracle(net, s[0], s[1]);
    const auto sol = second_moments(net);
    EXPECT_LT((o.mean - sol.mean).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((*o.variance - sol.variance).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(TreeOracle, RejectsNonTrees) {
  auto r = make(GraphFamily::kBarbell, 6);
  const auto net = gt::canonical(r, 1.0);
  const auto s = net.stubborn_agents();
  EXPECT_THROW(tree_oracle(net, s[0], s[1]), Error);
  const auto line = gt::canonical(make(GraphFamily::kLine, 5), 1.0);
  EXPECT_THROW(tree_oracle(line, 0, 2), Error);
}

TEST(BarbellOracle, TwelveNodes) {
  const auto m = barbell_oracle(12, 1.0, 0.0, 0, 11);
  EXPECT_NEAR(m[5], 16.0 / 20.0, 1e-15);
  EXPECT_NEAR(m[2], 18.0 / 20.0, 1e-15);
  EXPECT_NEAR(m[6], 4.0 / 20.0, 1e-15);

  auto r = make(GraphFamily::kBarbell, 12);
  r.placement.strategy = PlacementStrategy::kExplicit;
  r.placement.ids = {0, 11};
  const auto net = gt::canonical(r, 0.4, {1.0, 0.0});
  EXPECT_LT((m - expected_beliefs(net).mean).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(BarbellOracle, ConstantAndPolarization) {
  const auto c = barbell_oracle(10, 0.7, 0.7);
  EXPECT_LT((c.array() - 0.7).abs().maxCoeff(), 1e-15);
  for (std::size_t n : {6u, 12u, 40u, 100u}) {
    const auto m = barbell_oracle(n, 0.0, 1.0);
    for (NodeId a = 1; a < n / 2; ++a) EXPECT_LE(std::abs(m[a]), 8.0 / (n + 8.0) + 1e-15) << n;
  }
  EXPECT_THROW(barbell_oracle(7, 0.0, 1.0), Error);
}

TEST(BarbellOracle, OtherPlacementsMatchSolver) {
  auto r = make(GraphFamily::kBarbell, 14);
  r.placement.strategy = PlacementStrategy::kExplicit;
  r.placement.ids = {3, 9};
  const auto net = gt::canonical(r, 1.0, {-2.0, 5.0});
  const auto m = barbell_oracle(14, -2.0, 5.0, 3, 9);
  EXPECT_LT((m - expected_beliefs(net).mean).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CayleyOracle, RingFive) {
  const auto gens = torus_generators(1);
  const auto o = cayley_oracle(5, 1, gens, 0, 2);
  EXPECT_NEAR(o.gamma_s1[2], 1.0, 1e-12);
  EXPECT_NEAR(o.gamma_s1[0], 0.0, 1e-12);
  EXPECT_NEAR(o.gamma_s1[1], 0.5, 1e-12);
  EXPECT_LT(o.max_imaginary, 1e-10);
  const auto gamma = absorbed_at(torus(5, 1, 0, 2), 2);
  for (NodeId a = 0; a < 5; ++a) EXPECT_NEAR(o.gamma_s1[a], gamma[a], 1e-10);
}

TEST(CayleyOracle, TorusFiveByFive) {
  const auto gens = torus_generators(2);
  const std::vector<long> p0{0, 0};
  const std::vector<long> p1{2, 2};
  const NodeId s0 = lattice_index(p0, 5);
  const NodeId s1 = lattice_index(p1, 5);
  const auto o = cayley_oracle(5, 2, gens, s0, s1);
  const auto gamma = absorbed_at(torus(5, 2, s0, s1), s1);
  for (NodeId a = 0; a < 25; ++a) EXPECT_NEAR(o.gamma_s1[a], gamma[a], 1e-8) << a;
  EXPECT_LT(o.hitting_time_gap, 1e-9);
  // (1, 1) is the midpoint of s0 and s1.
  const std::vector<long> mid{1, 1};
  EXPECT_NEAR(o.gamma_s1[lattice_index(mid, 5)], 0.5, 1e-10);
}

TEST(CayleyOracle, NonStandardGeneratingSet) {
  const std::vector<LatticePoint> gens{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}};
  const auto o = cayley_oracle(4, 2, gens, 0, 6);
  const auto gamma = absorbed_at(torus(4, 2, 0, 6, gens), 6);
  for (NodeId a = 0; a < 16; ++a) EXPECT_NEAR(o.gamma_s1[a], gamma[a], 1e-8) << a;
}

TEST(CayleyOracle, RejectsBadGeneratingSets) {
  const std::vector<LatticePoint> half{{1}};
  EXPECT_THROW(cayley_oracle(5, 1, half, 0, 2), Error);
  const std::vector<LatticePoint> coset{{2}, {-2}};
  EXPECT_THROW(cayley_oracle(6, 1, coset, 0, 2), Error);
  EXPECT_THROW(cayley_oracle(5, 1, torus_generators(1), 2, 2), Error);
}
