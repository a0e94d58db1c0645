#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gossipfield/error.hpp"
#include "gossipfield/generators.hpp"

using namespace gossipfield;
using nlohmann::json;

namespace {

GraphRecipe recipe(GraphFamily family, std::size_t n, std::uint64_t seed = 0) {
  GraphRecipe r;
  r.family = family;
  r.n = n;
  r.seed = seed;
  return r;
}

ErrorCode code_of(const GraphRecipe& r) {
  try {
    generate(r);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Generators, Barbell12) {
  const auto g = generate(recipe(GraphFamily::kBarbell, 12)).graph;
  EXPECT_EQ(g.num_edges(), 2u * 15u + 1u);
  EXPECT_TRUE(g.has_edge(5, 6));
  for (NodeId u = 0; u < 6; ++u) {
    for (NodeId v = u + 1; v < 6; ++v) {
      EXPECT_TRUE(g.has_edge(u, v));
      EXPECT_TRUE(g.has_edge(u + 6, v + 6));
    }
  }
  EXPECT_EQ(g.degree(5), 6u);
  EXPECT_EQ(g.degree(0), 5u);
}

TEST(Generators, Torus5x5) {
  auto r = recipe(GraphFamily::kCayleyTorus, 0);
  r.m = 5;
  r.d = 2;
  const auto g = generate(r).graph;
  EXPECT_EQ(g.num_nodes(), 25u);
  for (NodeId v = 0; v < 25; ++v) EXPECT_EQ(g.degree(v), 4u);
  const std::vector<long> p{4, 3};
  EXPECT_EQ(lattice_index(p, 5), 19u);
  EXPECT_EQ(lattice_point(19, 5, 2), (LatticePoint{4, 3}));
}

TEST(Generators, ErdosRenyiDegreeBand) {
  const std::size_t n = 500;
  const double c = 2.0;
  auto r = recipe(GraphFamily::kErdosRenyi, n, 7);
  r.p = c * std::log(static_cast<double>(n)) / static_cast<double>(n);
  const auto g = generate(r).graph;
  EXPECT_TRUE(g.is_connected());
  // Band delta c log n <= d_v <= 4 c log n with a loose delta = 1/8.
  const double log_n = std::log(static_cast<double>(n));
  for (NodeId v = 0; v < n; ++v) {
    EXPECT_GE(static_cast<double>(g.degree(v)), c * log_n / 8.0);
    EXPECT_LE(static_cast<double>(g.degree(v)), 4.0 * c * log_n);
  }
}

TEST(Generators, PlacementDoesNotPerturbGraph) {
  auto r = recipe(GraphFamily::kErdosRenyi, 80, 5);
  r.p = 0.1;
  r.placement.strategy = PlacementStrategy::kExtremes;
  const auto a = generate(r);
  r.placement.strategy = PlacementStrategy::kUniform;
  r.placement.count = 3;
  const auto b = generate(r);
  EXPECT_EQ(a.graph.to_edge_list(), b.graph.to_edge_list());
  EXPECT_EQ(b.stubborn.size(), 3u);
}

TEST(Generators, Placements) {
  const auto line = generate(recipe(GraphFamily::kLine, 5)).graph;
  EXPECT_EQ(place_stubborn(line, {PlacementStrategy::kExtremes, {}, 2}, 0), (std::vector<NodeId>{0, 4}));
  const auto star = generate(recipe(GraphFamily::kStar, 6)).graph;
  EXPECT_EQ(place_stubborn(star, {PlacementStrategy::kCenter, {}, 1}, 0), std::vector<NodeId>{0});
  EXPECT_EQ(place_stubborn(star, {PlacementStrategy::kExplicit, {3}, 1}, 0), std::vector<NodeId>{3});

  auto er = recipe(GraphFamily::kErdosRenyi, 2000, 9);
  er.p = 2.0 * std::log(2000.0) / 2000.0;
  const auto g = generate(er).graph;
  const StubbornPlacement uniform{PlacementStrategy::kUniform, {}, 2};
  EXPECT_EQ(place_stubborn(g, uniform, 123), place_stubborn(g, uniform, 123));
  EXPECT_EQ(place_stubborn(g, uniform, 123).size(), 2u);

  auto fails = [&](StubbornPlacement p) {
    try {
      place_stubborn(line, p, 0);
    } catch (const Error& e) {
      return e.code() == ErrorCode::kGeneratorInvalidPlacement;
    }
    return false;
  };
  EXPECT_TRUE(fails({PlacementStrategy::kExplicit, {1, 1}, 0}));
  EXPECT_TRUE(fails({PlacementStrategy::kExplicit, {7}, 0}));
  EXPECT_TRUE(fails({PlacementStrategy::kUniform, {}, 5}));
  EXPECT_TRUE(fails({PlacementStrategy::kExplicit, {0, 1, 2, 3, 4}, 0}));
}

TEST(Generators, RecipeJson) {
  const auto r = recipe_from_json(json::parse(
      R"({"family": "erdos_renyi", "n": 100, "c": 2, "seed": 4, "stubborn": {"strategy": "uniform", "count": 3}})"));
  EXPECT_EQ(r.family, GraphFamily::kErdosRenyi);
  EXPECT_NEAR(r.p, 2.0 * std::log(100.0) / 100.0, 1e-15);
  EXPECT_EQ(r.placement.strategy, PlacementStrategy::kUniform);
  EXPECT_EQ(r.placement.count, 3u);
  EXPECT_TRUE(uses_seed(r));

  const auto c = recipe_from_json(json::parse(R"({"family": "config_model", "n": 50, "degrees": {"3": 0.5, "4": 0.5}})"));
  ASSERT_EQ(c.degree_distribution.size(), 2u);
  EXPECT_EQ(c.degree_distribution[0].first, 3u);

  const auto line = recipe_from_json(json::parse(R"({"family": "line", "n": 5})"));
  EXPECT_FALSE(uses_seed(line));
  EXPECT_EQ(line.placement.strategy, PlacementStrategy::kExtremes);

  EXPECT_THROW(recipe_from_json(json::parse(R"({"family": "hypercube", "n": 5})")), Error);
  EXPECT_THROW(recipe_from_json(json::parse(R"({"family": "erdos_renyi", "n": 5, "p": 0.1, "c": 1})")), Error);
}

TEST(Generators, InvalidRecipes) {
  EXPECT_EQ(code_of(recipe(GraphFamily::kBarbell, 7)), ErrorCode::kGeneratorInvalidRecipe);
  EXPECT_EQ(code_of(recipe(GraphFamily::kLine, 1)), ErrorCode::kGeneratorInvalidRecipe);
  auto torus = recipe(GraphFamily::kCayleyTorus, 24);
  torus.m = 5;
  torus.d = 2;
  EXPECT_EQ(code_of(torus), ErrorCode::kGeneratorInvalidRecipe);
  auto sparse = recipe(GraphFamily::kErdosRenyi, 200, 1);
  sparse.p = 0.001;
  sparse.retry_budget = 5;
  EXPECT_EQ(code_of(sparse), ErrorCode::kGeneratorNotConnected);
}

TEST(Generators, GeneratingSetChecks) {
  EXPECT_NO_THROW(check_generating_set(5, 2, torus_generators(2)));
  const std::vector<LatticePoint> one_sided{{1}};
  EXPECT_THROW(check_generating_set(5, 1, one_sided), Error);
  const std::vector<LatticePoint> even{{2}, {-2}};
  EXPECT_THROW(check_generating_set(6, 1, even), Error);
  const std::vector<LatticePoint> knight{{1}, {-1}, {2}, {-2}};
  const auto g = cayley_graph(7, 1, knight);
  for (NodeId v = 0; v < 7; ++v) EXPECT_EQ(g.degree(v), 4u);
}
