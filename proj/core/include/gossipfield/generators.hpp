#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "gossipfield/graph.hpp"

namespace gossipfield {

enum class GraphFamily {
  kLine,
  kStar,
  kTree,
  kBarbell,
  kCayleyTorus,
  kErdosRenyi,
  kConfigModel,
  kPreferentialAttachment,
  kNewmanWatts,
};

std::string_view family_name(GraphFamily family) noexcept;
GraphFamily parse_family(std::string_view name);
/// Families whose graph is drawn at random.
bool is_random(GraphFamily family) noexcept;

enum class PlacementStrategy { kExplicit, kUniform, kExtremes, kCenter };

struct StubbornPlacement {
  PlacementStrategy strategy = PlacementStrategy::kExtremes;
  std::vector<NodeId> ids;  ///< kExplicit
  std::size_t count = 2;    ///< kUniform
};

using LatticePoint = std::vector<long>;

struct GraphRecipe {
  GraphFamily family = GraphFamily::kLine;
  std::size_t n = 0;  ///< node count (all families but cayley_torus, where it is optional)
  std::size_t m = 0;  ///< torus side length; preferential-attachment edges per new node
  std::size_t d = 1;  ///< torus dimension
  double p = 0.0;     ///< Erdos-Renyi edge probability; Newman-Watts shortcut density
  std::size_t k = 1;  ///< Newman-Watts ring reach
  /// Configuration model: (degree, probability) pairs.
  std::vector<std::pair<std::size_t, double>> degree_distribution;
  /// Cayley torus generating set; empty means {+-e_1, ..., +-e_d}.
  std::vector<LatticePoint> generating_set;
  StubbornPlacement placement;
  std::uint64_t seed = 0;
  std::size_t retry_budget = 100;
};

struct GeneratedGraph {
  UndirectedGraph graph;
  std::vector<NodeId> stubborn;  ///< sorted
  std::size_t attempts = 1;      ///< samples drawn until connected
  std::size_t shortcuts = 0;     ///< Newman-Watts: Poisson draw of the accepted sample
  std::vector<std::size_t> target_degrees;  ///< configuration model: degree sequence drawn
};

/// Deterministic in (recipe, seed). Random families redraw until connected;
/// attempt i (0-based) uses stream derive_seed(seed, i). Stubborn placement
/// uses its own stream, so changing the strategy leaves the graph unchanged.
GeneratedGraph generate(const GraphRecipe& recipe);
/// True when the recipe's output depends on its seed.
bool uses_seed(const GraphRecipe& recipe) noexcept;

std::vector<NodeId> place_stubborn(const UndirectedGraph& graph, const StubbornPlacement& placement,
                                   std::uint64_t seed);

/// Cayley graph of Z_m^d; node id of (k_1..k_d) is sum_i k_i m^(i-1).
UndirectedGraph cayley_graph(std::size_t m, std::size_t d, std::span<const LatticePoint> generating_set);
std::vector<LatticePoint> torus_generators(std::size_t d);
NodeId lattice_index(std::span<const long> point, std::size_t m);
LatticePoint lattice_point(NodeId id, std::size_t m, std::size_t d);
/// Throws unless the set is symmetric, free of 0 and duplicates mod m, and generates Z_m^d.
void check_generating_set(std::size_t m, std::size_t d, std::span<const LatticePoint> generating_set);

/// JSON recipe: {"family": "...", "n", "m", "d", "p" or "c" (p = c log n / n),
/// "k", "degrees": {"3": 0.5, ...}, "generators": [[..], ..], "seed",
/// "stubborn": {"strategy": "explicit|uniform|extremes|center", "ids", "count"}}.
GraphRecipe recipe_from_json(const nlohmann::json& spec);

}  // namespace gossipfield
