#include "gossipfield/generators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>

#include "gossipfield/error.hpp"
#include "gossipfield/rng.hpp"

namespace gossipfield {

namespace {

constexpr std::uint64_t kPlacementStream = 0x5354'5542'424FULL;

constexpr std::array<std::pair<GraphFamily, std::string_view>, 9> kFamilyNames{{
    {GraphFamily::kLine, "line"},
    {GraphFamily::kStar, "star"},
    {GraphFamily::kTree, "tree"},
    {GraphFamily::kBarbell, "barbell"},
    {GraphFamily::kCayleyTorus, "cayley_torus"},
    {GraphFamily::kErdosRenyi, "erdos_renyi"},
    {GraphFamily::kConfigModel, "config_model"},
    {GraphFamily::kPreferentialAttachment, "preferential_attachment"},
    {GraphFamily::kNewmanWatts, "newman_watts"},
}};

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::kGeneratorInvalidRecipe, message); }

void require_nodes(const GraphRecipe& r, std::size_t minimum) {
  if (r.n < minimum) {
    invalid(std::string(family_name(r.family)) + " needs n >= " + std::to_string(minimum) + ", got " + std::to_string(r.n));
  }
}

UndirectedGraph line(std::size_t n) {
  std::vector<UndirectedEdge> edges;
  for (NodeId v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
  return UndirectedGraph::from_edges(n, std::move(edges));
}

UndirectedGraph star(std::size_t n) {
  std::vector<UndirectedEdge> edges;
  for (NodeId v = 1; v < n; ++v) edges.emplace_back(0, v);
  return UndirectedGraph::from_edges(n, std::move(edges));
}

// Uniform labelled tree decoded from a random Pruefer sequence.
UndirectedGraph random_tree(std::size_t n, CounterRng& rng) {
  if (n == 2) return line(2);
  std::vector<NodeId> code(n - 2);
  for (auto& c : code) c = static_cast<NodeId>(rng.below(n));
  std::vector<std::size_t> degree(n, 1);
  for (NodeId c : code) ++degree[c];
  std::set<NodeId> leaves;
  for (NodeId v = 0; v < n; ++v) {
    if (degree[v] == 1) leaves.insert(v);
  }
  std::vector<UndirectedEdge> edges;
  for (NodeId c : code) {
    const NodeId leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    edges.emplace_back(leaf, c);
    if (--degree[c] == 1) leaves.insert(c);
  }
  const NodeId u = *leaves.begin();
  const NodeId v = *std::next(leaves.begin());
  edges.emplace_back(u, v);
  return UndirectedGraph::from_edges(n, std::move(edges));
}

// Cliques on {0..h-1} and {h..n-1} joined by the bridge {h-1, h}.
UndirectedGraph barbell(std::size_t n) {
  const auto h = static_cast<NodeId>(n / 2);
  std::vector<UndirectedEdge> edges;
  for (NodeId base : {NodeId{0}, h}) {
    for (NodeId u = base; u < base + h; ++u) {
      for (NodeId v = u + 1; v < base + h; ++v) edges.emplace_back(u, v);
    }
  }
  edges.emplace_back(h - 1, h);
  return UndirectedGraph::from_edges(n, std::move(edges));
}

UndirectedGraph erdos_renyi(std::size_t n, double p, CounterRng& rng) {
  std::vector<UndirectedEdge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (rng.uniform() < p) edges.emplace_back(u, v);
    }
  }
  return UndirectedGraph::from_edges(n, std::move(edges));
}

UndirectedGraph configuration_model(const GraphRecipe& r, CounterRng& rng, std::vector<std::size_t>& degrees) {
  std::vector<double> weights;
  for (const auto& [deg, prob] : r.degree_distribution) weights.push_back(prob);
  const AliasTable table(weights);
  constexpr int kMaxRedraws = 1000;
  for (int redraw = 0;; ++redraw) {
    if (redraw == kMaxRedraws) invalid("could not draw a degree sequence with even sum");
    degrees.assign(r.n, 0);
    std::size_t total = 0;
    for (auto& deg : degrees) {
      deg = r.degree_distribution[table.sample(rng)].first;
      total += deg;
    }
    if (total % 2 == 0) break;
  }
  std::vector<NodeId> stubs;
  for (NodeId v = 0; v < r.n; ++v) stubs.insert(stubs.end(), degrees[v], v);
  shuffle(stubs, rng);
  std::vector<UndirectedEdge> edges;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) edges.emplace_back(stubs[i], stubs[i + 1]);
  return UndirectedGraph::from_edges(r.n, std::move(edges));
}

// Two seed vertices joined by m parallel edges; each later vertex attaches m
// edges to endpoints drawn in proportion to the degrees before its arrival.
UndirectedGraph preferential_attachment(std::size_t n, std::size_t m, CounterRng& rng) {
  std::vector<UndirectedEdge> edges;
  std::vector<NodeId> stubs;
  for (std::size_t i = 0; i < m; ++i) {
    edges.emplace_back(0, 1);
    stubs.push_back(0);
    stubs.push_back(1);
  }
  std::vector<NodeId> targets(m);
  for (NodeId v = 2; v < n; ++v) {
    for (auto& t : targets) t = stubs[rng.below(stubs.size())];
    for (NodeId t : targets) {
      edges.emplace_back(v, t);
      stubs.push_back(v);
      stubs.push_back(t);
    }
  }
  return UndirectedGraph::from_edges(n, std::move(edges));
}

UndirectedGraph newman_watts(std::size_t n, std::size_t k, double p, CounterRng& rng, std::size_t& shortcuts) {
  std::vector<UndirectedEdge> edges;
  for (NodeId v = 0; v < n; ++v) {
    for (std::size_t j = 1; j <= k; ++j) edges.emplace_back(v, static_cast<NodeId>((v + j) % n));
  }
  shortcuts = static_cast<std::size_t>(rng.poisson(p * static_cast<double>(k) * static_cast<double>(n)));
  for (std::size_t i = 0; i < shortcuts; ++i) {
    const auto u = static_cast<NodeId>(rng.below(n));
    const auto v = static_cast<NodeId>(rng.below(n));
    edges.emplace_back(u, v);
  }
  return UndirectedGraph::from_edges(n, std::move(edges));
}

std::size_t power(std::size_t m, std::size_t d) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (n > (std::size_t{1} << 40) / std::max<std::size_t>(m, 1)) invalid("torus too large");
    n *= m;
  }
  return n;
}

LatticePoint reduce(const LatticePoint& x, std::size_t m) {
  LatticePoint out(x.size());
  const auto mod = static_cast<long>(m);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = ((x[i] % mod) + mod) % mod;
  return out;
}

void validate(const GraphRecipe& r) {
  switch (r.family) {
    case GraphFamily::kLine:
    case GraphFamily::kStar:
    case GraphFamily::kTree:
      require_nodes(r, 2);
      break;
    case GraphFamily::kBarbell:
      if (r.n < 6 || r.n % 2 != 0) invalid("barbell needs even n >= 6, got " + std::to_string(r.n));
      break;
    case GraphFamily::kCayleyTorus:
      if (r.m < 2 || r.d < 1) invalid("cayley_torus needs m >= 2 and d >= 1");
      if (r.n != 0 && r.n != power(r.m, r.d)) invalid("cayley_torus needs n = m^d");
      break;
    case GraphFamily::kErdosRenyi:
      require_nodes(r, 2);
      if (!(r.p > 0.0 && r.p <= 1.0)) invalid("erdos_renyi needs p in (0, 1]");
      break;
    case GraphFamily::kConfigModel:
      require_nodes(r, 2);
      if (r.degree_distribution.empty()) invalid("config_model needs a degree distribution");
      for (const auto& [deg, prob] : r.degree_distribution) {
        if (deg == 0 || deg >= r.n) invalid("config_model degrees must lie in [1, n)");
        if (!(prob >= 0.0) || !std::isfinite(prob)) invalid("config_model probabilities must be non-negative");
      }
      break;
    case GraphFamily::kPreferentialAttachment:
      require_nodes(r, 2);
      if (r.m < 1) invalid("preferential_attachment needs m >= 1");
      break;
    case GraphFamily::kNewmanWatts:
      if (r.k < 1 || r.n < 2 * r.k + 2) invalid("newman_watts needs k >= 1 and n >= 2k + 2");
      if (!(r.p >= 0.0) || !std::isfinite(r.p)) invalid("newman_watts needs p >= 0");
      break;
  }
}

// Farthest node from `source`, smallest id on ties.
NodeId farthest(const UndirectedGraph& g, NodeId source) {
  const auto dist = g.bfs_distances(source);
  NodeId best = source;
  for (NodeId v = 0; v < dist.size(); ++v) {
    if (dist[v] != kUnreachable && dist[v] > dist[best]) best = v;
  }
  return best;
}

}  // namespace

std::string_view family_name(GraphFamily family) noexcept {
  for (const auto& [f, name] : kFamilyNames) {
    if (f == family) return name;
  }
  return "unknown";
}

GraphFamily parse_family(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames) {
    if (n == name) return f;
  }
  invalid("unknown graph family '" + std::string(name) + "'");
}

std::vector<LatticePoint> torus_generators(std::size_t d) {
  std::vector<LatticePoint> out;
  for (std::size_t i = 0; i < d; ++i) {
    for (long sign : {1L, -1L}) {
      LatticePoint e(d, 0);
      e[i] = sign;
      out.push_back(std::move(e));
    }
  }
  return out;
}

NodeId lattice_index(std::span<const long> point, std::size_t m) {
  std::size_t id = 0;
  const auto mod = static_cast<long>(m);
  for (std::size_t i = point.size(); i-- > 0;) id = id * m + static_cast<std::size_t>(((point[i] % mod) + mod) % mod);
  return static_cast<NodeId>(id);
}

LatticePoint lattice_point(NodeId id, std::size_t m, std::size_t d) {
  LatticePoint out(d);
  std::size_t rest = id;
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = static_cast<long>(rest % m);
    rest /= m;
  }
  return out;
}

void check_generating_set(std::size_t m, std::size_t d, std::span<const LatticePoint> generating_set) {
  if (m < 2 || d < 1) throw Error(ErrorCode::kOracleInvalidInput, "Cayley graph needs m >= 2 and d >= 1");
  std::set<LatticePoint> reduced;
  for (const auto& x : generating_set) {
    if (x.size() != d) throw Error(ErrorCode::kOracleInvalidInput, "generator has the wrong dimension");
    auto r = reduce(x, m);
    if (std::all_of(r.begin(), r.end(), [](long c) { return c == 0; })) {
      throw Error(ErrorCode::kOracleInvalidInput, "generating set contains 0");
    }
    if (!reduced.insert(r).second) throw Error(ErrorCode::kOracleInvalidInput, "generating set repeats an element mod m");
  }
  for (const auto& x : reduced) {
    LatticePoint neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    if (reduced.count(reduce(neg, m)) == 0) throw Error(ErrorCode::kOracleInvalidInput, "generating set is not symmetric");
  }
  const std::size_t n = power(m, d);
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const LatticePoint v = lattice_point(stack.back(), m, d);
    stack.pop_back();
    for (const auto& x : reduced) {
      LatticePoint w(d);
      for (std::size_t i = 0; i < d; ++i) w[i] = v[i] + x[i];
      const NodeId id = lattice_index(w, m);
      if (!seen[id]) {
        seen[id] = true;
        ++reached;
        stack.push_back(id);
      }
    }
  }
  if (reached != n) throw Error(ErrorCode::kOracleInvalidInput, "generating set does not generate Z_m^d");
}

UndirectedGraph cayley_graph(std::size_t m, std::size_t d, std::span<const LatticePoint> generating_set) {
  try {
    check_generating_set(m, d, generating_set);
  } catch (const Error& e) {
    invalid(e.what());
  }
  const std::size_t n = power(m, d);
  std::vector<UndirectedEdge> edges;
  for (NodeId v = 0; v < n; ++v) {
    const LatticePoint p = lattice_point(v, m, d);
    for (const auto& x : generating_set) {
      LatticePoint w(d);
      for (std::size_t i = 0; i < d; ++i) w[i] = p[i] + x[i];
      const NodeId id = lattice_index(w, m);
      if (v < id) edges.emplace_back(v, id);
    }
  }
  return UndirectedGraph::from_edges(n, std::move(edges));
}

std::vector<NodeId> place_stubborn(const UndirectedGraph& graph, const StubbornPlacement& placement,
                                   std::uint64_t seed) {
  const std::size_t n = graph.num_nodes();
  auto fail = [](const std::string& message) { throw Error(ErrorCode::kGeneratorInvalidPlacement, message); };
  std::vector<NodeId> out;
  switch (placement.strategy) {
    case PlacementStrategy::kExplicit: {
      out = placement.ids;
      if (out.empty()) fail("explicit placement lists no nodes");
      for (NodeId v : out) {
        if (v >= n) fail("stubborn node " + std::to_string(v) + " out of range");
      }
      std::sort(out.begin(), out.end());
      if (std::adjacent_find(out.begin(), out.end()) != out.end()) fail("stubborn node listed twice");
      break;
    }
    case PlacementStrategy::kUniform: {
      if (placement.count == 0) fail("uniform placement needs count >= 1");
      if (placement.count >= n) fail("uniform placement needs count < n");
      CounterRng rng(derive_seed(seed, kPlacementStream));
      std::vector<NodeId> ids(n);
      for (NodeId v = 0; v < n; ++v) ids[v] = v;
      for (std::size_t i = 0; i < placement.count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(ids[i], ids[j]);
      }
      out.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(placement.count));
      std::sort(out.begin(), out.end());
      break;
    }
    case PlacementStrategy::kExtremes: {
      if (n < 3) fail("extremes placement needs at least 3 nodes");
      const NodeId u = farthest(graph, 0);
      const NodeId w = farthest(graph, u);
      if (u == w) fail("extremes placement needs a connected graph with two distinct ends");
      out = {std::min(u, w), std::max(u, w)};
      break;
    }
    case PlacementStrategy::kCenter: {
      if (n < 2) fail("center placement needs at least 2 nodes");
      NodeId best = 0;
      for (NodeId v = 1; v < n; ++v) {
        if (graph.degree(v) > graph.degree(best)) best = v;
      }
      out = {best};
      break;
    }
  }
  if (out.size() >= n) fail("placement leaves no regular agents");
  return out;
}

GeneratedGraph generate(const GraphRecipe& recipe) {
  validate(recipe);
  GeneratedGraph result;
  const std::size_t attempts = is_random(recipe.family) ? std::max<std::size_t>(recipe.retry_budget, 1) : 1;
  bool connected = false;
  for (std::size_t attempt = 0; attempt < attempts && !connected; ++attempt) {
    CounterRng rng(derive_seed(recipe.seed, attempt));
    result.attempts = attempt + 1;
    switch (recipe.family) {
      case GraphFamily::kLine: result.graph = line(recipe.n); break;
      case GraphFamily::kStar: result.graph = star(recipe.n); break;
      case GraphFamily::kTree: result.graph = random_tree(recipe.n, rng); break;
      case GraphFamily::kBarbell: result.graph = barbell(recipe.n); break;
      case GraphFamily::kCayleyTorus: {
        const auto gens = recipe.generating_set.empty() ? torus_generators(recipe.d) : recipe.generating_set;
        result.graph = cayley_graph(recipe.m, recipe.d, gens);
        break;
      }
      case GraphFamily::kErdosRenyi: result.graph = erdos_renyi(recipe.n, recipe.p, rng); break;
      case GraphFamily::kConfigModel:
        result.graph = configuration_model(recipe, rng, result.target_degrees);
        break;
      case GraphFamily::kPreferentialAttachment:
        result.graph = preferential_attachment(recipe.n, recipe.m, rng);
        break;
      case GraphFamily::kNewmanWatts:
        result.graph = newman_watts(recipe.n, recipe.k, recipe.p, rng, result.shortcuts);
        break;
    }
    connected = result.graph.is_connected();
  }
  if (!connected) {
    throw Error(ErrorCode::kGeneratorNotConnected, std::string(family_name(recipe.family)) +
                                                       " sample still disconnected after " +
                                                       std::to_string(result.attempts) + " attempts");
  }
  result.stubborn = place_stubborn(result.graph, recipe.placement, recipe.seed);
  return result;
}

GraphRecipe recipe_from_json(const nlohmann::json& spec) {
  if (!spec.is_object()) invalid("recipe must be a JSON object");
  GraphRecipe r;
  if (!spec.contains("family") || !spec["family"].is_string()) invalid("recipe needs a 'family' string");
  r.family = parse_family(spec["family"].get<std::string>());
  auto count = [&](const char* key, std::size_t fallback) -> std::size_t {
    if (!spec.contains(key)) return fallback;
    if (!spec[key].is_number_unsigned() && !(spec[key].is_number_integer() && spec[key].get<long long>() >= 0)) {
      invalid(std::string("'") + key + "' must be a non-negative integer");
    }
    return spec[key].get<std::size_t>();
  };
  r.n = count("n", 0);
  r.m = count("m", 0);
  r.d = count("d", 1);
  r.k = count("k", 1);
  r.retry_budget = count("retry_budget", 100);
  if (r.family == GraphFamily::kCayleyTorus && r.n == 0 && r.m >= 2) r.n = power(r.m, r.d);
  if (spec.contains("p") && spec.contains("c")) invalid("give either 'p' or 'c', not both");
  if (spec.contains("p")) {
    if (!spec["p"].is_number()) invalid("'p' must be a number");
    r.p = spec["p"].get<double>();
  } else if (spec.contains("c")) {
    if (!spec["c"].is_number() || r.n < 2) invalid("'c' must be a number and n >= 2");
    const double n = static_cast<double>(r.n);
    r.p = spec["c"].get<double>() * std::log(n) / n;
  }
  if (spec.contains("degrees")) {
    if (!spec["degrees"].is_object()) invalid("'degrees' must map degree to probability");
    for (const auto& [deg, prob] : spec["degrees"].items()) {
      if (!prob.is_number()) invalid("degree probabilities must be numbers");
      std::size_t value = 0;
      try {
        value = std::stoul(deg);
      } catch (const std::exception&) {
        invalid("degree key '" + deg + "' is not an integer");
      }
      r.degree_distribution.emplace_back(value, prob.get<double>());
    }
    std::sort(r.degree_distribution.begin(), r.degree_distribution.end());
  }
  if (spec.contains("generators")) {
    r.generating_set = spec["generators"].get<std::vector<LatticePoint>>();
  }
  if (spec.contains("seed")) {
    if (!spec["seed"].is_number_integer()) invalid("'seed' must be an integer");
    r.seed = spec["seed"].get<std::uint64_t>();
  }
  if (spec.contains("stubborn")) {
    const auto& s = spec["stubborn"];
    if (!s.is_object() || !s.contains("strategy")) invalid("'stubborn' needs a 'strategy'");
    const auto strategy = s["strategy"].get<std::string>();
    if (strategy == "explicit") {
      r.placement.strategy = PlacementStrategy::kExplicit;
      r.placement.ids = s.value("ids", std::vector<NodeId>{});
    } else if (strategy == "uniform") {
      r.placement.strategy = PlacementStrategy::kUniform;
      r.placement.count = s.value("count", std::size_t{2});
    } else if (strategy == "extremes") {
      r.placement.strategy = PlacementStrategy::kExtremes;
    } else if (strategy == "center") {
      r.placement.strategy = PlacementStrategy::kCenter;
    } else {
      throw Error(ErrorCode::kGeneratorInvalidPlacement, "unknown placement strategy '" + strategy + "'");
    }
  }
  return r;
}

bool is_random(GraphFamily family) noexcept {
  return family == GraphFamily::kTree || family == GraphFamily::kErdosRenyi || family == GraphFamily::kConfigModel ||
         family == GraphFamily::kPreferentialAttachment || family == GraphFamily::kNewmanWatts;
}

bool uses_seed(const GraphRecipe& recipe) noexcept {
  return is_random(recipe.family) || recipe.placement.strategy == PlacementStrategy::kUniform;
}

}  // namespace gossipfield
