#include "gossipfield/network_io.hpp"

#include "gossipfield/error.hpp"

namespace gossipfield {

namespace {

using nlohmann::json;

std::string node_name(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return value.dump();
  throw Error(ErrorCode::kNetworkMalformed, "node identifiers must be strings or integers, got " + value.dump());
}

double number(const json& object, const char* key) {
  const auto it = object.find(key);
  if (it == object.end() || !it->is_number()) {
    throw Error(ErrorCode::kNetworkMalformed, std::string("expected a number for '") + key + "' in " + object.dump());
  }
  return it->get<double>();
}

/// Names in order of first appearance. When the spec lists "nodes" the table
/// is closed and unknown names are errors.
class SymbolTable {
 public:
  explicit SymbolTable(const json& spec) {
    if (!spec.contains("nodes")) return;
    if (!spec["nodes"].is_array()) throw Error(ErrorCode::kNetworkMalformed, "'nodes' must be an array");
    for (const auto& v : spec["nodes"]) {
      const std::string name = node_name(v);
      if (ids_.count(name) != 0) throw Error(ErrorCode::kNetworkMalformed, "duplicate node '" + name + "'");
      insert(name);
    }
    closed_ = true;
  }

  NodeId operator()(const std::string& name) {
    const auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    if (closed_) throw Error(ErrorCode::kNetworkMalformed, "node '" + name + "' is not listed in 'nodes'");
    return insert(name);
  }
  NodeId operator()(const json& value) { return (*this)(node_name(value)); }

  std::vector<std::string>& names() { return names_; }

 private:
  NodeId insert(const std::string& name) {
    const auto id = static_cast<NodeId>(names_.size());
    ids_.emplace(name, id);
    names_.push_back(name);
    return id;
  }

  std::vector<std::string> names_;
  std::map<std::string, NodeId, std::less<>> ids_;
  bool closed_ = false;
};

const json& stubborn_map(const json& spec) {
  const auto it = spec.find("stubborn");
  if (it == spec.end() || !it->is_object()) {
    throw Error(ErrorCode::kNetworkMalformed, "'stubborn' must be an object mapping node to belief");
  }
  for (const auto& [name, belief] : it->items()) {
    if (!belief.is_number()) throw Error(ErrorCode::kNetworkMalformed, "belief of '" + name + "' is not a number");
  }
  return *it;
}

SocialNetwork canonical_from_json(const json& spec) {
  const json& list = spec["undirected_edges"];
  if (!list.is_array()) throw Error(ErrorCode::kNetworkMalformed, "'undirected_edges' must be an array of pairs");
  SymbolTable symbols(spec);
  std::vector<UndirectedEdge> edges;
  for (const auto& pair : list) {
    if (!pair.is_array() || pair.size() != 2) {
      throw Error(ErrorCode::kNetworkMalformed, "undirected edge must be a pair, got " + pair.dump());
    }
    const NodeId u = symbols(pair[0]);
    const NodeId v = symbols(pair[1]);
    if (u == v) throw Error(ErrorCode::kNetworkMalformed, "undirected edge " + pair.dump() + " is a self-loop");
    edges.emplace_back(u, v);
  }
  std::vector<NodeId> stubborn;
  std::vector<double> beliefs;
  for (const auto& [name, belief] : stubborn_map(spec).items()) {
    stubborn.push_back(symbols(name));
    beliefs.push_back(belief.get<double>());
  }
  const double trust = spec.contains("trust") ? number(spec, "trust") : 1.0;

  auto& names = symbols.names();
  const auto graph = UndirectedGraph::from_edges(names.size(), std::move(edges));
  if (graph.build_stats().parallel_edges_collapsed > 0) {
    throw Error(ErrorCode::kNetworkMalformed, "'undirected_edges' lists an edge twice");
  }
  return build_canonical(graph, stubborn, beliefs, trust, std::move(names));
}

}  // namespace

SocialNetwork network_from_json(const json& spec) {
  if (!spec.is_object()) throw Error(ErrorCode::kNetworkMalformed, "network spec must be a JSON object");
  if (spec.contains("undirected_edges")) {
    if (spec.contains("edges")) {
      throw Error(ErrorCode::kNetworkMalformed, "give either 'edges' or 'undirected_edges', not both");
    }
    return canonical_from_json(spec);
  }
  const auto edges = spec.find("edges");
  if (edges == spec.end() || !edges->is_array()) {
    throw Error(ErrorCode::kNetworkMalformed, "network spec needs an 'edges' or 'undirected_edges' array");
  }
  SymbolTable symbols(spec);
  std::vector<DirectedEdge> parsed;
  for (const auto& e : *edges) {
    if (!e.is_object() || !e.contains("from") || !e.contains("to")) {
      throw Error(ErrorCode::kNetworkMalformed, "edge needs 'from' and 'to': " + e.dump());
    }
    const double trust = e.contains("trust") ? number(e, "trust") : 1.0;
    parsed.push_back({symbols(e["from"]), symbols(e["to"]), number(e, "rate"), trust});
  }
  std::vector<std::pair<NodeId, double>> stubborn;
  for (const auto& [name, belief] : stubborn_map(spec).items()) stubborn.emplace_back(symbols(name), belief.get<double>());

  NetworkBuilder builder;
  for (const auto& name : symbols.names()) builder.add_node(name);
  for (const auto& [s, x] : stubborn) builder.set_stubborn(s, x);
  for (const auto& e : parsed) builder.add_edge(e.from, e.to, e.rate, e.trust);
  return builder.build();
}

nlohmann::json network_to_json(const SocialNetwork& net) {
  json out;
  out["nodes"] = json::array();
  for (NodeId v = 0; v < net.size(); ++v) out["nodes"].push_back(net.name(v));
  out["stubborn"] = json::object();
  for (NodeId s : net.stubborn_agents()) out["stubborn"][net.name(s)] = net.belief(s);
  out["edges"] = json::array();
  for (const auto& e : net.edges()) {
    out["edges"].push_back({{"from", net.name(e.from)}, {"to", net.name(e.to)}, {"rate", e.rate}, {"trust", e.trust}});
  }
  return out;
}

}  // namespace gossipfield
