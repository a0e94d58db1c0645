#include "gossipfield/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <tuple>

#include "gossipfield/error.hpp"

namespace gossipfield {

struct SocialNetwork::Data {
  std::vector<std::string> names;
  std::map<std::string, NodeId, std::less<>> index;
  std::vector<bool> stubborn;
  std::vector<NodeId> regular_list;
  std::vector<NodeId> stubborn_list;
  std::vector<std::size_t> regular_pos;
  std::vector<std::size_t> stubborn_pos;
  std::vector<double> beliefs;  // aligned with stubborn_list
  double min_belief = 0.0;
  double max_belief = 0.0;
  double max_abs_belief = 0.0;

  std::vector<DirectedEdge> edges;
  std::vector<std::size_t> edge_offsets;
  std::vector<double> out_rate;
  double total_rate = 0.0;
  bool unit_trust = true;
  double min_trust = 1.0;

  std::vector<std::size_t> influence_offsets;
  std::vector<NodeId> influence;

  SparseMatrix q;
  SparseMatrix p;

  void set_belief_summary() {
    min_belief = *std::min_element(beliefs.begin(), beliefs.end());
    max_belief = *std::max_element(beliefs.begin(), beliefs.end());
    max_abs_belief = std::max(std::abs(min_belief), std::abs(max_belief));
  }
};

namespace {

void check_node(std::size_t n, NodeId v) {
  if (v >= n) {
    throw Error(ErrorCode::kInvalidArgument, "node id " + std::to_string(v) + " out of range (n = " + std::to_string(n) + ")");
  }
}

}  // namespace

std::size_t SocialNetwork::size() const noexcept { return data_->names.size(); }

const std::string& SocialNetwork::name(NodeId v) const {
  check_node(size(), v);
  return data_->names[v];
}

std::optional<NodeId> SocialNetwork::find(std::string_view name) const {
  const auto it = data_->index.find(name);
  if (it == data_->index.end()) return std::nullopt;
  return it->second;
}

NodeId SocialNetwork::id(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw Error(ErrorCode::kInvalidArgument, "unknown node '" + std::string(name) + "'");
}

bool SocialNetwork::is_stubborn(NodeId v) const {
  check_node(size(), v);
  return data_->stubborn[v];
}

std::span<const NodeId> SocialNetwork::regular_agents() const noexcept { return data_->regular_list; }
std::span<const NodeId> SocialNetwork::stubborn_agents() const noexcept { return data_->stubborn_list; }

std::size_t SocialNetwork::regular_index(NodeId v) const {
  check_node(size(), v);
  return data_->regular_pos[v];
}

std::size_t SocialNetwork::stubborn_index(NodeId v) const {
  check_node(size(), v);
  return data_->stubborn_pos[v];
}

double SocialNetwork::belief(NodeId s) const {
  const std::size_t i = stubborn_index(s);
  if (i == kNotIndexed) throw Error(ErrorCode::kInvalidArgument, "node '" + name(s) + "' is not stubborn");
  return data_->beliefs[i];
}

std::span<const double> SocialNetwork::stubborn_beliefs() const noexcept { return data_->beliefs; }
double SocialNetwork::min_belief() const noexcept { return data_->min_belief; }
double SocialNetwork::max_belief() const noexcept { return data_->max_belief; }
double SocialNetwork::max_abs_belief() const noexcept { return data_->max_abs_belief; }

std::span<const DirectedEdge> SocialNetwork::edges() const noexcept { return data_->edges; }

std::span<const DirectedEdge> SocialNetwork::out_edges(NodeId v) const {
  check_node(size(), v);
  const auto& off = data_->edge_offsets;
  return {data_->edges.data() + off[v], off[v + 1] - off[v]};
}

double SocialNetwork::out_rate(NodeId v) const {
  check_node(size(), v);
  return data_->out_rate[v];
}

double SocialNetwork::total_rate() const noexcept { return data_->total_rate; }
bool SocialNetwork::unit_trust() const noexcept { return data_->unit_trust; }
double SocialNetwork::min_trust() const noexcept { return data_->min_trust; }

std::span<const NodeId> SocialNetwork::influence_set(NodeId v) const {
  check_node(size(), v);
  const auto& off = data_->influence_offsets;
  return {data_->influence.data() + off[v], off[v + 1] - off[v]};
}

const SparseMatrix& SocialNetwork::generator() const noexcept { return data_->q; }
const SparseMatrix& SocialNetwork::jump() const noexcept { return data_->p; }

SocialNetwork SocialNetwork::with_stubborn_beliefs(std::vector<double> beliefs) const {
  if (beliefs.size() != data_->stubborn_list.size()) {
    throw Error(ErrorCode::kInvalidArgument, "expected " + std::to_string(data_->stubborn_list.size()) +
                                                 " stubborn beliefs, got " + std::to_string(beliefs.size()));
  }
  for (double x : beliefs) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kNetworkMalformed, "stubborn beliefs must be finite");
  }
  auto copy = std::make_shared<Data>(*data_);
  copy->beliefs = std::move(beliefs);
  copy->set_belief_summary();
  return SocialNetwork(std::move(copy));
}

NodeId NetworkBuilder::add_node(std::string name) {
  if (index_.count(name) != 0) throw Error(ErrorCode::kNetworkMalformed, "duplicate node '" + name + "'");
  const auto id = static_cast<NodeId>(names_.size());
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  beliefs_.emplace_back();
  return id;
}

NodeId NetworkBuilder::node(std::string_view name) {
  const auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  return add_node(std::string(name));
}

NetworkBuilder& NetworkBuilder::set_stubborn(NodeId v, double belief) {
  check_node(names_.size(), v);
  if (!std::isfinite(belief)) {
    throw Error(ErrorCode::kNetworkMalformed, "belief of stubborn agent '" + names_[v] + "' is not finite");
  }
  beliefs_[v] = belief;
  return *this;
}

NetworkBuilder& NetworkBuilder::add_edge(NodeId from, NodeId to, double rate, double trust) {
  check_node(names_.size(), from);
  check_node(names_.size(), to);
  edges_.push_back({from, to, rate, trust});
  return *this;
}

SocialNetwork NetworkBuilder::build() const {
  const std::size_t n = names_.size();
  auto d = std::make_shared<SocialNetwork::Data>();
  d->names = names_;
  d->index = index_;
  d->stubborn.assign(n, false);
  d->regular_pos.assign(n, kNotIndexed);
  d->stubborn_pos.assign(n, kNotIndexed);
  for (NodeId v = 0; v < n; ++v) {
    if (beliefs_[v]) {
      d->stubborn[v] = true;
      d->stubborn_pos[v] = d->stubborn_list.size();
      d->stubborn_list.push_back(v);
      d->beliefs.push_back(*beliefs_[v]);
    } else {
      d->regular_pos[v] = d->regular_list.size();
      d->regular_list.push_back(v);
    }
  }
  if (d->regular_list.empty()) throw Error(ErrorCode::kNetworkMalformed, "network has no regular agents");
  if (d->stubborn_list.empty()) throw Error(ErrorCode::kNetworkUninfluenced, "network has no stubborn agents");
  d->set_belief_summary();

  d->edges = edges_;
  std::sort(d->edges.begin(), d->edges.end(),
            [](const DirectedEdge& a, const DirectedEdge& b) { return std::tie(a.from, a.to) < std::tie(b.from, b.to); });
  for (std::size_t i = 0; i < d->edges.size(); ++i) {
    const auto& e = d->edges[i];
    const std::string label = "edge (" + names_[e.from] + ", " + names_[e.to] + ")";
    if (e.from == e.to) throw Error(ErrorCode::kNetworkMalformed, label + " is a self-loop");
    if (d->stubborn[e.from]) throw Error(ErrorCode::kNetworkMalformed, label + " leaves a stubborn agent");
    if (!(e.rate > 0.0) || !std::isfinite(e.rate)) {
      throw Error(ErrorCode::kNetworkMalformed, label + " needs a finite positive rate");
    }
    if (!(e.trust > 0.0 && e.trust <= 1.0)) throw Error(ErrorCode::kNetworkMalformed, label + " needs trust in (0, 1]");
    if (i > 0 && d->edges[i - 1].from == e.from && d->edges[i - 1].to == e.to) {
      throw Error(ErrorCode::kNetworkMalformed, label + " appears twice");
    }
  }

  d->edge_offsets.assign(n + 1, 0);
  d->out_rate.assign(n, 0.0);
  for (const auto& e : d->edges) {
    ++d->edge_offsets[e.from + 1];
    d->out_rate[e.from] += e.rate;
    d->total_rate += e.rate;
    d->unit_trust = d->unit_trust && e.trust == 1.0;
    d->min_trust = std::min(d->min_trust, e.trust);
  }
  for (std::size_t v = 0; v < n; ++v) d->edge_offsets[v + 1] += d->edge_offsets[v];

  for (NodeId a : d->regular_list) {
    if (d->edge_offsets[a + 1] == d->edge_offsets[a]) {
      throw Error(ErrorCode::kNetworkUninfluenced,
                  "regular agent '" + names_[a] + "' has no outgoing edges and is not influenced by any stubborn agent");
    }
  }

  // Influence sets by reverse reachability from each stubborn agent.
  std::vector<std::vector<NodeId>> reverse(n);
  for (const auto& e : d->edges) reverse[e.to].push_back(e.from);
  std::vector<std::vector<NodeId>> influence(n);
  std::vector<std::size_t> seen(n, kNotIndexed);
  for (std::size_t si = 0; si < d->stubborn_list.size(); ++si) {
    const NodeId s = d->stubborn_list[si];
    influence[s].push_back(s);
    std::deque<NodeId> queue{s};
    seen[s] = si;
    while (!queue.empty()) {
      const NodeId v = queue.front();
      queue.pop_front();
      for (NodeId u : reverse[v]) {
        if (seen[u] == si) continue;
        seen[u] = si;
        influence[u].push_back(s);
        queue.push_back(u);
      }
    }
  }
  d->influence_offsets.assign(n + 1, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (influence[v].empty()) {
      throw Error(ErrorCode::kNetworkUninfluenced,
                  "regular agent '" + names_[v] + "' has no directed path to a stubborn agent");
    }
    d->influence_offsets[v + 1] = d->influence_offsets[v] + influence[v].size();
    d->influence.insert(d->influence.end(), influence[v].begin(), influence[v].end());
  }

  std::vector<Eigen::Triplet<double>> q_entries;
  std::vector<Eigen::Triplet<double>> p_entries;
  q_entries.reserve(d->edges.size() + n);
  p_entries.reserve(d->edges.size());
  for (NodeId a : d->regular_list) {
    double row = 0.0;
    for (std::size_t i = d->edge_offsets[a]; i < d->edge_offsets[a + 1]; ++i) row += d->edges[i].trust * d->edges[i].rate;
    for (std::size_t i = d->edge_offsets[a]; i < d->edge_offsets[a + 1]; ++i) {
      const auto& e = d->edges[i];
      const double q = e.trust * e.rate;
      q_entries.emplace_back(a, e.to, q);
      p_entries.emplace_back(a, e.to, q / row);
    }
    q_entries.emplace_back(a, a, -row);
  }
  const auto dim = static_cast<Eigen::Index>(n);
  d->q.resize(dim, dim);
  d->q.setFromTriplets(q_entries.begin(), q_entries.end());
  d->p.resize(dim, dim);
  d->p.setFromTriplets(p_entries.begin(), p_entries.end());
  d->q.makeCompressed();
  d->p.makeCompressed();
  return SocialNetwork(std::move(d));
}

SocialNetwork build_canonical(const UndirectedGraph& graph, std::span<const NodeId> stubborn,
                              std::span<const double> beliefs, double trust, std::vector<std::string> names) {
  const std::size_t n = graph.num_nodes();
  if (n == 0) throw Error(ErrorCode::kNetworkMalformed, "graph has no nodes");
  if (!graph.is_connected()) throw Error(ErrorCode::kNetworkDisconnected, "canonical construction needs a connected graph");
  if (!(trust > 0.0 && trust <= 1.0)) throw Error(ErrorCode::kNetworkMalformed, "trust must lie in (0, 1]");
  if (stubborn.size() != beliefs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "stubborn set and beliefs differ in length");
  }
  if (!names.empty() && names.size() != n) throw Error(ErrorCode::kInvalidArgument, "names must cover every node");

  NetworkBuilder builder;
  for (std::size_t v = 0; v < n; ++v) builder.add_node(names.empty() ? std::to_string(v) : std::move(names[v]));
  std::vector<bool> is_stubborn(n, false);
  for (std::size_t i = 0; i < stubborn.size(); ++i) {
    const NodeId s = stubborn[i];
    check_node(n, s);
    if (is_stubborn[s]) throw Error(ErrorCode::kNetworkMalformed, "stubborn node " + std::to_string(s) + " listed twice");
    is_stubborn[s] = true;
    builder.set_stubborn(s, beliefs[i]);
  }
  if (stubborn.size() == n) throw Error(ErrorCode::kNetworkMalformed, "every node is stubborn; no regular agents");
  for (NodeId a = 0; a < n; ++a) {
    if (is_stubborn[a]) continue;
    const auto nb = graph.neighbors(a);
    const double rate = 1.0 / static_cast<double>(nb.size());
    for (NodeId v : nb) builder.add_edge(a, v, rate, trust);
  }
  return builder.build();
}

std::map<NodeId, std::vector<NodeId>> validate_influence(const SocialNetwork& net) {
  std::map<NodeId, std::vector<NodeId>> out;
  for (NodeId a : net.regular_agents()) {
    const auto s = net.influence_set(a);
    out.emplace(a, std::vector<NodeId>(s.begin(), s.end()));
  }
  return out;
}

const GeneratorQ& generator_q(const SocialNetwork& net) { return net.generator(); }
const JumpP& jump_p(const SocialNetwork& net) { return net.jump(); }

ReversibleExtension reversible_extension(const SocialNetwork& net, double tolerance) {
  const std::size_t n = net.size();
  const SparseMatrix& p = net.jump();
  auto entry = [&](NodeId v, NodeId w) { return p.coeff(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w)); };

  // Detailed balance forces P_aa' > 0 <=> P_a'a > 0 on the regular block.
  for (NodeId a : net.regular_agents()) {
    for (const auto& e : net.out_edges(a)) {
      if (!net.is_stubborn(e.to) && !(entry(e.to, a) > 0.0)) {
        throw Error(ErrorCode::kNetworkIrreversible,
                    "edge (" + net.name(a) + ", " + net.name(e.to) + ") has no reverse edge; P is not reversible on A");
      }
    }
  }

  std::vector<double> weight(n, 0.0);
  std::vector<bool> visited(n, false);
  const NodeId root = net.regular_agents().front();
  weight[root] = 1.0;
  visited[root] = true;
  std::deque<NodeId> queue{root};
  std::size_t reached = 1;
  while (!queue.empty()) {
    const NodeId a = queue.front();
    queue.pop_front();
    for (const auto& e : net.out_edges(a)) {
      if (net.is_stubborn(e.to) || visited[e.to]) continue;
      visited[e.to] = true;
      weight[e.to] = weight[a] * entry(a, e.to) / entry(e.to, a);
      queue.push_back(e.to);
      ++reached;
    }
  }
  if (reached != net.regular_agents().size()) {
    throw Error(ErrorCode::kNetworkReducible, "P restricted to regular agents is reducible");
  }

  for (NodeId s : net.stubborn_agents()) weight[s] = 0.0;
  for (NodeId a : net.regular_agents()) {
    for (const auto& e : net.out_edges(a)) {
      if (net.is_stubborn(e.to)) weight[e.to] += weight[a] * entry(a, e.to);
    }
  }
  for (NodeId s : net.stubborn_agents()) {
    if (!(weight[s] > 0.0)) {
      throw Error(ErrorCode::kNetworkReducible, "stubborn agent '" + net.name(s) + "' has no incoming edges");
    }
  }

  ReversibleExtension ext;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * net.edges().size());
  for (NodeId a : net.regular_agents()) {
    for (const auto& e : net.out_edges(a)) {
      const double pa = entry(a, e.to);
      entries.emplace_back(a, e.to, pa);
      if (net.is_stubborn(e.to)) entries.emplace_back(e.to, a, pa * weight[a] / weight[e.to]);
    }
  }
  const auto dim = static_cast<Eigen::Index>(n);
  ext.jump.resize(dim, dim);
  ext.jump.setFromTriplets(entries.begin(), entries.end());
  ext.jump.makeCompressed();

  double total = 0.0;
  for (double w : weight) total += w;
  ext.weights = weight;
  ext.pi.resize(n);
  ext.pi_min = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < n; ++v) {
    ext.pi[v] = weight[v] / total;
    ext.pi_min = std::min(ext.pi_min, ext.pi[v]);
  }
  for (NodeId s : net.stubborn_agents()) ext.pi_stubborn += ext.pi[s];

  // Relative violation |pi_v P_vw - pi_w P_wv| / max(.) over every edge.
  for (Eigen::Index v = 0; v < dim; ++v) {
    for (SparseMatrix::InnerIterator it(ext.jump, v); it; ++it) {
      const double lhs = ext.pi[static_cast<std::size_t>(v)] * it.value();
      const double rhs = ext.pi[static_cast<std::size_t>(it.col())] * ext.jump.coeff(it.col(), v);
      const double scale = std::max(lhs, rhs);
      ext.max_balance_violation = std::max(ext.max_balance_violation, std::abs(lhs - rhs) / scale);
    }
  }
  if (ext.max_balance_violation > tolerance) {
    throw Error(ErrorCode::kNetworkIrreversible,
                "detailed balance fails on the regular block (relative violation " +
                    std::to_string(ext.max_balance_violation) + ")");
  }
  return ext;
}

UndirectedGraph underlying_graph(const SocialNetwork& net) {
  std::vector<UndirectedEdge> edges;
  edges.reserve(net.edges().size());
  for (const auto& e : net.edges()) edges.emplace_back(e.from, e.to);
  return UndirectedGraph::from_edges(net.size(), std::move(edges));
}

}  // namespace gossipfield
