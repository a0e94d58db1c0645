#include "gossipfield/oracles.hpp"

#include <cmath>
#include <complex>
#include <deque>
#include <numbers>

#include "gossipfield/error.hpp"

namespace gossipfield {

namespace {

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::kOracleInvalidInput, message); }

}  // namespace

TreeOracle tree_oracle(const SocialNetwork& net, NodeId s0, NodeId s1) {
  const auto stubborn = net.stubborn_agents();
  if (stubborn.size() != 2 || s0 == s1 || !net.is_stubborn(s0) || !net.is_stubborn(s1)) {
    invalid("tree oracle needs exactly the two stubborn agents s0 and s1");
  }
  auto graph = underlying_graph(net);
  if (!graph.is_connected()) {
    // An edge between the two stubborn agents carries no interaction and is
    // absent from the network; put it back.
    std::vector<UndirectedEdge> edges(graph.edges().begin(), graph.edges().end());
    edges.emplace_back(s0, s1);
    graph = UndirectedGraph::from_edges(graph.num_nodes(), std::move(edges));
  }
  if (!graph.is_tree()) invalid("tree oracle needs a tree");
  for (NodeId a : net.regular_agents()) {
    const auto row = net.out_edges(a);
    if (row.size() != graph.degree(a)) invalid("tree oracle needs edges from every regular agent to all neighbours");
    const double first = row.front().rate * row.front().trust;
    for (const auto& e : row) {
      if (std::abs(e.rate * e.trust - first) > 1e-12 * first) invalid("tree oracle needs uniform jump probabilities");
    }
  }

  const auto d0 = graph.bfs_distances(s0);
  const auto d1 = graph.bfs_distances(s1);
  const std::size_t length = d0[s1];

  // Project every node onto the s0-s1 path by multi-source BFS from the path.
  const std::size_t n = graph.num_nodes();
  std::vector<NodeId> anchor(n, kLastNode);
  std::deque<NodeId> queue;
  for (NodeId v = 0; v < n; ++v) {
    if (d0[v] + d1[v] == length) {
      anchor[v] = v;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    for (NodeId w : graph.neighbors(v)) {
      if (anchor[w] == kLastNode) {
        anchor[w] = anchor[v];
        queue.push_back(w);
      }
    }
  }

  const double x0 = net.belief(s0);
  const double x1 = net.belief(s1);
  TreeOracle out;
  out.mean.resize(static_cast<Eigen::Index>(n));
  Eigen::VectorXd variance(static_cast<Eigen::Index>(n));
  for (NodeId v = 0; v < n; ++v) {
    const NodeId u = anchor[v];
    const auto a = static_cast<double>(d0[u]);
    const auto b = static_cast<double>(d1[u]);
    out.mean(v) = (a * x1 + b * x0) / (a + b);
    variance(v) = a * b / ((a + b) * (a + b)) * (x0 - x1) * (x0 - x1);
  }
  if (net.unit_trust()) out.variance = std::move(variance);
  return out;
}

Eigen::VectorXd barbell_oracle(std::size_t n, double x0, double x1, NodeId s0, NodeId s1) {
  if (n < 6 || n % 2 != 0) invalid("barbell oracle needs even n >= 6");
  const auto h = static_cast<NodeId>(n / 2);
  if (s1 == kLastNode) s1 = static_cast<NodeId>(n - 1);
  const NodeId a0 = h - 1;
  const NodeId a1 = h;
  if (s0 >= h || s0 == a0) invalid("s0 must lie in the first clique, off the bridge");
  if (s1 < h || s1 >= n || s1 == a1) invalid("s1 must lie in the second clique, off the bridge");

  const double den = static_cast<double>(n) + 8.0;
  const double nn = static_cast<double>(n);
  Eigen::VectorXd mean(static_cast<Eigen::Index>(n));
  for (NodeId v = 0; v < n; ++v) {
    if (v == s0) {
      mean(v) = x0;
    } else if (v == s1) {
      mean(v) = x1;
    } else if (v == a1) {
      mean(v) = (4.0 * x0 + (nn + 4.0) * x1) / den;
    } else if (v == a0) {
      mean(v) = ((nn + 4.0) * x0 + 4.0 * x1) / den;
    } else if (v > a1) {
      mean(v) = (2.0 * x0 + (nn + 6.0) * x1) / den;
    } else {
      mean(v) = ((nn + 6.0) * x0 + 2.0 * x1) / den;
    }
  }
  return mean;
}

CayleyOracle cayley_oracle(std::size_t m, std::size_t d, std::span<const LatticePoint> theta, NodeId s0, NodeId s1) {
  check_generating_set(m, d, theta);
  std::size_t n = 1;
  for (std::size_t i = 0; i < d; ++i) n *= m;
  if (s0 >= n || s1 >= n || s0 == s1) invalid("s0 and s1 must be distinct lattice nodes");

  // Roots of unity indexed by the exponent mod m keep the phases exact.
  std::vector<std::complex<double>> root(m);
  for (std::size_t j = 0; j < m; ++j) root[j] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m));
  const auto mod = static_cast<long>(m);
  auto dot = [&](const LatticePoint& l, const LatticePoint& k) {
    long acc = 0;
    for (std::size_t i = 0; i < d; ++i) acc = (acc + (l[i] % mod) * (((k[i] % mod) + mod) % mod)) % mod;
    return static_cast<std::size_t>((acc + mod) % mod);
  };

  std::vector<LatticePoint> freq(n);
  std::vector<double> weight(n, 0.0);  // 1 / (1 - lambda_l), zero at l = 0
  for (NodeId id = 0; id < n; ++id) {
    freq[id] = lattice_point(id, m, d);
    if (id == 0) continue;
    double lambda = 0.0;
    for (const auto& k : theta) lambda += root[dot(freq[id], k)].real();
    lambda /= static_cast<double>(theta.size());
    weight[id] = 1.0 / (1.0 - lambda);
  }

  const LatticePoint p0 = lattice_point(s0, m, d);
  const LatticePoint p1 = lattice_point(s1, m, d);
  LatticePoint gap(d);
  for (std::size_t i = 0; i < d; ++i) gap[i] = p0[i] - p1[i];
  double denominator = 0.0;
  for (NodeId id = 1; id < n; ++id) denominator += (1.0 - root[dot(freq[id], gap)].real()) * weight[id];
  denominator *= 2.0;

  // Green-function check: E_{s0 s1} and E_{s1 s0} are both proportional to
  // sum_l (1 - exp(i l.(s0 - s1))) w_l and its conjugate-direction twin.
  std::complex<double> e01 = 0.0;
  std::complex<double> e10 = 0.0;
  LatticePoint neg(d);
  for (std::size_t i = 0; i < d; ++i) neg[i] = -gap[i];
  for (NodeId id = 1; id < n; ++id) {
    e01 += (1.0 - root[dot(freq[id], gap)]) * weight[id];
    e10 += (1.0 - root[dot(freq[id], neg)]) * weight[id];
  }

  CayleyOracle out;
  out.hitting_time_gap = std::abs(e01 - e10) / std::abs(e01);
  out.gamma_s1.resize(n);
  for (NodeId a = 0; a < n; ++a) {
    const LatticePoint pa = lattice_point(a, m, d);
    LatticePoint da1(d);
    LatticePoint da0(d);
    for (std::size_t i = 0; i < d; ++i) {
      da1[i] = pa[i] - p1[i];
      da0[i] = pa[i] - p0[i];
    }
    std::complex<double> numerator = 0.0;
    for (NodeId id = 1; id < n; ++id) numerator += (root[dot(freq[id], da1)] - root[dot(freq[id], da0)]) * weight[id];
    const std::complex<double> value = 0.5 + numerator / denominator;
    out.max_imaginary = std::max(out.max_imaginary, std::abs(value.imag()));
    out.gamma_s1[a] = value.real();
  }
  if (out.max_imaginary > 1e-10) {
    invalid("Fourier sum left an imaginary residue of " + std::to_string(out.max_imaginary));
  }
  return out;
}

}  // namespace gossipfield
