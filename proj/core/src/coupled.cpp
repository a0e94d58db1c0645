#include "gossipfield/coupled.hpp"

#include "gossipfield/error.hpp"

namespace gossipfield {

CoupledK::CoupledK(SocialNetwork net) : net_(std::move(net)), exit_rate_(net_.size(), 0.0) {
  for (NodeId a : net_.regular_agents()) {
    for (const auto& e : net_.out_edges(a)) exit_rate_[a] += e.trust * e.rate;
  }
}

double CoupledK::row(NodePair pair, std::vector<PairTransition>& out) const {
  const auto [v, vp] = pair;
  if (v >= net_.size() || vp >= net_.size()) throw Error(ErrorCode::kInvalidArgument, "pair out of range");
  if (v != vp) {
    for (const auto& e : net_.out_edges(v)) out.push_back({{e.to, vp}, e.trust * e.rate});
    for (const auto& e : net_.out_edges(vp)) out.push_back({{v, e.to}, e.trust * e.rate});
    return -exit_rate_[v] - exit_rate_[vp];
  }
  double joint = 0.0;
  for (const auto& e : net_.out_edges(v)) {
    const double q = e.trust * e.rate;
    out.push_back({{e.to, e.to}, e.trust * q});
    joint += e.trust * q;
    if (e.trust < 1.0) {
      const double solo = (1.0 - e.trust) * q;
      out.push_back({{e.to, v}, solo});
      out.push_back({{v, e.to}, solo});
    }
  }
  return -2.0 * exit_rate_[v] + joint;
}

SparseMatrix CoupledK::materialize(std::size_t max_pairs) const {
  const std::size_t n = net_.size();
  const std::size_t pairs = n * n;
  if (pairs > max_pairs) {
    throw Error(ErrorCode::kMomentsSupportTooLarge,
                "coupled generator has " + std::to_string(pairs) + " rows, above the cap of " + std::to_string(max_pairs));
  }
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<PairTransition> row_entries;
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId vp = 0; vp < n; ++vp) {
      row_entries.clear();
      const double diag = row({v, vp}, row_entries);
      const auto r = static_cast<Eigen::Index>(index({v, vp}));
      entries.emplace_back(r, r, diag);
      for (const auto& t : row_entries) entries.emplace_back(r, static_cast<Eigen::Index>(index(t.to)), t.rate);
    }
  }
  SparseMatrix k(static_cast<Eigen::Index>(pairs), static_cast<Eigen::Index>(pairs));
  k.setFromTriplets(entries.begin(), entries.end());
  k.makeCompressed();
  return k;
}

}  // namespace gossipfield
