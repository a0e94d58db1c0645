#include <gtest/gtest.h>

#include <cmath>

#include "gossipfield/error.hpp"
#include "gossipfield/moments.hpp"
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

}  // namespace

TEST(HittingGamma, LineFive) {
  const auto net = gt::canonical(line(5), 1.0);
  const auto h = hitting_gamma(net);
  EXPECT_NEAR(h.gamma(1, 1), 0.25, 1e-14);
  EXPECT_NEAR(h.gamma(3, 1), 0.75, 1e-14);
  EXPECT_EQ(h.gamma(0, 0), 1.0);
  EXPECT_EQ(h.gamma(4, 1), 1.0);
  EXPECT_EQ(h.report.method, "dense-lu");
}

TEST(HittingGamma, MatchesMatrixPowersOnCorpus) {
  for (const auto& entry : gt::corpus()) {
    const auto gamma = hitting_gamma(entry.net).gamma;
    const auto brute = gt::absorption_by_powers(entry.net);
    EXPECT_LT((gamma - brute).cwiseAbs().maxCoeff(), 1e-8) << entry.name;
  }
}

TEST(HittingGamma, IterativePathAgreesWithDense) {
  GraphRecipe r;
  r.family = GraphFamily::kErdosRenyi;
  r.n = 300;
  r.p = 0.03;
  r.seed = 3;
  r.placement.strategy = PlacementStrategy::kUniform;
  r.placement.count = 3;
  const auto net = gt::canonical(r, 0.5);
  SolveOptions iterative;
  iterative.dense_limit = 0;
  const auto a = hitting_gamma(net).gamma;
  const auto b = hitting_gamma(net, iterative);
  EXPECT_NE(b.report.method, "dense-lu");
  EXPECT_LT((a - b.gamma).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ExpectedBeliefs, LineFourAndBarbell) {
  const auto line4 = expected_beliefs(gt::canonical(line(4), 0.5));
  EXPECT_NEAR(line4.mean[1], 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(line4.mean[2], 2.0 / 3.0, 1e-14);
  EXPECT_LT(line4.dual_path_gap, 1e-12);

  GraphRecipe r;
  r.family = GraphFamily::kBarbell;
  r.n = 12;
  r.placement.strategy = PlacementStrategy::kExplicit;
  r.placement.ids = {0, 11};
  const auto bar = expected_beliefs(gt::canonical(r, 1.0, {1.0, 0.0}));
  EXPECT_NEAR(bar.mean[5], 16.0 / 20.0, 1e-12);
  for (NodeId a = 1; a < 5; ++a) EXPECT_NEAR(bar.mean[a], 18.0 / 20.0, 1e-12);
}

TEST(ExpectedBeliefs, ConstantBeliefsAreHarmonic) {
  GraphRecipe r;
  r.family = GraphFamily::kNewmanWatts;
  r.n = 30;
  r.k = 2;
  r.p = 0.2;
  r.seed = 5;
  r.placement.strategy = PlacementStrategy::kUniform;
  r.placement.count = 4;
  const auto m = expected_beliefs(gt::canonical(r, 0.3, {2.5, 2.5, 2.5, 2.5})).mean;
  EXPECT_LT((m.array() - 2.5).abs().maxCoeff(), 1e-12);
}

TEST(SecondMoments, SingleAgentVariance) {
  for (double theta : {0.25, 0.5, 1.0}) {
    const auto sol = second_moments(gt::single_agent(theta));
    EXPECT_NEAR(sol.mean[0], 0.5, 1e-12);
    EXPECT_NEAR(sol.variance[0], theta / (4.0 * (2.0 - theta)), 1e-10) << theta;
    EXPECT_EQ(sol.variance[1], 0.0);
  }
}

TEST(SecondMoments, VoterLineFive) {
  const auto sol = second_moments(gt::canonical(line(5), 1.0));
  const double expected[] = {0.0, 3.0 / 16.0, 0.25, 3.0 / 16.0, 0.0};
  for (NodeId v = 0; v < 5; ++v) EXPECT_NEAR(sol.variance[v], expected[v], 1e-12);
  EXPECT_DOUBLE_EQ(sol.second(0, 4), 0.0);
  EXPECT_NEAR(sol.second(4, 2), 0.5, 1e-12);
}

TEST(SecondMoments, MatchesForwardRecursionOnCorpus) {
  for (const auto& entry : gt::corpus()) {
    if (entry.net.size() > 40) continue;
    const auto sol = second_moments(entry.net);
    const auto fwd = gt::forward_moments(entry.net);
    EXPECT_LT((sol.mean - fwd.mean).cwiseAbs().maxCoeff(), 1e-10) << entry.name;
    const auto n = static_cast<NodeId>(entry.net.size());
    double worst = 0.0;
    for (NodeId v = 0; v < n; ++v) {
      for (NodeId w = 0; w < n; ++w) worst = std::max(worst, std::abs(sol.second(v, w) - fwd.second(v, w)));
    }
    EXPECT_LT(worst, 1e-9) << entry.name;
  }
}

TEST(SecondMoments, RestrictedSupportAgreesWithFull) {
  GraphRecipe r;
  r.family = GraphFamily::kTree;
  r.n = 25;
  r.seed = 8;
  const auto net = gt::canonical(r, 0.6);
  const auto full = second_moments(net);
  SecondMomentOptions opts;
  const auto regular = net.regular_agents();
  opts.pairs = std::vector<NodePair>{{regular[0], regular[3]}};
  const auto part = second_moments(net, opts);
  EXPECT_LE(part.support.size(), full.support.size());
  EXPECT_NEAR(part.second(regular[0], regular[3]), full.second(regular[0], regular[3]), 1e-11);
  for (NodeId a : regular) EXPECT_NEAR(part.variance[a], full.variance[a], 1e-11);
}

TEST(SecondMoments, SupportCapIsEnforced) {
  SecondMomentOptions opts;
  opts.max_unknowns = 3;
  try {
    second_moments(gt::canonical(line(6), 1.0), opts);
    FAIL() << "cap ignored";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMomentsSupportTooLarge);
  }
}

TEST(SecondMoments, EtaIsJointAbsorptionLaw) {
  const auto net = gt::canonical(line(5), 0.5);
  SecondMomentOptions opts;
  opts.with_eta = true;
  const auto sol = second_moments(net, opts);
  const auto gamma = hitting_gamma(net).gamma;
  for (NodeId v = 0; v < 5; ++v) {
    for (NodeId w = 0; w < 5; ++w) {
      const auto eta = sol.eta(v, w);
      EXPECT_NEAR(eta.sum(), 1.0, 1e-10);
      EXPECT_GE(eta.minCoeff(), -1e-12);
      // Row sums give the first walk's law, column sums the second's.
      for (Eigen::Index s = 0; s < 2; ++s) {
        EXPECT_NEAR(eta.row(s).sum(), gamma(v, s), 1e-10);
        EXPECT_NEAR(eta.col(s).sum(), gamma(w, s), 1e-10);
      }
      // E[X_v X_w] = sum eta_ss' x_s x_s' with x = (0, 1).
      EXPECT_NEAR(eta(1, 1), sol.second(v, w), 1e-10);
    }
  }
}

TEST(SecondMoments, CorrelationsAreBounded) {
  const auto sol = second_moments(gt::canonical(line(6), 0.4));
  for (NodeId v = 0; v < 6; ++v) {
    for (NodeId w = 0; w < 6; ++w) {
      const double c = sol.correlation(v, w);
      EXPECT_GE(c, -1.0 - 1e-9);
      EXPECT_LE(c, 1.0 + 1e-9);
    }
  }
  EXPECT_NEAR(sol.correlation(2, 2), 1.0, 1e-12);
  EXPECT_EQ(sol.correlation(0, 2), 0.0);
}

TEST(BackwardOde, LineFourApproachesStationaryMeans) {
  const auto net = gt::canonical(line(4), 1.0);
  const Eigen::Index n = 4;
  Eigen::VectorXd m0 = Eigen::VectorXd::Zero(n);
  m0[3] = 1.0;
  Eigen::MatrixXd s0 = m0 * m0.transpose();
  OdeOptions opts;
  opts.checkpoints = {0.0, 5.0, 20.0, 50.0};
  const auto traj = backward_ode(net, m0, s0, 50.0, opts);
  EXPECT_NEAR(traj.mean[1], 1.0 / 3.0, 1e-6);
  EXPECT_NEAR(traj.mean[2], 2.0 / 3.0, 1e-6);
  ASSERT_EQ(traj.means.size(), 4u);
  EXPECT_EQ(traj.means[0], m0);

  // The distance to the stationary solution shrinks along the checkpoints.
  const auto exact = second_moments(net);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    double gap = (traj.means[i] - exact.mean).cwiseAbs().maxCoeff();
    for (NodeId v = 0; v < 4; ++v) {
      for (NodeId w = 0; w < 4; ++w) {
        gap = std::max(gap, std::abs(traj.seconds[i](v, w) - exact.second(v, w)));
      }
    }
    EXPECT_LT(gap, previous);
    previous = gap;
  }
}

TEST(BackwardOde, ZeroTimeAndFixedPoint) {
  const auto net = gt::canonical(line(5), 0.7);
  const auto exact = second_moments(net);
  Eigen::MatrixXd second(5, 5);
  for (NodeId v = 0; v < 5; ++v) {
    for (NodeId w = 0; w < 5; ++w) second(v, w) = exact.second(v, w);
  }
  EXPECT_LT(moment_derivative_norm(net, exact.mean, second), 1e-9);
  const auto same = backward_ode(net, exact.mean, second, 0.0);
  EXPECT_EQ(same.mean, exact.mean);
  EXPECT_EQ(same.second, second);
}
