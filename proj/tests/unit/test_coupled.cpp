#include <gtest/gtest.h>

#include <cmath>

#include "gossipfield/coupled.hpp"
#include "gossipfield/error.hpp"
#include "test_support.hpp"

using namespace gossipfield;
using gossipfield::testing::corpus;
using gossipfield::testing::dense;

TEST(CoupledK, RowsSumToZeroOnCorpus) {
  for (const auto& entry : corpus()) {
    if (entry.net.size() > 40) continue;
    const auto k = coupled_k(entry.net).materialize();
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(k.rows());
    for (Eigen::Index r = 0; r < k.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(k, r); it; ++it) sums[r] += it.value();
    }
    EXPECT_LT(sums.cwiseAbs().maxCoeff(), 1e-12) << entry.name;
  }
}

TEST(CoupledK, OffDiagonalPairsMoveOneCoordinate) {
  for (const auto& entry : corpus()) {
    const auto& net = entry.net;
    if (net.size() > 12) continue;
    const auto q = dense(net.generator());
    const CoupledK k(net);
    std::vector<PairTransition> row;
    for (NodeId v = 0; v < net.size(); ++v) {
      for (NodeId vp = 0; vp < net.size(); ++vp) {
        if (v == vp) continue;
        row.clear();
        const double diag = k.row({v, vp}, row);
        EXPECT_NEAR(diag, q(v, v) + q(vp, vp), 1e-15);
        // Summing over w' the moves that change the first coordinate to w
        // recovers Q_vw.
        Eigen::VectorXd first = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.size()));
        for (const auto& t : row) {
          if (t.to.second == vp && t.to.first != v) first[t.to.first] += t.rate;
        }
        for (NodeId w = 0; w < net.size(); ++w) {
          if (w != v) EXPECT_NEAR(first[w], q(v, w), 1e-15) << entry.name;
        }
      }
    }
  }
}

TEST(CoupledK, DiagonalPairs) {
  const auto net = gossipfield::testing::single_agent(0.5);
  const CoupledK k(net);
  std::vector<PairTransition> row;
  const double diag = k.row({0, 0}, row);
  // Q_as = 1/2 for each stubborn s: joint rate 1/4, solo rate 1/4 twice.
  EXPECT_DOUBLE_EQ(diag, -2.0 * 1.0 + 0.5);
  ASSERT_EQ(row.size(), 6u);
  EXPECT_EQ(row[0].to, (NodePair{1, 1}));
  EXPECT_DOUBLE_EQ(row[0].rate, 0.25);
  EXPECT_DOUBLE_EQ(row[1].rate, 0.25);

  const auto voter = gossipfield::testing::single_agent(1.0);
  row.clear();
  CoupledK(voter).row({0, 0}, row);
  for (const auto& t : row) EXPECT_EQ(t.to.first, t.to.second);
}

TEST(CoupledK, MaterializeRespectsCap) {
  const auto net = gossipfield::testing::single_agent(1.0);
  EXPECT_THROW(coupled_k(net).materialize(8), Error);
  EXPECT_EQ(coupled_k(net).materialize(9).rows(), 9);
}
