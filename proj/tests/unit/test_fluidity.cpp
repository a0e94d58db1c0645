#include <gtest/gtest.h>

#include <cmath>

#include "gossipfield/error.hpp"
#include "gossipfield/fluidity.hpp"
#include "gossipfield/moments.hpp"
#include "test_support.hpp"

using namespace gossipfield;
namespace gt = gossipfield::testing;

namespace {

SparseMatrix from_dense(const Eigen::MatrixXd& d) {
  SparseMatrix s = d.sparseView();
  s.makeCompressed();
  return s;
}

GraphRecipe make(GraphFamily family, std::size_t n, std::uint64_t seed = 0) {
  GraphRecipe r;
  r.family = family;
  r.n = n;
  r.seed = seed;
  return r;
}

SocialNetwork barbell12() {
  auto r = make(GraphFamily::kBarbell, 12);
  r.placement.strategy = PlacementStrategy::kExplicit;
  r.placement.ids = {0, 11};
  return gt::canonical(r, 1.0);
}

}  // namespace

TEST(Mixing, TwoStateChain) {
  Eigen::MatrixXd p(2, 2);
  p << 0, 1, 1, 0;
  const auto mix = mixing_time(from_dense(p));
  EXPECT_GE(mix.tau, 0.5);
  EXPECT_LE(mix.tau, 0.5 + 1e-3);
  EXPECT_TRUE(mix.monotone);
  for (const auto& [t, d] : mix.trace) EXPECT_NEAR(d, 2.0 * std::exp(-2.0 * t), 1e-11);
  EXPECT_NEAR(relaxation_time(from_dense(p), std::vector<double>{0.5, 0.5}).tau2, 0.5, 1e-12);
}

TEST(Mixing, HeatKernelMatchesMatrixExponential) {
  for (const auto& entry : gt::corpus()) {
    if (!entry.reversible || entry.net.size() > 40) continue;
    const auto ext = reversible_extension(entry.net);
    for (double t : {0.0, 0.3, 2.0, 17.0}) {
      const auto h = heat_kernel(ext.jump, t);
      const Eigen::MatrixXd ref = gt::dense_heat_kernel(ext.jump, t);
      EXPECT_LT((Eigen::MatrixXd(h) - ref).cwiseAbs().maxCoeff(), 1e-11) << entry.name << " t=" << t;
      EXPECT_NEAR(max_pairwise_l1(h), gt::brute_pairwise_l1(ref), 1e-10) << entry.name;
    }
  }
}

TEST(Mixing, AgreesWithBruteBisection) {
  for (const auto& entry : gt::corpus()) {
    if (!entry.reversible || entry.net.size() > 30) continue;
    const auto ext = reversible_extension(entry.net);
    const auto mix = mixing_time(ext.jump);
    EXPECT_NEAR(mix.tau, gt::brute_mixing_time(ext.jump, 1e-4), 1.5e-3) << entry.name;
    EXPECT_TRUE(mix.monotone) << entry.name;
    for (std::size_t i = 1; i < mix.trace.size(); ++i) EXPECT_LE(mix.trace[i].second, mix.trace[i - 1].second + 1e-9);
  }
}

TEST(Mixing, StateCap) {
  MixingOptions opts;
  opts.state_cap = 5;
  const auto ext = reversible_extension(barbell12());
  try {
    mixing_time(ext.jump, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFluidityStateCap);
  }
}

TEST(Relaxation, CompleteGraph) {
  for (int n : {3, 6, 10}) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, n, 1.0 / (n - 1));
    p.diagonal().setZero();
    const std::vector<double> pi(static_cast<std::size_t>(n), 1.0 / n);
    const auto r = relaxation_time(from_dense(p), pi);
    EXPECT_NEAR(r.lambda2, -1.0 / (n - 1), 1e-12);
    EXPECT_NEAR(r.tau2, (n - 1.0) / n, 1e-12);
    EXPECT_TRUE(r.exact);
  }
}

TEST(Relaxation, MatchesGeneralEigensolver) {
  for (const auto& entry : gt::corpus()) {
    if (!entry.reversible) continue;
    const auto ext = reversible_extension(entry.net);
    const auto r = relaxation_time(ext.jump, ext.pi);
    EXPECT_NEAR(r.lambda2, gt::brute_lambda2(ext.jump), 1e-9) << entry.name;
    // The stored vector is a right eigenvector of P.
    const Eigen::VectorXd pf = ext.jump * r.eigenvector;
    EXPECT_LT((pf - r.lambda2 * r.eigenvector).cwiseAbs().maxCoeff(), 1e-8) << entry.name;
  }
}

TEST(Conductance, BarbellBell) {
  const auto net = barbell12();
  const auto ext = reversible_extension(net);
  const auto c = conductance(ext.jump, ext.pi);
  EXPECT_TRUE(c.exact);
  EXPECT_NEAR(c.phi, 1.0 / 31.0, 1e-14);
  EXPECT_EQ(c.set.size(), 6u);
  const auto mix = mixing_time(ext.jump);
  EXPECT_GE(mix.tau, 1.0 / (4.0 * c.phi));
}

TEST(Conductance, MatchesEnumerationAndSweepIsUpperBound) {
  for (const auto& entry : gt::corpus()) {
    if (!entry.reversible || entry.net.size() > 14) continue;
    const auto ext = reversible_extension(entry.net);
    const auto exact = conductance(ext.jump, ext.pi);
    EXPECT_NEAR(exact.phi, gt::brute_conductance(ext.jump, ext.pi), 1e-12) << entry.name;
    const auto sweep = conductance(ext.jump, ext.pi, 0);
    EXPECT_FALSE(sweep.exact);
    EXPECT_GE(sweep.phi, exact.phi - 1e-12) << entry.name;
  }
  // Complete graph on 8 nodes.
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(8, 8, 1.0 / 7.0);
  p.diagonal().setZero();
  const std::vector<double> pi(8, 0.125);
  EXPECT_NEAR(conductance(from_dense(p), pi).phi, 4.0 / 7.0, 1e-12);
}

TEST(HittingTime, RingAndTrivialCases) {
  auto r = make(GraphFamily::kCayleyTorus, 0);
  r.m = 10;
  r.d = 1;
  r.placement.strategy = PlacementStrategy::kExplicit;
  r.placement.ids = {0, 1};
  const auto ext = reversible_extension(gt::canonical(r, 1.0));
  const std::vector<NodeId> zero{0};
  EXPECT_NEAR(expected_hitting_time(ext.jump, ext.pi, zero), gt::brute_hitting_time(ext.jump, ext.pi, zero), 1e-9);
  std::vector<NodeId> all(10);
  for (NodeId v = 0; v < 10; ++v) all[v] = v;
  EXPECT_EQ(expected_hitting_time(ext.jump, ext.pi, all), 0.0);
}

TEST(Fluidity, SplitRegularBlockIsRejected) {
  for (const auto& entry : gt::corpus()) {
    if (entry.reversible) continue;
    EXPECT_THROW(fluidity(entry.net), Error) << entry.name;
  }
}

TEST(Fluidity, ReportInvariantsOnCorpus) {
  for (const auto& entry : gt::corpus()) {
    if (!entry.reversible) continue;
    const auto rep = fluidity(entry.net);
    EXPECT_EQ(rep.extension, "stubborn-reversal");
    EXPECT_EQ(rep.fluidity, fluidity_from_parts(rep.n, rep.pi_min, rep.pi_stubborn, rep.tau)) << entry.name;
    EXPECT_LE(rep.tau2, rep.tau + 1e-9) << entry.name;
    EXPECT_GE(rep.hitting_time, rep.hitting_time_lower_bound - 1e-9) << entry.name;
    double total = 0.0;
    for (double g : rep.gamma_bar) {
      EXPECT_GE(g, -1e-12);
      total += g;
    }
    EXPECT_NEAR(total, 1.0, 1e-10) << entry.name;
    EXPECT_GE(rep.delta_star, 0.0);
    const auto gamma = hitting_gamma(entry.net).gamma;
    Eigen::VectorXd pi = Eigen::Map<const Eigen::VectorXd>(rep.pi.data(), static_cast<Eigen::Index>(rep.pi.size()));
    const Eigen::VectorXd composed = gamma.transpose() * pi;
    for (std::size_t s = 0; s < rep.gamma_bar.size(); ++s) {
      EXPECT_NEAR(rep.gamma_bar[s], composed[static_cast<Eigen::Index>(s)], 1e-12) << entry.name;
    }
  }
}

TEST(Fluidity, SymmetricAndConstantPlacements) {
  const auto rep = fluidity(gt::canonical(make(GraphFamily::kLine, 4), 0.5));
  ASSERT_EQ(rep.gamma_bar.size(), 2u);
  EXPECT_NEAR(rep.gamma_bar[0], 0.5, 1e-14);
  EXPECT_NEAR(rep.mean_z, 0.5, 1e-14);
  EXPECT_NEAR(rep.var_z, 0.25, 1e-14);
  EXPECT_NEAR(rep.tau2, 2.0, 1e-10);

  auto r = make(GraphFamily::kErdosRenyi, 10, 13);
  r.p = 1.0;
  r.placement.strategy = PlacementStrategy::kUniform;
  r.placement.count = 3;
  const auto flat = fluidity(gt::canonical(r, 1.0, {0.4, 0.4, 0.4}));
  EXPECT_LT(flat.var_z, 1e-28);
  EXPECT_LT(flat.delta_star, 1e-14);
  EXPECT_NEAR(flat.mean_z, 0.4, 1e-14);
}

TEST(Concentration, PsiValue) {
  EXPECT_NEAR(psi(0.1), 160.0 * std::log(2.0 * std::exp(2.0) / 0.1), 1e-9);
  EXPECT_NEAR(psi(0.1), 799.317, 1e-3);
}

TEST(Concentration, BarbellBoundIsVacuous) {
  const auto net = barbell12();
  const auto rep = fluidity(net);
  const auto mean = expected_beliefs(net).mean;
  const std::vector<double> eps{0.05, 0.1, 0.2};
  const auto var = unit_trust_variances(net, hitting_gamma(net).gamma);
  const auto c = concentration_report(net, rep, mean, &var, eps);
  ASSERT_EQ(c.rows.size(), 3u);
  for (const auto& row : c.rows) EXPECT_GE(row.bound, 1.0);
}

TEST(Concentration, VarianceChannelNeedsUnitTrust) {
  const auto net = gt::canonical(make(GraphFamily::kLine, 6), 0.5);
  const auto rep = fluidity(net);
  const auto sol = second_moments(net);
  const std::vector<double> eps{0.1};
  try {
    concentration_report(net, rep, sol.mean, &sol.variance, eps);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFluidityNotApplicable);
  }
  const auto c = concentration_report(net, rep, sol.mean, nullptr, eps);
  EXPECT_FALSE(c.rows[0].variance_violation_fraction.has_value());
}

TEST(Concentration, ScaleEquivariance) {
  auto r = make(GraphFamily::kNewmanWatts, 40, 3);
  r.k = 2;
  r.p = 0.1;
  r.placement.strategy = PlacementStrategy::kUniform;
  r.placement.count = 3;
  const auto net = gt::canonical(r, 1.0, {0.0, 0.3, 1.0});
  const double alpha = -2.5;
  const double beta = 4.0;
  const auto moved = net.with_stubborn_beliefs({beta, alpha * 0.3 + beta, alpha + beta});
  const std::vector<double> eps{0.05, 0.1, 0.2, 0.4};
  auto report = [&](const SocialNetwork& x) {
    const auto rep = fluidity(x);
    const auto gamma = hitting_gamma(x).gamma;
    const auto var = unit_trust_variances(x, gamma);
    return concentration_report(x, rep, expected_beliefs(x).mean, &var, eps);
  };
  const auto a = report(net);
  const auto b = report(moved);
  EXPECT_NEAR(b.mean_z, alpha * a.mean_z + beta, 1e-12);
  EXPECT_NEAR(b.var_z, alpha * alpha * a.var_z, 1e-12);
  EXPECT_NEAR(b.delta_star, std::abs(alpha) * a.delta_star, 1e-12);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_EQ(a.rows[i].mean_violation_fraction, b.rows[i].mean_violation_fraction);
    EXPECT_EQ(a.rows[i].variance_violation_fraction, b.rows[i].variance_violation_fraction);
  }
}

TEST(Concentration, HistogramAndJson) {
  const auto net = gt::canonical(make(GraphFamily::kLine, 6), 1.0);
  const auto mean = expected_beliefs(net).mean;
  const auto bins = belief_histogram(net, mean, 5);
  ASSERT_EQ(bins.size(), 5u);
  std::size_t total = 0;
  for (const auto& b : bins) total += b.count;
  EXPECT_EQ(total, 4u);
  EXPECT_EQ(bins.front().left, 0.0);
  EXPECT_EQ(bins.back().right, 1.0);

  const auto rep = fluidity(net);
  const auto j = to_json(rep);
  for (const char* key : {"extension", "pi", "pi_stubborn", "pi_min", "tau", "tau2", "conductance", "fluidity",
                          "gamma_bar", "mean_z", "var_z", "delta_star", "expected_hitting_time", "mixing_trace"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  const std::vector<double> eps{0.1};
  const auto c = to_json(concentration_report(net, rep, mean, nullptr, eps));
  EXPECT_TRUE(c.contains("applicable"));
}
