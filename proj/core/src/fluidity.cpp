#include "gossipfield/fluidity.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gossipfield/error.hpp"
#include "gossipfield/moments.hpp"
#include "gossipfield/parallel.hpp"
#include "gossipfield/rng.hpp"

namespace gossipfield {
namespace {

const double kThreshold = 2.0 / std::exp(1.0);
constexpr double kMaxUniformStep = 64.0;

void check_square(const SparseMatrix& p) {
  if (p.rows() != p.cols() || p.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "jump matrix must be square and non-empty");
  }
}

// out = h * p with column-major h: out.col(j) = sum_k P(k, j) h.col(k).
void multiply(const Eigen::MatrixXd& h, const ColSparseMatrix& p, Eigen::MatrixXd& out) {
  out.setZero(h.rows(), h.cols());
  parallel_for(static_cast<std::size_t>(p.cols()), [&](std::size_t jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    for (ColSparseMatrix::InnerIterator it(p, j); it; ++it) out.col(j) += it.value() * h.col(it.row());
  });
}

// h * e^{delta (P - I)} by uniformization, in steps of at most kMaxUniformStep;
// the Poisson tail dropped over all steps is below `truncation`.
Eigen::MatrixXd advance(const Eigen::MatrixXd& h, const ColSparseMatrix& p, double delta, double truncation) {
  Eigen::MatrixXd current = h;
  const double steps = std::max(1.0, std::ceil(delta / kMaxUniformStep));
  const double share = truncation / steps;
  Eigen::MatrixXd power;
  Eigen::MatrixXd next;
  while (delta > 0.0) {
    const double step = std::min(delta, kMaxUniformStep);
    delta -= step;
    double weight = std::exp(-step);
    double mass = weight;
    Eigen::MatrixXd acc = weight * current;
    power = current;
    for (std::size_t k = 0;; ++k) {
      const double kk = static_cast<double>(k);
      // Remaining mass sum_{j>k} w_j <= w_{k+1} / (1 - step / (k + 2)) once k + 2 > step.
      if (kk + 2.0 > step) {
        const double next_weight = weight * step / (kk + 1.0);
        if (1.0 - mass <= share || next_weight / (1.0 - step / (kk + 2.0)) <= share) break;
      }
      multiply(power, p, next);
      power.swap(next);
      weight *= step / (kk + 1.0);
      mass += weight;
      acc += weight * power;
    }
    current.swap(acc);
  }
  return current;
}

__attribute__((target_clones("avx2", "default"))) double row_l1(const double* a, const double* b, Eigen::Index n) {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  Eigen::Index i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += std::abs(a[i] - b[i]);
    s1 += std::abs(a[i + 1] - b[i + 1]);
    s2 += std::abs(a[i + 2] - b[i + 2]);
    s3 += std::abs(a[i + 3] - b[i + 3]);
  }
  for (; i < n; ++i) s0 += std::abs(a[i] - b[i]);
  return (s0 + s1) + (s2 + s3);
}

std::vector<double> symmetric_weights(std::span<const double> pi) {
  std::vector<double> root(pi.size());
  for (std::size_t v = 0; v < pi.size(); ++v) {
    if (!(pi[v] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "stationary distribution must be positive");
    root[v] = std::sqrt(pi[v]);
  }
  return root;
}

Eigen::MatrixXd symmetrized(const SparseMatrix& p, std::span<const double> pi) {
  const auto root = symmetric_weights(pi);
  const Eigen::Index n = p.rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (SparseMatrix::InnerIterator it(p, v); it; ++it) {
      s(v, it.col()) = root[static_cast<std::size_t>(v)] * it.value() / root[static_cast<std::size_t>(it.col())];
    }
  }
  // Symmetric up to rounding by detailed balance; average the two triangles.
  return 0.5 * (s + s.transpose());
}

struct SpectralPair {
  double lambda2 = 0.0;
  Eigen::VectorXd vector;  // eigenvector of S (not of P)
  bool exact = true;
};

SpectralPair second_eigenpair(const SparseMatrix& p, std::span<const double> pi, bool want_vector) {
  check_square(p);
  const Eigen::Index n = p.rows();
  if (static_cast<std::size_t>(n) != pi.size()) {
    throw Error(ErrorCode::kInvalidArgument, "pi and P sizes differ");
  }
  SpectralPair out;
  if (n == 1) {
    out.lambda2 = 0.0;
    out.vector = Eigen::VectorXd::Zero(1);
    return out;
  }
  if (n <= 3000) {
    const Eigen::MatrixXd sym = symmetrized(p, pi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorCode::kFluidityEigenFailure, "symmetric eigensolver failed");
    }
    out.lambda2 = solver.eigenvalues()(n - 2);
    if (want_vector) {
      // Inverse iteration just above lambda_2, kept orthogonal to sqrt(pi).
      Eigen::VectorXd top(n);
      for (Eigen::Index v = 0; v < n; ++v) top(v) = std::sqrt(pi[static_cast<std::size_t>(v)]);
      top.normalize();
      const double shift = out.lambda2 + 1e-9 * std::max(1.0, std::abs(out.lambda2));
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sym - shift * Eigen::MatrixXd::Identity(n, n));
      Eigen::VectorXd x(n);
      CounterRng rng(derive_seed(0x5EC0, static_cast<std::uint64_t>(n)));
      for (Eigen::Index v = 0; v < n; ++v) x(v) = rng.uniform() - 0.5;
      for (int iter = 0; iter < 4; ++iter) {
        x -= top.dot(x) * top;
        x = lu.solve(x);
        x -= top.dot(x) * top;
        const double norm = x.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(ErrorCode::kFluidityEigenFailure, "inverse iteration failed");
        x /= norm;
      }
      out.vector = x;
    }
    return out;
  }

  // Deflated power iteration on the lazy operator (I + S) / 2, whose spectrum
  // is non-negative, so the dominant remaining eigenvalue is (1 + lambda_2) / 2.
  const auto root = symmetric_weights(pi);
  Eigen::VectorXd top(n);
  for (Eigen::Index v = 0; v < n; ++v) top(v) = root[static_cast<std::size_t>(v)];
  top.normalize();
  auto apply = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd y = 0.5 * x;
    for (Eigen::Index v = 0; v < n; ++v) {
      double acc = 0.0;
      for (SparseMatrix::InnerIterator it(p, v); it; ++it) {
        acc += root[static_cast<std::size_t>(v)] * it.value() / root[static_cast<std::size_t>(it.col())] * x(it.col());
      }
      y(v) += 0.5 * acc;
    }
    return y;
  };
  Eigen::VectorXd x(n);
  CounterRng rng(derive_seed(0x5EC0, static_cast<std::uint64_t>(n)));
  for (Eigen::Index v = 0; v < n; ++v) x(v) = rng.uniform() - 0.5;
  x -= top.dot(x) * top;
  x.normalize();
  double mu = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    Eigen::VectorXd y = apply(x);
    y -= top.dot(y) * top;
    const double next_mu = x.dot(y);
    const double norm = y.norm();
    if (!(norm > 0.0)) break;
    x = y / norm;
    if (iter > 10 && std::abs(next_mu - mu) <= 1e-13 * std::max(1.0, std::abs(next_mu))) {
      mu = next_mu;
      break;
    }
    mu = next_mu;
  }
  out.lambda2 = 2.0 * mu - 1.0;
  out.vector = x;
  out.exact = false;
  return out;
}

}  // namespace

DenseRowMatrix heat_kernel(const SparseMatrix& p, double t, double truncation) {
  check_square(p);
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::kInvalidArgument, "time must be finite and >= 0");
  const ColSparseMatrix columns(p);
  return advance(Eigen::MatrixXd::Identity(p.rows(), p.cols()), columns, t, truncation);
}

double max_pairwise_l1(const DenseRowMatrix& h) {
  const Eigen::Index n = h.rows();
  const Eigen::Index cols = h.cols();
  if (n < 2) return 0.0;
  if ((h.array() < 0.0).any()) throw Error(ErrorCode::kInvalidArgument, "kernel entries must be non-negative");

  // Heavy columns first, so that the overlap of two rows accumulates early and
  // a pair can be abandoned once partial + remaining mass <= best.
  const Eigen::RowVectorXd centre = h.colwise().mean();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(cols));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return centre(a) > centre(b); });
  DenseRowMatrix sorted(n, cols);
  for (Eigen::Index c = 0; c < cols; ++c) sorted.col(c) = h.col(order[static_cast<std::size_t>(c)]);
  Eigen::RowVectorXd sorted_centre(cols);
  for (Eigen::Index c = 0; c < cols; ++c) sorted_centre(c) = centre(order[static_cast<std::size_t>(c)]);

  constexpr Eigen::Index kChunk = 64;
  const Eigen::Index chunks = (cols + kChunk - 1) / kChunk;
  // remaining(a, k) = mass of row a from chunk k on.
  Eigen::MatrixXd remaining = Eigen::MatrixXd::Zero(chunks + 1, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index k = chunks - 1; k >= 0; --k) {
      const Eigen::Index begin = k * kChunk;
      const Eigen::Index len = std::min(kChunk, cols - begin);
      remaining(k, a) = remaining(k + 1, a) + sorted.row(a).segment(begin, len).sum();
    }
  }
  auto row = [&](Eigen::Index a) { return sorted.data() + a * cols; };
  auto distance = [&](Eigen::Index a, Eigen::Index b, double best) {
    const double* x = row(a);
    const double* y = row(b);
    double partial = 0.0;
    for (Eigen::Index k = 0; k < chunks; ++k) {
      const Eigen::Index begin = k * kChunk;
      partial += row_l1(x + begin, y + begin, std::min(kChunk, cols - begin));
      if (partial + remaining(k + 1, a) + remaining(k + 1, b) <= best) return best;
    }
    return partial;
  };

  // Pivots: the mean row, then rows chosen farthest-first. The triangle
  // inequality gives |H_a - H_b| <= min_c (|H_a - c| + |H_b - c|), and every
  // distance to a pivot row is itself a candidate for the maximum.
  const Eigen::Index pivots = std::min<Eigen::Index>(n, 8);
  std::vector<std::vector<double>> to_pivot;
  to_pivot.emplace_back(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < n; ++a) {
    to_pivot[0][static_cast<std::size_t>(a)] = row_l1(row(a), sorted_centre.data(), cols);
  }
  std::vector<double> nearest = to_pivot[0];
  double best = 0.0;
  for (Eigen::Index c = 0; c < pivots; ++c) {
    const auto far = static_cast<Eigen::Index>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
    std::vector<double> d(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t a) {
      d[a] = row_l1(row(static_cast<Eigen::Index>(a)), row(far), cols);
    });
    for (std::size_t a = 0; a < d.size(); ++a) {
      best = std::max(best, d[a]);
      nearest[a] = std::min(nearest[a], d[a]);
    }
    to_pivot.push_back(std::move(d));
  }

  struct Candidate {
    double bound;
    Eigen::Index a;
    Eigen::Index b;
  };
  std::vector<Candidate> candidates;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      double bound = std::numeric_limits<double>::infinity();
      for (const auto& d : to_pivot) bound = std::min(bound, d[static_cast<std::size_t>(a)] + d[static_cast<std::size_t>(b)]);
      if (bound > best) candidates.push_back({bound, a, b});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) { return x.bound > y.bound; });
  for (const auto& c : candidates) {
    if (c.bound <= best) break;
    best = std::max(best, distance(c.a, c.b, best));
  }
  return best;
}

MixingTime mixing_time(const SparseMatrix& p, const MixingOptions& options) {
  check_square(p);
  const auto n = static_cast<std::size_t>(p.rows());
  if (n > options.state_cap) {
    throw Error(ErrorCode::kFluidityStateCap,
                std::to_string(n) + " states exceed the mixing-time cap of " + std::to_string(options.state_cap) +
                    "; use the relaxation-time proxy");
  }
  if (!(options.tol_time > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol_time must be positive");
  MixingTime out;
  out.trace.emplace_back(0.0, n < 2 ? 0.0 : 2.0);
  if (n < 2) return out;

  const ColSparseMatrix columns(p);
  Eigen::MatrixXd lo_kernel = Eigen::MatrixXd::Identity(p.rows(), p.cols());
  const double log_threshold = std::log(kThreshold);
  double lo = 0.0;
  double hi = 1.0;
  double f_lo = std::log(2.0) - log_threshold;
  double f_hi = 0.0;
  for (;;) {
    Eigen::MatrixXd kernel = advance(lo_kernel, columns, hi - lo, options.truncation);
    const double distance = max_pairwise_l1(kernel);
    out.trace.emplace_back(hi, distance);
    if (distance <= kThreshold) {
      f_hi = std::log(std::max(distance, 1e-300)) - log_threshold;
      break;
    }
    lo = hi;
    f_lo = std::log(distance) - log_threshold;
    lo_kernel.swap(kernel);
    hi = lo + std::min(lo, 16.0);
    if (hi > 1e9) throw Error(ErrorCode::kFluidityEigenFailure, "distance does not fall below 2/e");
  }

  // Bracket refinement on log D(t) - log(2/e): false position with the
  // Illinois halving of a stale end, probes kept tol/2 inside the
  // bracket, and a bisection step whenever two probes failed to halve it.
  const double tol = options.tol_time;
  int stale = 0;  // +1: lo moved last, -1: hi moved last
  int repeats = 0;
  double width_before = hi - lo;
  int since_halving = 0;
  while (hi - lo > tol) {
    double probe;
    if (since_halving >= 2) {
      probe = 0.5 * (lo + hi);
      since_halving = 0;
      width_before = hi - lo;
    } else {
      probe = hi - f_hi * (hi - lo) / (f_hi - f_lo);
      probe = std::clamp(probe, lo + 0.5 * tol, hi - 0.5 * tol);
    }
    Eigen::MatrixXd kernel = advance(lo_kernel, columns, probe - lo, options.truncation);
    const double distance = max_pairwise_l1(kernel);
    out.trace.emplace_back(probe, distance);
    const double f = std::log(std::max(distance, 1e-300)) - log_threshold;
    const int side = distance <= kThreshold ? -1 : 1;
    repeats = side == stale ? repeats + 1 : 0;
    stale = side;
    if (side < 0) {
      hi = probe;
      f_hi = f;
      if (repeats > 0) f_lo *= 0.5;
    } else {
      lo = probe;
      f_lo = f;
      lo_kernel.swap(kernel);
      if (repeats > 0) f_hi *= 0.5;
    }
    if (hi - lo <= 0.5 * width_before) {
      width_before = hi - lo;
      since_halving = 0;
    } else {
      ++since_halving;
    }
  }
  out.tau = hi;
  std::sort(out.trace.begin(), out.trace.end());
  for (std::size_t i = 1; i < out.trace.size(); ++i) {
    if (out.trace[i].second > out.trace[i - 1].second + 1e-9) out.monotone = false;
  }
  return out;
}

RelaxationTime relaxation_time(const SparseMatrix& p, std::span<const double> pi) {
  const SpectralPair pair = second_eigenpair(p, pi, true);
  RelaxationTime out;
  out.lambda2 = pair.lambda2;
  out.exact = pair.exact;
  out.eigenvector = pair.vector;
  for (Eigen::Index v = 0; v < out.eigenvector.size(); ++v) {
    out.eigenvector(v) /= std::sqrt(pi[static_cast<std::size_t>(v)]);
  }
  if (!(1.0 - pair.lambda2 > 0.0)) throw Error(ErrorCode::kFluidityEigenFailure, "no spectral gap");
  out.tau2 = 1.0 / (1.0 - pair.lambda2);
  return out;
}

Conductance conductance(const SparseMatrix& p, std::span<const double> pi, std::size_t exact_limit,
                        const Eigen::VectorXd* sweep) {
  check_square(p);
  const auto n = static_cast<std::size_t>(p.rows());
  if (pi.size() != n) throw Error(ErrorCode::kInvalidArgument, "pi and P sizes differ");
  Conductance out;
  out.phi = std::numeric_limits<double>::infinity();
  if (n < 2) return out;

  auto ratio = [&](const std::vector<char>& inside, double mass) {
    double flow = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (!inside[v]) continue;
      for (SparseMatrix::InnerIterator it(p, static_cast<Eigen::Index>(v)); it; ++it) {
        if (!inside[static_cast<std::size_t>(it.col())]) flow += pi[v] * it.value();
      }
    }
    return flow / mass;
  };
  auto record = [&](const std::vector<char>& inside, double value) {
    out.phi = value;
    out.set.clear();
    for (std::size_t v = 0; v < n; ++v) {
      if (inside[v]) out.set.push_back(static_cast<NodeId>(v));
    }
  };

  if (n <= exact_limit && n < 63) {
    std::vector<char> inside(n, 0);
    const std::uint64_t subsets = std::uint64_t{1} << n;
    for (std::uint64_t mask = 1; mask + 1 < subsets; ++mask) {
      double mass = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        inside[v] = static_cast<char>((mask >> v) & 1U);
        if (inside[v]) mass += pi[v];
      }
      if (mass > 0.5 + 1e-12) continue;
      const double value = ratio(inside, mass);
      if (value < out.phi) record(inside, value);
    }
    return out;
  }

  // Sweep cut along the second eigenvector of P, f = D^{-1/2} u.
  Eigen::VectorXd computed;
  if (sweep == nullptr) {
    computed = relaxation_time(p, pi).eigenvector;
    sweep = &computed;
  }
  if (static_cast<std::size_t>(sweep->size()) != n) throw Error(ErrorCode::kInvalidArgument, "sweep vector size differs");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> f(sweep->data(), sweep->data() + n);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
  for (int direction = 0; direction < 2; ++direction) {
    std::vector<char> inside(n, 0);
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t v = direction == 0 ? order[i] : order[n - 1 - i];
      inside[v] = 1;
      mass += pi[v];
      if (mass > 0.5 + 1e-12) break;
      const double value = ratio(inside, mass);
      if (value < out.phi) record(inside, value);
    }
  }
  out.exact = false;
  return out;
}

double expected_hitting_time(const SparseMatrix& p, std::span<const double> pi, std::span<const NodeId> targets,
                             const SolveOptions& options) {
  check_square(p);
  const auto n = static_cast<std::size_t>(p.rows());
  if (pi.size() != n) throw Error(ErrorCode::kInvalidArgument, "pi and P sizes differ");
  std::vector<std::size_t> position(n, kNotIndexed);
  std::vector<char> target(n, 0);
  for (NodeId s : targets) {
    if (s >= n) throw Error(ErrorCode::kInvalidArgument, "target out of range");
    target[s] = 1;
  }
  std::vector<std::size_t> free;
  for (std::size_t v = 0; v < n; ++v) {
    if (!target[v]) {
      position[v] = free.size();
      free.push_back(v);
    }
  }
  if (free.empty()) return 0.0;
  if (free.size() == n) throw Error(ErrorCode::kInvalidArgument, "target set is empty");

  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < free.size(); ++i) {
    triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), 1.0);
    for (SparseMatrix::InnerIterator it(p, static_cast<Eigen::Index>(free[i])); it; ++it) {
      const std::size_t j = position[static_cast<std::size_t>(it.col())];
      if (j != kNotIndexed) {
        triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), -it.value());
      }
    }
  }
  ColSparseMatrix a(static_cast<Eigen::Index>(free.size()), static_cast<Eigen::Index>(free.size()));
  a.setFromTriplets(triplets.begin(), triplets.end());
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(free.size()), 1);
  const Eigen::MatrixXd h = solve_linear(a, ones, options);
  double total = 0.0;
  for (std::size_t i = 0; i < free.size(); ++i) total += pi[free[i]] * h(static_cast<Eigen::Index>(i), 0);
  return total;
}

FluidityReport fluidity(const SocialNetwork& net, const FluidityOptions& options) {
  const ReversibleExtension ext = reversible_extension(net);
  FluidityReport report;
  report.extension = ext.label;
  report.n = net.size();
  report.pi = ext.pi;
  report.pi_stubborn = ext.pi_stubborn;
  report.pi_min = ext.pi_min;

  const RelaxationTime relax = relaxation_time(ext.jump, ext.pi);
  report.tau2 = relax.tau2;
  report.tau2_exact = relax.exact;
  if (report.n <= options.mixing.state_cap) {
    MixingTime mix = mixing_time(ext.jump, options.mixing);
    report.tau = mix.tau;
    report.mixing_trace = std::move(mix.trace);
  } else {
    report.tau = relax.tau2;
    report.tau_exact = false;
  }

  const Conductance cond = conductance(ext.jump, ext.pi, options.conductance_exact_limit, &relax.eigenvector);
  report.conductance = cond.phi;
  report.conductance_exact = cond.exact;

  const auto stubborn = net.stubborn_agents();
  report.hitting_time = expected_hitting_time(ext.jump, ext.pi, stubborn, options.solve);
  report.hitting_time_lower_bound = 1.0 / (2.0 * report.pi_stubborn) - 1.5;
  report.fluidity = fluidity_from_parts(report.n, report.pi_min, report.pi_stubborn, report.tau);

  const HittingDistribution hit = hitting_gamma(net, options.solve);
  const Eigen::Index k = hit.gamma.cols();
  report.gamma_bar.assign(static_cast<std::size_t>(k), 0.0);
  for (std::size_t v = 0; v < net.size(); ++v) {
    for (Eigen::Index s = 0; s < k; ++s) {
      report.gamma_bar[static_cast<std::size_t>(s)] += ext.pi[v] * hit.gamma(static_cast<Eigen::Index>(v), s);
    }
  }
  const auto x = net.stubborn_beliefs();
  for (std::size_t s = 0; s < x.size(); ++s) report.mean_z += report.gamma_bar[s] * x[s];
  for (std::size_t s = 0; s < x.size(); ++s) {
    const double d = x[s] - report.mean_z;
    report.var_z += report.gamma_bar[s] * d * d;
  }
  report.delta_star = net.max_belief() - net.min_belief();
  return report;
}

double psi(double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  return 16.0 / eps * std::log(2.0 * std::exp(2.0) / eps);
}

Eigen::VectorXd unit_trust_variances(const SocialNetwork& net, const Eigen::MatrixXd& gamma) {
  if (!net.unit_trust()) {
    throw Error(ErrorCode::kFluidityNotApplicable, "variance characterization needs trust 1 on every edge");
  }
  const auto x = net.stubborn_beliefs();
  Eigen::VectorXd out(gamma.rows());
  for (Eigen::Index v = 0; v < gamma.rows(); ++v) {
    double first = 0.0;
    double second = 0.0;
    for (Eigen::Index s = 0; s < gamma.cols(); ++s) {
      first += gamma(v, s) * x[static_cast<std::size_t>(s)];
      second += gamma(v, s) * x[static_cast<std::size_t>(s)] * x[static_cast<std::size_t>(s)];
    }
    out(v) = std::max(0.0, second - first * first);
  }
  return out;
}

ConcentrationReport concentration_report(const SocialNetwork& net, const FluidityReport& report,
                                         const Eigen::VectorXd& mean, const Eigen::VectorXd* variance,
                                         std::span<const double> epsilons) {
  const auto n = static_cast<Eigen::Index>(net.size());
  if (mean.size() != n || (variance != nullptr && variance->size() != n)) {
    throw Error(ErrorCode::kInvalidArgument, "moment vectors must cover every node");
  }
  if (variance != nullptr && !net.unit_trust()) {
    throw Error(ErrorCode::kFluidityNotApplicable, "variance concentration needs trust 1 on every edge");
  }
  ConcentrationReport out;
  out.pi_stubborn = report.pi_stubborn;
  out.applicable = report.pi_stubborn <= 0.25;
  out.fluidity = report.fluidity;
  out.mean_z = report.mean_z;
  out.var_z = report.var_z;
  out.delta_star = report.delta_star;
  for (double eps : epsilons) {
    ConcentrationRow row;
    row.epsilon = eps;
    row.bound = psi(eps) / report.fluidity;
    row.mean_threshold = report.delta_star * eps;
    std::size_t count = 0;
    for (Eigen::Index v = 0; v < n; ++v) {
      if (std::abs(mean(v) - report.mean_z) > row.mean_threshold) ++count;
    }
    row.mean_violation_fraction = static_cast<double>(count) / static_cast<double>(n);
    if (variance != nullptr) {
      const double threshold = report.delta_star * report.delta_star * eps;
      std::size_t var_count = 0;
      for (Eigen::Index v = 0; v < n; ++v) {
        if (std::abs((*variance)(v) - report.var_z) > threshold) ++var_count;
      }
      row.variance_threshold = threshold;
      row.variance_violation_fraction = static_cast<double>(var_count) / static_cast<double>(n);
    }
    out.rows.push_back(row);
  }
  return out;
}

std::vector<HistogramBin> belief_histogram(const SocialNetwork& net, const Eigen::VectorXd& mean, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::kInvalidArgument, "histogram needs at least one bin");
  const double lo = net.min_belief();
  const double hi = net.max_belief();
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].left = lo + width * static_cast<double>(b);
    out[b].right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (NodeId a : net.regular_agents()) {
    std::size_t b = 0;
    if (width > 0.0) {
      const double pos = (mean(a) - lo) / width;
      b = pos <= 0.0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(pos));
    }
    ++out[b].count;
  }
  return out;
}

nlohmann::json to_json(const FluidityReport& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& [t, d] : r.mixing_trace) trace.push_back({t, d});
  return {
      {"extension", r.extension},
      {"n", r.n},
      {"pi", r.pi},
      {"pi_stubborn", r.pi_stubborn},
      {"pi_min", r.pi_min},
      {"tau", r.tau},
      {"tau_exact", r.tau_exact},
      {"mixing_trace", trace},
      {"tau2", r.tau2},
      {"tau2_exact", r.tau2_exact},
      {"conductance", r.conductance},
      {"conductance_exact", r.conductance_exact},
      {"expected_hitting_time", r.hitting_time},
      {"expected_hitting_time_lower_bound", r.hitting_time_lower_bound},
      {"fluidity", r.fluidity},
      {"gamma_bar", r.gamma_bar},
      {"mean_z", r.mean_z},
      {"var_z", r.var_z},
      {"delta_star", r.delta_star},
  };
}

nlohmann::json to_json(const ConcentrationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j = {
        {"epsilon", row.epsilon},
        {"mean_threshold", row.mean_threshold},
        {"mean_violation_fraction", row.mean_violation_fraction},
        {"bound", row.bound},
        {"variance_threshold", nullptr},
        {"variance_violation_fraction", nullptr},
    };
    if (row.variance_threshold) j["variance_threshold"] = *row.variance_threshold;
    if (row.variance_violation_fraction) j["variance_violation_fraction"] = *row.variance_violation_fraction;
    rows.push_back(std::move(j));
  }
  return {
      {"applicable", r.applicable}, {"pi_stubborn", r.pi_stubborn}, {"fluidity", r.fluidity},
      {"mean_z", r.mean_z},         {"var_z", r.var_z},             {"delta_star", r.delta_star},
      {"rows", rows},
  };
}

}  // namespace gossipfield
