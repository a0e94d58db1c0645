#include "runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "gossipfield/error.hpp"
#include "gossipfield/fluidity.hpp"
#include "gossipfield/generators.hpp"
#include "gossipfield/moments.hpp"
#include "gossipfield/network_io.hpp"
#include "gossipfield/oracles.hpp"
#include "gossipfield/parallel.hpp"
#include "gossipfield/simulate.hpp"

namespace gossipfield::tools {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kTaskStream = 0x7A5C;

const std::set<std::string> kTaskTypes = {"simulate", "ergodic", "stationary-sample", "moments",
                                          "second-moments", "fluidity", "concentration", "oracle-check"};
const std::set<std::string> kStochasticTasks = {"simulate", "ergodic", "stationary-sample"};

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::kCliInvalidSpec, message); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kCliIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::kCliIo, "cannot write " + path.string());
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(what + " is not valid JSON: " + e.what());
  }
}

double number(const json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  if (!params[key].is_number()) invalid(std::string("'") + key + "' must be a number");
  return params[key].get<double>();
}

double required_number(const json& params, const char* key, const std::string& task) {
  if (!params.contains(key)) invalid(task + " needs '" + key + "'");
  return number(params, key, 0.0);
}

std::size_t count(const json& params, const char* key, std::size_t fallback) {
  if (!params.contains(key)) return fallback;
  if (!params[key].is_number_unsigned()) invalid(std::string("'") + key + "' must be a non-negative integer");
  return params[key].get<std::size_t>();
}

bool flag(const json& params, const char* key, bool fallback) {
  if (!params.contains(key)) return fallback;
  if (!params[key].is_boolean()) invalid(std::string("'") + key + "' must be true or false");
  return params[key].get<bool>();
}

NodeId node_ref(const SocialNetwork& net, const json& ref) {
  if (ref.is_string()) return net.id(ref.get<std::string>());
  if (ref.is_number_unsigned()) return net.id(std::to_string(ref.get<std::uint64_t>()));
  invalid("node references must be names or non-negative integers");
}

// Rebuilds `net` with every trust set to `trust`.
SocialNetwork with_trust(const SocialNetwork& net, double trust) {
  NetworkBuilder builder;
  for (NodeId v = 0; v < net.size(); ++v) builder.add_node(net.name(v));
  for (NodeId s : net.stubborn_agents()) builder.set_stubborn(s, net.belief(s));
  for (const auto& e : net.edges()) builder.add_edge(e.from, e.to, e.rate, trust);
  return builder.build();
}

SocialNetwork with_beliefs(const SocialNetwork& net, const json& beliefs) {
  const auto stubborn = net.stubborn_agents();
  std::vector<double> values(stubborn.size());
  if (beliefs.is_array()) {
    if (beliefs.size() != stubborn.size()) {
      invalid("'beliefs' has " + std::to_string(beliefs.size()) + " entries for " + std::to_string(stubborn.size()) +
              " stubborn agents");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!beliefs[i].is_number()) invalid("'beliefs' entries must be numbers");
      values[i] = beliefs[i].get<double>();
    }
  } else if (beliefs.is_object()) {
    std::vector<char> seen(stubborn.size(), 0);
    for (const auto& [name, value] : beliefs.items()) {
      const NodeId s = net.id(name);
      const std::size_t i = net.stubborn_index(s);
      if (i == kNotIndexed) invalid("'" + name + "' in 'beliefs' is not stubborn");
      if (!value.is_number()) invalid("'beliefs' entries must be numbers");
      values[i] = value.get<double>();
      seen[i] = 1;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) invalid("'beliefs' misses stubborn agent '" + net.name(stubborn[i]) + "'");
    }
  } else {
    invalid("'beliefs' must be an array or an object");
  }
  return net.with_stubborn_beliefs(std::move(values));
}

std::vector<double> default_beliefs(std::size_t k) {
  std::vector<double> values(k, 0.0);
  for (std::size_t i = 0; i < k && k > 1; ++i) values[i] = static_cast<double>(i) / static_cast<double>(k - 1);
  return values;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

struct Output {
  std::string file;
  std::string kind;
  json summary = json::object();
};

class TaskContext {
 public:
  TaskContext(const SocialNetwork& net, const ExperimentSpec& spec, fs::path out_dir, std::ostream* log)
      : net_(net), spec_(spec), out_dir_(std::move(out_dir)), log_(log) {}

  std::vector<Output> run(const TaskSpec& task, std::size_t index) {
    task_seed_ = spec_.seed ? derive_seed(derive_seed(*spec_.seed, kTaskStream), index) : 0;
    const json& p = task.params;
    if (task.type == "simulate") return simulate(p);
    if (task.type == "ergodic") return ergodic(p);
    if (task.type == "stationary-sample") return stationary(p);
    if (task.type == "moments") return moments(p);
    if (task.type == "second-moments") return second(p);
    if (task.type == "fluidity") return fluidity_task(p);
    if (task.type == "concentration") return concentration(p);
    return oracle_check(p);
  }

 private:
  std::string claim(const std::string& stem, const std::string& ext) {
    const std::size_t used = ++names_[stem + ext];
    return used == 1 ? stem + ext : stem + "_" + std::to_string(used) + ext;
  }

  void note(const std::string& message) const {
    if (log_ != nullptr) *log_ << "[gossipfield] " << message << '\n';
  }

  std::vector<double> initial_state(const json& p) const {
    if (!p.contains("initial")) return initial_beliefs(net_, 0.0);
    const json& init = p["initial"];
    if (init.is_number()) return initial_beliefs(net_, init.get<double>());
    if (!init.is_array() || init.size() != net_.size()) invalid("'initial' must be a number or one value per node");
    std::vector<double> x(net_.size());
    for (std::size_t v = 0; v < x.size(); ++v) {
      if (!init[v].is_number()) invalid("'initial' entries must be numbers");
      x[v] = init[v].get<double>();
    }
    return x;
  }

  void write_node_table(const fs::path& path, const std::vector<std::string>& columns,
                        const std::vector<const std::vector<double>*>& values) const {
    std::vector<std::string> header{"node"};
    header.insert(header.end(), columns.begin(), columns.end());
    CsvWriter csv(path, header);
    for (NodeId v = 0; v < net_.size(); ++v) {
      std::vector<std::string> row{net_.name(v)};
      for (const auto* column : values) row.push_back(format_number((*column)[v]));
      csv.row(row);
    }
    csv.close();
  }

  static std::vector<double> to_vector(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

  std::vector<Output> simulate(const json& p) {
    const double horizon = required_number(p, "horizon", "simulate");
    const std::size_t replicas = std::max<std::size_t>(1, count(p, "replicas", 1));
    const bool event_log = flag(p, "event_log", false);
    const std::vector<double> x0 = initial_state(p);
    const ForwardSimulator sim(net_);

    std::vector<Output> outputs;
    std::vector<json> results(replicas);
    std::unique_ptr<std::ofstream> log_file;
    std::unique_ptr<EventLogObserver> log_observer;
    if (event_log) {
      const std::string file = claim("simulate_events", ".csv");
      log_file = std::make_unique<std::ofstream>(out_dir_ / file, std::ios::binary);
      if (!*log_file) throw Error(ErrorCode::kCliIo, "cannot write " + file);
      log_observer = std::make_unique<EventLogObserver>(*log_file);
      outputs.push_back({file, "event_log", {{"replica", 0}}});
    }
    parallel_for(replicas, [&](std::size_t r) {
      RangeObserver range;
      std::vector<SimulationObserver*> observers{&range};
      if (r == 0 && log_observer) observers.push_back(log_observer.get());
      const auto summary = sim.run(x0, horizon, derive_seed(task_seed_, r), observers);
      results[r] = {{"replica", r},
                    {"final_time", summary.final_state.time},
                    {"events", summary.final_state.events},
                    {"started_in_hull", summary.started_in_hull},
                    {"beliefs", summary.final_state.beliefs},
                    {"min", range.min()},
                    {"max", range.max()}};
    });
    if (log_file) {
      log_file->close();
      if (!*log_file) throw Error(ErrorCode::kCliIo, "failed writing the event log");
    }
    json nodes = json::array();
    for (NodeId v = 0; v < net_.size(); ++v) nodes.push_back(net_.name(v));
    const json doc = {{"horizon", horizon}, {"nodes", nodes}, {"replicas", results}};
    const std::string file = claim("simulate", ".json");
    write_file(out_dir_ / file, doc.dump(2) + "\n");
    outputs.insert(outputs.begin(), Output{file, "trajectory_summary", {{"replicas", replicas}}});
    return outputs;
  }

  std::vector<Output> ergodic(const json& p) {
    const double horizon = required_number(p, "horizon", "ergodic");
    const double burn_in = number(p, "burn_in", 0.0);
    const std::size_t batches = count(p, "batches", 100);
    const std::size_t replicas = std::max<std::size_t>(1, count(p, "replicas", 1));
    const std::vector<double> x0 = initial_state(p);
    const ForwardSimulator sim(net_);
    std::vector<std::unique_ptr<ErgodicAccumulator>> acc(replicas);
    parallel_for(replicas, [&](std::size_t r) {
      acc[r] = std::make_unique<ErgodicAccumulator>(net_.size(), std::vector<NodePair>{}, burn_in, horizon, batches);
      std::vector<SimulationObserver*> observers{acc[r].get()};
      sim.run(x0, horizon, derive_seed(task_seed_, r), observers);
    });
    for (std::size_t r = 1; r < replicas; ++r) acc[0]->merge(*acc[r]);
    const ErgodicEstimate est = acc[0]->estimate();
    const std::string file = claim("ergodic", ".csv");
    write_node_table(out_dir_ / file, {"mean", "mean_se", "variance", "variance_se"},
                     {&est.mean, &est.mean_se, &est.variance, &est.variance_se});
    note("ergodic averages over " + format_number(est.total_time) + " time units");
    return {{file, "node_moments", {{"total_time", est.total_time}, {"batches", est.batches}}}};
  }

  std::vector<Output> stationary(const json& p) {
    const std::size_t samples = count(p, "samples", 0);
    if (samples < 2) invalid("stationary-sample needs 'samples' >= 2");
    const double tol = number(p, "tolerance", 1e-9);
    const std::string method = p.value("method", std::string("backward"));
    if (method != "backward" && method != "voter") invalid("'method' must be \"backward\" or \"voter\"");
    const bool keep_draws = flag(p, "write_draws", false);
    const std::size_t n = net_.size();
    const double shift = 0.5 * (net_.min_belief() + net_.max_belief());

    std::optional<BackwardSampler> backward;
    std::optional<CoalescingWalks> voter;
    if (method == "backward") backward.emplace(net_); else voter.emplace(net_);

    // Fixed blocks keep the summation order independent of the thread count.
    const std::size_t blocks = std::min<std::size_t>(samples, 64);
    std::vector<std::vector<double>> sums(blocks, std::vector<double>(4 * n, 0.0));
    std::vector<double> worst_bound(blocks, 0.0);
    std::vector<std::vector<double>> draws(keep_draws ? samples : 0);
    parallel_for(blocks, [&](std::size_t b) {
      for (std::size_t i = samples * b / blocks; i < samples * (b + 1) / blocks; ++i) {
        CounterRng rng(derive_seed(task_seed_, i));
        StationarySample s = backward ? backward->sample(tol, rng) : voter->voter_sample(rng);
        worst_bound[b] = std::max(worst_bound[b], s.error_bound);
        for (std::size_t v = 0; v < n; ++v) {
          const double y = s.beliefs[v] - shift;
          sums[b][4 * v] += y;
          sums[b][4 * v + 1] += y * y;
          sums[b][4 * v + 2] += y * y * y;
          sums[b][4 * v + 3] += y * y * y * y;
        }
        if (keep_draws) draws[i] = std::move(s.beliefs);
      }
    });
    std::vector<double> total(4 * n, 0.0);
    for (const auto& block : sums) {
      for (std::size_t j = 0; j < total.size(); ++j) total[j] += block[j];
    }
    const double count_d = static_cast<double>(samples);
    std::vector<double> mean(n), mean_se(n), variance(n), variance_se(n);
    for (std::size_t v = 0; v < n; ++v) {
      const double m1 = total[4 * v] / count_d;
      const double m2 = total[4 * v + 1] / count_d;
      const double m3 = total[4 * v + 2] / count_d;
      const double m4 = total[4 * v + 3] / count_d;
      const double var = std::max(0.0, m2 - m1 * m1);
      const double central4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1 * m1 * m1 * m1;
      mean[v] = m1 + shift;
      variance[v] = var * count_d / (count_d - 1.0);
      mean_se[v] = std::sqrt(variance[v] / count_d);
      variance_se[v] = std::sqrt(std::max(0.0, central4 - var * var) / count_d);
    }
    std::vector<Output> outputs;
    const std::string file = claim("stationary", ".csv");
    write_node_table(out_dir_ / file, {"mean", "mean_se", "variance", "variance_se"},
                     {&mean, &mean_se, &variance, &variance_se});
    outputs.push_back({file, "node_moments",
                       {{"samples", samples},
                        {"method", method},
                        {"max_error_bound", *std::max_element(worst_bound.begin(), worst_bound.end())}}});
    if (keep_draws) {
      const std::string draws_file = claim("stationary_draws", ".csv");
      std::vector<std::string> header;
      for (NodeId v = 0; v < n; ++v) header.push_back(net_.name(v));
      CsvWriter csv(out_dir_ / draws_file, header);
      for (const auto& draw : draws) {
        std::vector<std::string> row;
        for (double x : draw) row.push_back(format_number(x));
        csv.row(row);
      }
      csv.close();
      outputs.push_back({draws_file, "draws", json::object()});
    }
    return outputs;
  }

  SecondMomentOptions moment_options(const json& p) const {
    SecondMomentOptions options;
    options.max_unknowns = count(p, "max_unknowns", options.max_unknowns);
    options.solve.tolerance = number(p, "solve_tolerance", options.solve.tolerance);
    return options;
  }

  static json solve_summary(const SolveReport& report) {
    return {{"method", report.method}, {"relative_residual", report.relative_residual},
            {"iterations", report.iterations}};
  }

  std::vector<Output> moments(const json& p) {
    SecondMomentOptions options = moment_options(p);
    const ExpectedBeliefs first = expected_beliefs(net_, options.solve);
    options.pairs = std::vector<NodePair>{};
    const MomentSolution sol = second_moments(net_, options);
    const auto mean = to_vector(first.mean);
    const auto variance = to_vector(sol.variance);
    const std::string file = claim("moments", ".csv");
    write_node_table(out_dir_ / file, {"mean", "variance"}, {&mean, &variance});
    return {{file, "node_moments",
             {{"dual_path_gap", first.dual_path_gap},
              {"support_pairs", sol.support.size()},
              {"clamped_variances", sol.clamped_variances},
              {"solve", solve_summary(sol.report)}}}};
  }

  std::vector<Output> second(const json& p) {
    SecondMomentOptions options = moment_options(p);
    options.with_eta = flag(p, "eta", false);
    if (p.contains("pairs")) {
      if (!p["pairs"].is_array()) invalid("'pairs' must be an array of [v, w] pairs");
      std::vector<NodePair> pairs;
      for (const auto& pair : p["pairs"]) {
        if (!pair.is_array() || pair.size() != 2) invalid("'pairs' entries must be [v, w]");
        pairs.emplace_back(node_ref(net_, pair[0]), node_ref(net_, pair[1]));
      }
      options.pairs = std::move(pairs);
    }
    const MomentSolution sol = second_moments(net_, options);
    const auto mean = to_vector(sol.mean);
    const auto variance = to_vector(sol.variance);
    std::vector<Output> outputs;
    const std::string file = claim("second_moments", ".csv");
    write_node_table(out_dir_ / file, {"mean", "variance"}, {&mean, &variance});
    outputs.push_back({file, "node_moments",
                       {{"support_pairs", sol.support.size()},
                        {"clamped_variances", sol.clamped_variances},
                        {"solve", solve_summary(sol.report)}}});

    const std::string pairs_file = claim("correlations", ".csv");
    CsvWriter csv(out_dir_ / pairs_file, {"v", "w", "second", "covariance", "correlation"});
    for (const auto& [v, w] : sol.support) {
      if (v == w) continue;
      csv.row({net_.name(v), net_.name(w), format_number(sol.second(v, w)), format_number(sol.covariance(v, w)),
               format_number(sol.correlation(v, w))});
    }
    csv.close();
    outputs.push_back({pairs_file, "pair_moments", json::object()});

    if (options.with_eta) {
      const std::string eta_file = claim("eta", ".csv");
      const auto stubborn = net_.stubborn_agents();
      CsvWriter eta(out_dir_ / eta_file, {"v", "w", "s", "t", "eta"});
      for (const auto& [v, w] : sol.support) {
        const Eigen::MatrixXd e = sol.eta(v, w);
        for (Eigen::Index i = 0; i < e.rows(); ++i) {
          for (Eigen::Index j = 0; j < e.cols(); ++j) {
            eta.row({net_.name(v), net_.name(w), net_.name(stubborn[static_cast<std::size_t>(i)]),
                     net_.name(stubborn[static_cast<std::size_t>(j)]), format_number(e(i, j))});
          }
        }
      }
      eta.close();
      outputs.push_back({eta_file, "pair_hitting", json::object()});
    }
    return outputs;
  }

  FluidityOptions fluidity_options(const json& p) const {
    FluidityOptions options;
    options.mixing.tol_time = number(p, "tol_time", options.mixing.tol_time);
    options.mixing.state_cap = count(p, "state_cap", options.mixing.state_cap);
    options.conductance_exact_limit = count(p, "conductance_exact_limit", options.conductance_exact_limit);
    return options;
  }

  std::vector<Output> fluidity_task(const json& p) {
    const FluidityReport report = fluidity(net_, fluidity_options(p));
    json doc = to_json(report);
    json names = json::array();
    for (NodeId s : net_.stubborn_agents()) names.push_back(net_.name(s));
    doc["stubborn"] = names;
    std::vector<Output> outputs;
    const std::string file = claim("fluidity", ".json");
    write_file(out_dir_ / file, doc.dump(2) + "\n");
    outputs.push_back({file, "fluidity_report",
                       {{"tau", report.tau}, {"tau2", report.tau2}, {"fluidity", report.fluidity}}});

    const ExpectedBeliefs first = expected_beliefs(net_);
    const std::string hist_file = claim("histogram", ".csv");
    CsvWriter csv(out_dir_ / hist_file, {"bin_left", "bin_right", "count"});
    for (const auto& bin : belief_histogram(net_, first.mean, count(p, "histogram_bins", 50))) {
      csv.row({format_number(bin.left), format_number(bin.right), std::to_string(bin.count)});
    }
    csv.close();
    outputs.push_back({hist_file, "histogram", json::object()});
    note("fluidity " + format_number(report.fluidity));
    return outputs;
  }

  std::vector<Output> concentration(const json& p) {
    std::vector<double> epsilons{0.05, 0.1, 0.2};
    if (p.contains("epsilons")) {
      if (!p["epsilons"].is_array() || p["epsilons"].empty()) invalid("'epsilons' must be a non-empty array");
      epsilons.clear();
      for (const auto& e : p["epsilons"]) {
        if (!e.is_number()) invalid("'epsilons' entries must be numbers");
        epsilons.push_back(e.get<double>());
      }
    }
    const bool with_variance = flag(p, "variance", net_.unit_trust());
    const FluidityReport report = fluidity(net_, fluidity_options(p));
    const HittingDistribution hit = hitting_gamma(net_);
    const ExpectedBeliefs first = expected_beliefs(net_);
    std::optional<Eigen::VectorXd> variance;
    if (with_variance) variance = unit_trust_variances(net_, hit.gamma);
    const ConcentrationReport conc =
        concentration_report(net_, report, first.mean, variance ? &*variance : nullptr, epsilons);
    const std::string file = claim("concentration", ".json");
    write_file(out_dir_ / file, to_json(conc).dump(2) + "\n");
    return {{file, "concentration_report", {{"applicable", conc.applicable}}}};
  }

  std::vector<Output> oracle_check(const json& p) {
    if (!p.contains("oracle") || !p["oracle"].is_string()) invalid("oracle-check needs 'oracle'");
    const std::string oracle = p["oracle"].get<std::string>();
    const auto stubborn = net_.stubborn_agents();
    if (stubborn.size() != 2) invalid("oracle-check needs exactly two stubborn agents");
    const NodeId s0 = p.contains("s0") ? node_ref(net_, p["s0"]) : stubborn[0];
    const NodeId s1 = p.contains("s1") ? node_ref(net_, p["s1"]) : stubborn[1];
    const double tolerance = number(p, "tolerance", 1e-8);
    const double x0 = net_.belief(s0);
    const double x1 = net_.belief(s1);

    Eigen::VectorXd mean;
    std::optional<Eigen::VectorXd> variance;
    json summary = {{"oracle", oracle}};
    if (oracle == "tree") {
      TreeOracle t = tree_oracle(net_, s0, s1);
      mean = t.mean;
      variance = t.variance;
    } else if (oracle == "barbell") {
      mean = barbell_oracle(net_.size(), x0, x1, s0, s1);
    } else if (oracle == "cayley") {
      const json recipe = spec_.network.contains("recipe") ? spec_.network["recipe"] : json::object();
      const std::size_t m = count(p, "m", count(recipe, "m", 0));
      const std::size_t d = count(p, "d", count(recipe, "d", 1));
      std::vector<LatticePoint> theta;
      const json gens = p.contains("generators") ? p["generators"] : recipe.value("generators", json::array());
      for (const auto& g : gens) theta.push_back(g.get<LatticePoint>());
      if (theta.empty()) theta = torus_generators(d);
      const CayleyOracle c = cayley_oracle(m, d, theta, s0, s1);
      if (c.gamma_s1.size() != net_.size()) invalid("cayley oracle size differs from the network");
      mean.resize(static_cast<Eigen::Index>(net_.size()));
      for (std::size_t v = 0; v < net_.size(); ++v) mean(static_cast<Eigen::Index>(v)) = x0 + (x1 - x0) * c.gamma_s1[v];
      summary["max_imaginary"] = c.max_imaginary;
      summary["hitting_time_gap"] = c.hitting_time_gap;
    } else {
      invalid("unknown oracle '" + oracle + "'");
    }

    const ExpectedBeliefs generic = expected_beliefs(net_);
    const double mean_gap = (generic.mean - mean).cwiseAbs().maxCoeff();
    summary["max_mean_deviation"] = mean_gap;
    double variance_gap = 0.0;
    if (variance) {
      SecondMomentOptions options;
      options.pairs = std::vector<NodePair>{};
      variance_gap = (second_moments(net_, options).variance - *variance).cwiseAbs().maxCoeff();
      summary["max_variance_deviation"] = variance_gap;
    }
    const bool passed = mean_gap <= tolerance && variance_gap <= tolerance;
    summary["passed"] = passed;

    const std::string file = claim("oracle", ".csv");
    const auto mean_v = to_vector(mean);
    if (variance) {
      const auto var_v = to_vector(*variance);
      write_node_table(out_dir_ / file, {"mean", "variance"}, {&mean_v, &var_v});
    } else {
      write_node_table(out_dir_ / file, {"mean"}, {&mean_v});
    }
    outputs_on_failure_ = {{file, "node_moments", summary}};
    if (!passed) {
      throw Error(ErrorCode::kCliCheckFailed, oracle + " oracle deviates from the generic solver by " +
                                                 format_number(std::max(mean_gap, variance_gap)));
    }
    return outputs_on_failure_;
  }

 public:
  /// Outputs written by a task that then reported a failed check.
  std::vector<Output> outputs_on_failure_;

 private:
  const SocialNetwork& net_;
  const ExperimentSpec& spec_;
  fs::path out_dir_;
  std::ostream* log_;
  std::uint64_t task_seed_ = 0;
  std::map<std::string, std::size_t> names_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kCliIo, "SHA-256 failed");
  }
  std::ostringstream ss;
  for (unsigned int i = 0; i < length; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return ss.str();
}

ExperimentSpec parse_experiment(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) invalid("experiment spec must be a JSON object");
  static const std::set<std::string> known = {"network", "trust", "beliefs", "tasks", "seed", "description"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) invalid("unknown key '" + key + "'");
  }
  ExperimentSpec spec;
  spec.base_dir = base_dir;

  if (!doc.contains("network") || !doc["network"].is_object()) invalid("spec needs a 'network' object");
  spec.network = doc["network"];
  const int sources = static_cast<int>(spec.network.contains("inline")) +
                      static_cast<int>(spec.network.contains("file")) +
                      static_cast<int>(spec.network.contains("recipe"));
  if (sources != 1 || spec.network.size() != 1) {
    invalid("'network' needs exactly one of 'inline', 'file', 'recipe'");
  }
  if (spec.network.contains("file")) {
    if (!spec.network["file"].is_string()) invalid("'network.file' must be a path");
    const fs::path path = base_dir / spec.network["file"].get<std::string>();
    if (!fs::exists(path)) invalid("network file " + path.string() + " does not exist");
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) invalid("'seed' must be a non-negative integer");
    spec.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("trust")) {
    if (!doc["trust"].is_number()) invalid("'trust' must be a number");
    spec.trust = doc["trust"].get<double>();
  }
  if (doc.contains("beliefs")) spec.beliefs = doc["beliefs"];

  if (!doc.contains("tasks") || !doc["tasks"].is_array() || doc["tasks"].empty()) {
    invalid("spec needs a non-empty 'tasks' array");
  }
  for (const auto& entry : doc["tasks"]) {
    TaskSpec task;
    if (entry.is_string()) {
      task.type = entry.get<std::string>();
    } else if (entry.is_object() && entry.contains("type") && entry["type"].is_string()) {
      task.type = entry["type"].get<std::string>();
      task.params = entry;
      task.params.erase("type");
    } else {
      invalid("tasks must be names or objects with a 'type'");
    }
    if (!kTaskTypes.count(task.type)) invalid("unknown task '" + task.type + "'");
    if (kStochasticTasks.count(task.type) && !spec.seed) invalid("task '" + task.type + "' needs a 'seed'");
    spec.tasks.push_back(std::move(task));
  }
  if (spec.network.contains("recipe")) {
    const GraphRecipe recipe = recipe_from_json(spec.network["recipe"]);
    if (uses_seed(recipe) && !spec.network["recipe"].contains("seed") && !spec.seed) {
      invalid("random recipe needs a 'seed'");
    }
  }
  return spec;
}

SocialNetwork resolve_network(const ExperimentSpec& spec, json* recipe_info, std::string* edge_list) {
  SocialNetwork net = [&] {
    if (spec.network.contains("inline")) return network_from_json(spec.network["inline"]);
    if (spec.network.contains("file")) {
      const fs::path path = spec.base_dir / spec.network["file"].get<std::string>();
      return network_from_json(parse_json(read_file(path), path.string()));
    }
    const json& recipe_doc = spec.network["recipe"];
    GraphRecipe recipe = recipe_from_json(recipe_doc);
    if (!recipe_doc.contains("seed") && spec.seed) recipe.seed = *spec.seed;
    const GeneratedGraph g = generate(recipe);
    if (recipe_info != nullptr) {
      *recipe_info = {{"family", std::string(family_name(recipe.family))},
                      {"seed", recipe.seed},
                      {"attempts", g.attempts},
                      {"edges", g.graph.num_edges()},
                      {"stubborn", g.stubborn}};
      if (recipe.family == GraphFamily::kNewmanWatts) (*recipe_info)["shortcuts"] = g.shortcuts;
    }
    if (edge_list != nullptr) *edge_list = g.graph.to_edge_list();
    const auto beliefs = default_beliefs(g.stubborn.size());
    return build_canonical(g.graph, g.stubborn, beliefs, spec.trust.value_or(1.0));
  }();
  if (spec.trust && !spec.network.contains("recipe")) net = with_trust(net, *spec.trust);
  if (spec.beliefs) net = with_beliefs(net, *spec.beliefs);
  return net;
}

RunResult run_experiment(const fs::path& spec_path, const fs::path& out_dir, std::ostream* log) {
  const auto started = std::chrono::steady_clock::now();
  RunResult result;
  json& manifest = result.manifest;
  manifest = {{"tool", "gossipfield"},
              {"version", kVersion},
              {"spec_file", spec_path.string()},
              {"spec_sha256", nullptr},
              {"seed", nullptr},
              {"started_utc", utc_now()},
              {"status", "running"},
              {"outputs", json::array()},
              {"error", nullptr}};
  std::string current_task;
  auto finish = [&] {
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
  };
  auto fail = [&](const std::string& code, const std::string& message) {
    manifest["status"] = "error";
    manifest["error"] = {{"code", code}, {"message", message},
                         {"task", current_task.empty() ? json(nullptr) : json(current_task)}};
    result.exit_code = 1;
    if (log != nullptr) *log << "[gossipfield] error " << code << ": " << message << '\n';
  };

  try {
    const std::string text = read_file(spec_path);
    manifest["spec_sha256"] = sha256_hex(text);
    const ExperimentSpec spec = parse_experiment(parse_json(text, spec_path.string()), spec_path.parent_path());
    if (spec.seed) manifest["seed"] = *spec.seed;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::kCliIo, "cannot create " + out_dir.string() + ": " + ec.message());

    json recipe_info;
    std::string edge_list;
    const SocialNetwork net = resolve_network(spec, &recipe_info, &edge_list);
    manifest["network"] = {{"nodes", net.size()},
                           {"regular", net.regular_agents().size()},
                           {"stubborn", net.stubborn_agents().size()},
                           {"edges", net.edges().size()},
                           {"unit_trust", net.unit_trust()}};
    if (!recipe_info.is_null()) {
      manifest["network"]["recipe"] = recipe_info;
      write_file(out_dir / "graph.edges", edge_list);
      manifest["outputs"].push_back({{"task", nullptr}, {"kind", "edge_list"}, {"file", "graph.edges"}});
    }
    if (log != nullptr) {
      *log << "[gossipfield] network: " << net.size() << " nodes, " << net.stubborn_agents().size()
           << " stubborn, " << net.edges().size() << " edges\n";
    }

    TaskContext context(net, spec, out_dir, log);
    for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
      current_task = spec.tasks[i].type;
      if (log != nullptr) *log << "[gossipfield] task " << i << ": " << current_task << '\n';
      const auto task_started = std::chrono::steady_clock::now();
      std::vector<Output> outputs;
      try {
        outputs = context.run(spec.tasks[i], i);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kCliCheckFailed) {
          for (const auto& o : context.outputs_on_failure_) {
            manifest["outputs"].push_back(
                {{"task", current_task}, {"index", i}, {"kind", o.kind}, {"file", o.file}, {"summary", o.summary}});
          }
        }
        throw;
      }
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - task_started).count();
      for (const auto& o : outputs) {
        manifest["outputs"].push_back({{"task", current_task},
                                       {"index", i},
                                       {"kind", o.kind},
                                       {"file", o.file},
                                       {"summary", o.summary},
                                       {"seconds", seconds}});
      }
    }
    current_task.clear();
    manifest["status"] = "ok";
  } catch (const Error& e) {
    fail(e.code_name(), e.what());
  } catch (const json::exception& e) {
    fail(error_code_name(ErrorCode::kCliInvalidSpec), e.what());
  } catch (const std::exception& e) {
    fail("internal", e.what());
  }
  finish();
  return result;
}

}  // namespace gossipfield::tools
