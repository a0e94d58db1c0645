#include "gossipfield/rng.hpp"

#include <cmath>

#include "gossipfield/error.hpp"

namespace gossipfield {

double CounterRng::exponential(double rate) {
  if (!(rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "exponential rate must be positive");
  return -std::log1p(-uniform()) / rate;
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::kInvalidArgument, "below(0) is empty");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = (*this)();
    if (x >= threshold) return x % bound;
  }
}

std::uint64_t CounterRng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw Error(ErrorCode::kInvalidArgument, "poisson mean must be finite and non-negative");
  }
  constexpr double kChunk = 500.0;
  std::uint64_t total = 0;
  while (mean > 0.0) {
    const double lambda = std::min(mean, kChunk);
    mean -= lambda;
    const double u = uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    std::uint64_t k = 0;
    // The 1e6 guard only trips if u sits in the last ulp below 1.
    while (u >= cdf && k < 1000000) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
      if (p == 0.0 && static_cast<double>(k) > lambda) break;
    }
    total += k;
  }
  return total;
}

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "alias table needs at least one weight");
  total_ = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument, "alias weights must be finite and non-negative");
    }
    total_ += w;
  }
  if (!(total_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "alias weights sum to zero");

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small;
  std::vector<std::size_t> large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total_;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (std::size_t i : small) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::size_t AliasTable::sample(CounterRng& rng) const {
  const auto column = static_cast<std::size_t>(rng.below(prob_.size()));
  return rng.uniform() < prob_[column] ? column : alias_[column];
}

}  // namespace gossipfield
