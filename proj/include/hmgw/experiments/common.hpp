#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "hmgw/experiments/config.hpp"
#include "hmgw/experiments/report.hpp"
#include "hmgw/offspring.hpp"
#include "hmgw/parallel.hpp"
#include "hmgw/rde.hpp"
#include "hmgw/stats.hpp"

namespace hmgw::exp {

struct Run {
  Config cfg;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t node_budget = kDefaultNodeBudget;

  explicit Run(const Config& c)
      : cfg(c),
        seed(c.get_seed("seed", 1)),
        threads(static_cast<unsigned>(std::max<long long>(1, c.get_int("threads", 1)))),
        node_budget(static_cast<std::size_t>(c.get_int("node_budget", static_cast<long long>(kDefaultNodeBudget)))) {}

  OffspringDistribution offspring(const std::string& tag) const {
    return OffspringDistribution::from_tag(tag, cfg.get_string("pmf", ""));
  }
  OffspringDistribution offspring() const { return offspring(cfg.get_string("offspring", "geometric")); }

  PopulationSettings population() const {
    PopulationSettings s;
    s.master_seed = rng::mix64(seed ^ 0x9E3779B97F4A7C15ULL);
    s.threads = threads;
    return s;
  }

  Report report(const std::string& name) const {
    Report r(name, seed);
    r.set_config(cfg);
    return r;
  }
};

/// Fills slot i with fn(i) for i < count; the result does not depend on the
/// thread count.
template <class T, class Fn>
std::vector<T> collect(std::size_t count, unsigned threads, Fn&& fn) {
  std::vector<T> out(count);
  parallel_for(count, threads, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

struct MedianEstimate {
  double median = 0.0;
  double std_error = 0.0;  // half the width of the +-sqrt(n)/2 rank window
  double q1 = 0.0, q3 = 0.0;
};

inline MedianEstimate median_estimate(std::vector<double> x) {
  if (x.empty()) return {std::nan(""), std::nan(""), std::nan(""), std::nan("")};
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  auto at = [&](double rank) {
    const auto i = static_cast<std::size_t>(std::clamp(rank, 0.0, n - 1.0));
    return x[i];
  };
  MedianEstimate m;
  m.median = stats::quantile(x, 0.5);
  m.q1 = stats::quantile(x, 0.25);
  m.q3 = stats::quantile(x, 0.75);
  const double half = std::sqrt(n) / 2.0;
  m.std_error = (at(n / 2.0 + half) - at(n / 2.0 - half)) / 2.0;
  return m;
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

/// Stable ids for per-experiment random substreams.
enum Stream : std::uint64_t {
  kThm1 = 0x100,
  kYaglom = 0x200,
  kCond = 0x300,
  kKnFast = 0x400,
  kKnTree = 0x500,
  kErgOracle = 0x600,
  kErgPrefix = 0x700,
  kCont = 0x800,
  kOracle = 0x900,
};

inline std::uint64_t family_index(const std::string& tag) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return h & 0xFFFF;
}

}  // namespace hmgw::exp
