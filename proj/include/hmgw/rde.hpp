#pragma once

// Population dynamics for the conductance laws gamma and gamma-hat:
//   C  =d 1 / (U + (1 - U)/(C1 + C2)),          U uniform on [0, 1]
//   C^ =d 1 / (V + (1 - V)/(C^' + C)),          V with density 2(1 - x)
// and the estimators and identity checks built on the stationary pools.
//
// A step produces a whole new pool from read-only snapshots of the current
// pools. Entries are generated in fixed-size blocks; block b of generation g
// draws from the substream keyed by (master, stream tag + g, b), so results
// do not depend on the number of threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "hmgw/parallel.hpp"
#include "hmgw/rng.hpp"
#include "hmgw/stats.hpp"

namespace hmgw {

struct SamplePool {
  std::vector<double> values;
  std::uint64_t generation = 0;

  std::size_t size() const { return values.size(); }
  bool all_valid() const {
    return std::all_of(values.begin(), values.end(),
                       [](double x) { return std::isfinite(x) && x >= 1.0; });
  }
};

enum class PoolSeed { one, infinity, uniform };

/// Stand-in for the point mass at infinity; one step maps it to about 1/U.
inline constexpr double kInfinityProxy = 1e12;
inline constexpr std::size_t kMinPoolSize = 1000;

inline PoolSeed pool_seed_from_tag(const std::string& tag) {
  if (tag == "one") return PoolSeed::one;
  if (tag == "infinity") return PoolSeed::infinity;
  if (tag == "uniform") return PoolSeed::uniform;
  throw std::invalid_argument("unknown pool seed: " + tag + " (expected one, infinity or uniform)");
}

struct PopulationSettings {
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
  std::size_t block_size = 1 << 14;
};

namespace detail {

inline constexpr std::uint64_t kStreamInit = 0x10000000ULL;
inline constexpr std::uint64_t kStreamGamma = 0x20000000ULL;
inline constexpr std::uint64_t kStreamGammaHat = 0x30000000ULL;

template <class Fill>
void for_blocks(std::size_t size, const PopulationSettings& s, std::uint64_t stream, Fill&& fill) {
  const std::size_t blocks = (size + s.block_size - 1) / s.block_size;
  parallel_for(blocks, s.threads, [&](std::size_t b) {
    auto rng = rng::substream(s.master_seed, stream, b);
    const std::size_t lo = b * s.block_size, hi = std::min(size, lo + s.block_size);
    for (std::size_t i = lo; i < hi; ++i) fill(i, rng);
  });
}

}  // namespace detail

/// The uniform seed is uniform on [1, 2).
inline SamplePool init_pool(std::size_t size, PoolSeed seed, const PopulationSettings& s = {},
                            std::uint64_t stream = 0) {
  if (size < kMinPoolSize)
    throw std::invalid_argument("pool size must be at least " + std::to_string(kMinPoolSize));
  SamplePool p;
  p.values.assign(size, 1.0);
  switch (seed) {
    case PoolSeed::one: break;
    case PoolSeed::infinity: std::fill(p.values.begin(), p.values.end(), kInfinityProxy); break;
    case PoolSeed::uniform:
      detail::for_blocks(size, s, detail::kStreamInit + stream,
                         [&](std::size_t i, auto& rng) { p.values[i] = 1.0 + rng::uniform01(rng); });
      break;
  }
  return p;
}

/// One synchronous step of the gamma map. `stream` separates independent runs
/// that share a master seed.
inline SamplePool step_gamma(const SamplePool& pool, const PopulationSettings& s, std::uint64_t stream = 0) {
  SamplePool out;
  out.generation = pool.generation + 1;
  const auto n = pool.size();
  out.values.resize(n);
  const double* v = pool.values.data();
  detail::for_blocks(n, s, detail::kStreamGamma + (stream << 40) + out.generation, [&](std::size_t i, auto& rng) {
    const double u = rng::uniform01(rng);
    const double c1 = v[rng::uniform_index(rng, n)];
    const double c2 = v[rng::uniform_index(rng, n)];
    out.values[i] = 1.0 / (u + (1.0 - u) / (c1 + c2));
  });
  return out;
}

inline SamplePool step_gamma_hat(const SamplePool& hat, const SamplePool& gamma, const PopulationSettings& s,
                                 std::uint64_t stream = 0) {
  SamplePool out;
  out.generation = hat.generation + 1;
  const auto n = hat.size(), m = gamma.size();
  out.values.resize(n);
  const double* h = hat.values.data();
  const double* g = gamma.values.data();
  detail::for_blocks(n, s, detail::kStreamGammaHat + (stream << 40) + out.generation, [&](std::size_t i, auto& rng) {
    const double v = 1.0 - std::sqrt(1.0 - rng::uniform01(rng));
    const double x = h[rng::uniform_index(rng, n)];
    const double c = g[rng::uniform_index(rng, m)];
    out.values[i] = 1.0 / (v + (1.0 - v) / (x + c));
  });
  return out;
}

struct StationaryPools {
  SamplePool gamma;
  SamplePool hat;
};

/// Runs both maps side by side for `steps` generations from the given seeds.
inline StationaryPools run_population(std::size_t size, std::size_t steps, PoolSeed seed,
                                      const PopulationSettings& s, std::uint64_t stream = 0) {
  StationaryPools p{init_pool(size, seed, s, 2 * stream), init_pool(size, seed, s, 2 * stream + 1)};
  for (std::size_t k = 0; k < steps; ++k) {
    auto next_hat = step_gamma_hat(p.hat, p.gamma, s, stream);
    p.gamma = step_gamma(p.gamma, s, stream);
    p.hat = std::move(next_hat);
  }
  return p;
}

/// Continues an existing pair of pools.
inline void advance_population(StationaryPools& p, std::size_t steps, const PopulationSettings& s,
                               std::uint64_t stream = 0) {
  for (std::size_t k = 0; k < steps; ++k) {
    auto next_hat = step_gamma_hat(p.hat, p.gamma, s, stream);
    p.gamma = step_gamma(p.gamma, s, stream);
    p.hat = std::move(next_hat);
  }
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

inline Estimate mean_estimate(std::span<const double> x) {
  const auto s = stats::summarize(x);
  return {s.mean, s.std_error()};
}

/// Independent random pairing: partner[i] is a uniform index into a pool of
/// size m, drawn from a dedicated stream.
inline std::vector<std::size_t> random_partners(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  auto rng = rng::substream(seed, 0x50A1ULL);
  for (auto& i : idx) i = rng::uniform_index(rng, m);
  return idx;
}

/// lambda = E[C^] - 1.
inline Estimate estimate_lambda_moment(const SamplePool& hat) {
  auto e = mean_estimate(hat.values);
  e.value -= 1.0;
  return e;
}

/// lambda = 2 E[log((C^ + C)/C^)], with C independent of C^.
inline Estimate estimate_lambda_log(const SamplePool& hat, const SamplePool& gamma, std::uint64_t seed) {
  const auto partner = random_partners(hat.size(), gamma.size(), seed);
  std::vector<double> d(hat.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = hat.values[i];
    d[i] = 2.0 * std::log1p(gamma.values[partner[i]] / x);
  }
  return mean_estimate(d);
}

/// Per-entry residuals of E[C^(C^-1) g'(C^)] + 2E[g(C^)] - 2E[g(C^+C)];
/// returns their mean and standard error. Throws std::domain_error when a
/// term is not finite.
inline Estimate check_identity_g(const SamplePool& hat, const SamplePool& gamma,
                                 const std::function<double(double)>& g,
                                 const std::function<double(double)>& g_prime, std::uint64_t seed) {
  const auto partner = random_partners(hat.size(), gamma.size(), seed);
  std::vector<double> d(hat.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = hat.values[i];
    const double c = gamma.values[partner[i]];
    d[i] = x * (x - 1.0) * g_prime(x) + 2.0 * g(x) - 2.0 * g(x + c);
    if (!std::isfinite(d[i])) throw std::domain_error("check_identity_g: non-finite term; g grows too fast");
  }
  return mean_estimate(d);
}

struct LaplaceResidual {
  double ell = 0.0;
  double residual = 0.0;
  double std_error = 0.0;
  double phi = 0.0, phi_hat = 0.0;
};

/// 2l phi^''(l) + l phi^'(l) - 2(1 - phi(l)) phi^(l) with phi(l) = E[e^{-lC/2}],
/// phi^(l) = E[e^{-lC^/2}] and the derivatives taken under the expectation.
inline std::vector<LaplaceResidual> laplace_ode_check(const SamplePool& hat, const SamplePool& gamma,
                                                      std::span<const double> ell_grid, std::uint64_t seed) {
  const auto partner = random_partners(hat.size(), gamma.size(), seed);
  std::vector<LaplaceResidual> out;
  std::vector<double> d(hat.size());
  for (double l : ell_grid) {
    long double sphi = 0.0L, sphih = 0.0L;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double x = hat.values[i];
      const double c = gamma.values[partner[i]];
      const double ex = std::exp(-l * x / 2.0);
      const double ec = std::exp(-l * c / 2.0);
      // 2l E[(x/2)^2 e] - l E[(x/2) e] - 2E[e] + 2E[e e_c]
      d[i] = ex * (l * x * x / 2.0 - l * x / 2.0 - 2.0) + 2.0 * ex * ec;
      sphi += ec;
      sphih += ex;
    }
    const auto e = mean_estimate(d);
    out.push_back({l, e.value, e.std_error, static_cast<double>(sphi / d.size()),
                   static_cast<double>(sphih / d.size())});
  }
  return out;
}

struct DensityFit {
  double bin_width = 0.01;
  double A0 = 0.0, A0_se = 0.0;
  double K0 = 0.0, K0_se = 0.0;
  double hat_residual = 0.0;    // sup over [1,2] bins of |histogram - fitted f^|
  double gamma_residual = 0.0;  // same for f
  double argmax = 0.0;          // of the coarse f^ histogram
  double argmax_bin_width = 0.05;
  double first_bin_density = 0.0;
  std::vector<double> centers, hat_density, gamma_density;  // [1,2] histograms
};

namespace detail {

inline std::vector<double> histogram_density(const std::vector<double>& x, double lo, double hi, double h) {
  const auto bins = static_cast<std::size_t>(std::llround((hi - lo) / h));
  std::vector<double> c(bins, 0.0);
  for (double v : x) {
    if (v < lo || v >= hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / h);
    if (b >= bins) b = bins - 1;
    c[b] += 1.0;
  }
  const double scale = 1.0 / (static_cast<double>(x.size()) * h);
  for (auto& v : c) v *= scale;
  return c;
}

// Weighted least squares for y = a * x through the origin; weights are the
// bin counts. Returns (a, se(a)).
inline std::pair<double, double> fit_scale(const std::vector<double>& x, const std::vector<double>& y,
                                           const std::vector<double>& w) {
  long double sxx = 0.0L, sxy = 0.0L, sw = 0.0L;
  std::size_t used = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] <= 0.0) continue;
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
    sw += w[i];
    ++used;
  }
  if (used < 2 || sxx <= 0.0L) throw std::domain_error("density fit: not enough populated bins");
  const double a = static_cast<double>(sxy / sxx);
  long double rss = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] <= 0.0) continue;
    const double r = y[i] - a * x[i];
    rss += w[i] * r * r;
  }
  const double se = std::sqrt(static_cast<double>(rss / (static_cast<long double>(used - 1) * sxx)));
  return {a, se};
}

}  // namespace detail

inline double fhat_closed_form(double t, double A0) { return 4.0 * A0 * (t - 1.0) / (t * t * t); }
inline double f_closed_form(double t, double K0) { return K0 / (t * t); }
/// P(C^ >= t) on [1, 2].
inline double Fhat_closed_form(double t, double A0) { return (4.0 * t - 2.0) / (t * t) * A0 - 2.0 * A0 + 1.0; }

/// Fits f^(t) = 4 A0 (t-1)/t^3 and f(t) = K0/t^2 on [1, 2] to histograms of
/// width `bin_width`. The argmax of f^ is read from a coarser histogram on
/// [1, 4] whose bins are `argmax_bin_width` wide.
inline DensityFit fit_densities(const SamplePool& gamma, const SamplePool& hat, double bin_width = 0.01,
                                double argmax_bin_width = 0.05) {
  DensityFit f;
  f.bin_width = bin_width;
  f.argmax_bin_width = argmax_bin_width;
  f.hat_density = detail::histogram_density(hat.values, 1.0, 2.0, bin_width);
  f.gamma_density = detail::histogram_density(gamma.values, 1.0, 2.0, bin_width);
  const auto bins = f.hat_density.size();
  std::vector<double> xh(bins), xg(bins), wh(bins), wg(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double t = 1.0 + (static_cast<double>(b) + 0.5) * bin_width;
    f.centers.push_back(t);
    xh[b] = fhat_closed_form(t, 1.0);
    xg[b] = f_closed_form(t, 1.0);
    wh[b] = f.hat_density[b] * static_cast<double>(hat.size()) * bin_width;
    wg[b] = f.gamma_density[b] * static_cast<double>(gamma.size()) * bin_width;
  }
  std::tie(f.A0, f.A0_se) = detail::fit_scale(xh, f.hat_density, wh);
  std::tie(f.K0, f.K0_se) = detail::fit_scale(xg, f.gamma_density, wg);
  for (std::size_t b = 0; b < bins; ++b) {
    f.hat_residual = std::max(f.hat_residual, std::abs(f.hat_density[b] - f.A0 * xh[b]));
    f.gamma_residual = std::max(f.gamma_residual, std::abs(f.gamma_density[b] - f.K0 * xg[b]));
  }
  f.first_bin_density = f.hat_density.front();
  const auto coarse = detail::histogram_density(hat.values, 1.0, 4.0, argmax_bin_width);
  const auto best = static_cast<std::size_t>(std::max_element(coarse.begin(), coarse.end()) - coarse.begin());
  f.argmax = 1.0 + (static_cast<double>(best) + 0.5) * argmax_bin_width;
  return f;
}

/// sup over the grid of |empirical P(C^ >= t) - closed form with A0|.
inline double tail_formula_gap(const SamplePool& hat, double A0, std::span<const double> grid) {
  std::vector<double> x = hat.values;
  std::sort(x.begin(), x.end());
  double gap = 0.0;
  for (double t : grid) {
    const auto below = std::lower_bound(x.begin(), x.end(), t) - x.begin();
    const double emp = 1.0 - static_cast<double>(below) / static_cast<double>(x.size());
    gap = std::max(gap, std::abs(emp - Fhat_closed_form(t, A0)));
  }
  return gap;
}

struct DensityOdePoint {
  double t = 0.0;
  double residual = 0.0;  // t(t-1)F^'(t) - 2F^(t) + 2P(C^ + C >= t)
};

/// Residual of t(t-1)F^'(t) - 2F^(t) = -2P(C^ + C >= t) with F^' read from a
/// centred histogram window of half-width `half_width`.
inline std::vector<DensityOdePoint> density_ode_check(const SamplePool& hat, const SamplePool& gamma,
                                                      std::span<const double> grid, std::uint64_t seed,
                                                      double half_width = 0.05) {
  std::vector<double> x = hat.values;
  std::sort(x.begin(), x.end());
  const auto partner = random_partners(hat.size(), gamma.size(), seed);
  std::vector<double> sum(hat.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = hat.values[i] + gamma.values[partner[i]];
  std::sort(sum.begin(), sum.end());
  const auto n = static_cast<double>(x.size());
  auto tail = [&](const std::vector<double>& v, double t) {
    return 1.0 - static_cast<double>(std::lower_bound(v.begin(), v.end(), t) - v.begin()) / n;
  };
  std::vector<DensityOdePoint> out;
  for (double t : grid) {
    const double dens = (tail(x, t - half_width) - tail(x, t + half_width)) / (2.0 * half_width);
    const double r = -t * (t - 1.0) * dens - 2.0 * tail(x, t) + 2.0 * tail(sum, t);
    out.push_back({t, r});
  }
  return out;
}

/// R with P(R > x) = (1 + x)^{-2}.
template <class Rng>
double sample_R(Rng& rng) {
  return 1.0 / std::sqrt(1.0 - rng::uniform01(rng)) - 1.0;
}

struct QInfinityEstimate {
  Estimate direct;  // E[Q_inf] from (R, R', C, C', C^)
  Estimate via_v;   // E[log(1 - V + V (C + C^))]
};

/// Both assemblies of E[Q_inf], with independent draws from the pools.
inline QInfinityEstimate estimate_Q_infinity(const SamplePool& hat, const SamplePool& gamma, std::size_t samples,
                                             const PopulationSettings& s) {
  std::vector<double> q(samples), w(samples);
  const auto nh = hat.size(), ng = gamma.size();
  const double* h = hat.values.data();
  const double* g = gamma.values.data();
  detail::for_blocks(samples, s, 0x40000000ULL, [&](std::size_t i, auto& rng) {
    const double r = sample_R(rng), r2 = sample_R(rng);
    const double c = g[rng::uniform_index(rng, ng)];
    const double c2 = g[rng::uniform_index(rng, ng)];
    const double ch = h[rng::uniform_index(rng, nh)];
    q[i] = std::log(1.0 + (c + 1.0 / r) * r2 / (1.0 + r2) - 1.0 / (1.0 + r2 * (c2 + ch)));
    const double v = 1.0 - std::sqrt(1.0 - rng::uniform01(rng));
    const double c3 = g[rng::uniform_index(rng, ng)];
    const double ch3 = h[rng::uniform_index(rng, nh)];
    w[i] = std::log1p(v * (c3 + ch3 - 1.0));
  });
  return {mean_estimate(q), mean_estimate(w)};
}

inline void write_pool_csv(std::ostream& os, const SamplePool& p) {
  os << "value\n";
  const auto old = os.precision(17);
  for (double v : p.values) os << v << '\n';
  os.precision(old);
}

/// Raw little-endian doubles, preceded by the count as uint64.
inline void write_pool_binary(std::ostream& os, const SamplePool& p) {
  const std::uint64_t n = p.values.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(p.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

inline SamplePool read_pool_binary(std::istream& is) {
  std::uint64_t n = 0;
  if (!is.read(reinterpret_cast<char*>(&n), sizeof n)) throw std::runtime_error("read_pool_binary: truncated header");
  SamplePool p;
  p.values.resize(n);
  if (!is.read(reinterpret_cast<char*>(p.values.data()), static_cast<std::streamsize>(n * sizeof(double))))
    throw std::runtime_error("read_pool_binary: truncated data");
  return p;
}

}  // namespace hmgw
