#pragma once

// Critical offspring distributions and survival probabilities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hmgw/rng.hpp"

namespace hmgw {

enum class OffspringKind { geometric, poisson, binary, custom };

inline std::string_view to_string(OffspringKind kind) {
  switch (kind) {
    case OffspringKind::geometric: return "geometric";
    case OffspringKind::poisson: return "poisson";
    case OffspringKind::binary: return "binary";
    case OffspringKind::custom: return "custom";
  }
  return "unknown";
}

inline OffspringKind offspring_kind_from_tag(std::string_view tag) {
  if (tag == "geometric") return OffspringKind::geometric;
  if (tag == "poisson") return OffspringKind::poisson;
  if (tag == "binary") return OffspringKind::binary;
  if (tag == "custom") return OffspringKind::custom;
  throw std::invalid_argument("unknown offspring tag: " + std::string(tag));
}

/// A critical, finite-variance offspring law with finite support.
///
/// Geometric(1/2) and Poisson(1) are truncated where the tail mass drops
/// below 1e-15, and the dropped mass is folded back into theta(0) and
/// theta(1) so that both the total mass and the mean stay exactly at one.
class OffspringDistribution {
 public:
  using Pmf = std::vector<std::pair<int, double>>;

  static constexpr double kTailMass = 1e-15;
  static constexpr double kMassTolerance = 1e-12;
  static constexpr double kMeanTolerance = 1e-9;

  static OffspringDistribution make(OffspringKind kind, const Pmf& custom = {}) {
    switch (kind) {
      case OffspringKind::geometric: {
        std::vector<double> p;
        for (double w = 0.5; ; w *= 0.5) {
          p.push_back(w);
          if (w < kTailMass * 1e-3) break;
        }
        return OffspringDistribution(kind, truncate_critical(std::move(p)));
      }
      case OffspringKind::poisson: {
        std::vector<double> p;
        double w = std::exp(-1.0);
        for (int k = 0; ; ++k) {
          if (k > 0) w /= k;
          p.push_back(w);
          if (w < kTailMass * 1e-3) break;
        }
        return OffspringDistribution(kind, truncate_critical(std::move(p)));
      }
      case OffspringKind::binary:
        return OffspringDistribution(kind, {0.5, 0.0, 0.5});
      case OffspringKind::custom: {
        if (custom.empty()) throw std::invalid_argument("custom offspring law needs a pmf");
        int kmax = 0;
        for (auto [k, p] : custom) {
          if (k < 0) throw std::invalid_argument("custom pmf: negative offspring count");
          if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument("custom pmf: probabilities must be finite and >= 0");
          kmax = std::max(kmax, k);
        }
        std::vector<double> p(static_cast<std::size_t>(kmax) + 1, 0.0);
        for (auto [k, w] : custom) p[static_cast<std::size_t>(k)] += w;
        return OffspringDistribution(kind, std::move(p));
      }
    }
    throw std::invalid_argument("unknown offspring kind");
  }

  /// Builds from a config tag; `custom_pmf` is "k:p,k:p,..." and only read
  /// for the "custom" tag.
  static OffspringDistribution from_tag(std::string_view tag, std::string_view custom_pmf = {}) {
    const auto kind = offspring_kind_from_tag(tag);
    return make(kind, kind == OffspringKind::custom ? parse_pmf(custom_pmf) : Pmf{});
  }

  static Pmf parse_pmf(std::string_view text) {
    Pmf out;
    std::string s(text);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::string item;
    while (in >> item) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw std::invalid_argument("pmf entry must be k:p, got " + item);
      out.emplace_back(std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    }
    return out;
  }

  OffspringKind kind() const { return kind_; }
  std::string_view tag() const { return to_string(kind_); }
  int max_offspring() const { return static_cast<int>(pmf_.size()) - 1; }
  double pmf(int k) const {
    return (k >= 0 && k < static_cast<int>(pmf_.size())) ? pmf_[static_cast<std::size_t>(k)] : 0.0;
  }
  const std::vector<double>& pmf_table() const { return pmf_; }
  double variance() const { return sigma2_; }

  /// g(s) = sum_k theta(k) s^k.
  double pgf(double s) const {
    check_unit(s);
    double acc = 0.0;
    for (auto it = pmf_.rbegin(); it != pmf_.rend(); ++it) acc = acc * s + *it;
    return acc;
  }

  /// g'(s) = E[s^(N^-1)] where N^ is size-biased.
  double pgf_derivative(double s) const {
    check_unit(s);
    double acc = 0.0;
    for (std::size_t k = pmf_.size() - 1; k >= 1; --k) acc = acc * s + static_cast<double>(k) * pmf_[k];
    return acc;
  }

  /// 1 - g(1 - q): probability that at least one of N iid lineages, each
  /// kept with probability q, is kept. Evaluated without cancellation.
  long double survival_step(long double q) const {
    if (q <= 0.0L) return 0.0L;
    const long double l = std::log1p(-q);
    long double acc = 0.0L;
    for (std::size_t k = 1; k < pmf_.size(); ++k)
      acc += pmf_[k] * (q >= 1.0L ? 1.0L : -std::expm1(static_cast<long double>(k) * l));
    return acc;
  }

  /// 1 - g'(1 - q) = P(at least one of N^-1 lineages kept), N^ size-biased.
  long double size_biased_survival_step(long double q) const {
    if (q <= 0.0L) return 0.0L;
    const long double l = std::log1p(-q);
    long double acc = 0.0L;
    for (std::size_t k = 2; k < pmf_.size(); ++k)
      acc += static_cast<long double>(k) * pmf_[k] *
             (q >= 1.0L ? 1.0L : -std::expm1(static_cast<long double>(k - 1) * l));
    return acc;
  }

  template <class Rng>
  int sample(Rng& rng) const {
    return draw(cdf_, rng);
  }

  /// Draws from P(N^ = k) = k theta(k); never returns 0.
  template <class Rng>
  int sample_size_biased(Rng& rng) const {
    return draw(sb_cdf_, rng);
  }

 private:
  OffspringDistribution(OffspringKind kind, std::vector<double> pmf)
      : kind_(kind), pmf_(std::move(pmf)) {
    while (pmf_.size() > 1 && pmf_.back() == 0.0) pmf_.pop_back();
    long double mass = 0.0L, mean = 0.0L, second = 0.0L;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
      mass += pmf_[k];
      mean += static_cast<long double>(k) * pmf_[k];
      second += static_cast<long double>(k) * k * pmf_[k];
    }
    if (std::abs(static_cast<double>(mass) - 1.0) > kMassTolerance)
      throw std::invalid_argument("offspring pmf does not sum to one");
    if (std::abs(static_cast<double>(mean) - 1.0) > kMeanTolerance)
      throw std::invalid_argument("offspring law is not critical (mean != 1)");
    if (pmf_.size() > 1 && pmf_[1] >= 1.0 - kMassTolerance)
      throw std::invalid_argument("degenerate offspring law (theta(1) = 1)");
    sigma2_ = static_cast<double>(second - mean * mean);
    if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_))
      throw std::invalid_argument("offspring variance must be positive and finite");

    cdf_.resize(pmf_.size());
    sb_cdf_.resize(pmf_.size());
    long double c = 0.0L, sb = 0.0L;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
      c += pmf_[k];
      sb += static_cast<long double>(k) * pmf_[k];
      cdf_[k] = static_cast<double>(c / mass);
      sb_cdf_[k] = static_cast<double>(sb / mean);
    }
    cdf_.back() = 1.0;
    sb_cdf_.back() = 1.0;
  }

  // Cuts the tail below kTailMass and restores total mass and mean by
  // adjusting theta(0) and theta(1).
  static std::vector<double> truncate_critical(std::vector<double> p) {
    long double tail = 0.0L;
    std::size_t keep = p.size();
    while (keep > 3) {
      const long double next = tail + p[keep - 1];
      if (next >= kTailMass) break;
      tail = next;
      --keep;
    }
    p.resize(keep);
    long double mass = 0.0L, mean = 0.0L;
    for (std::size_t k = 0; k < p.size(); ++k) {
      mass += p[k];
      mean += static_cast<long double>(k) * p[k];
    }
    // Solve a + b = 1 - mass, b = 1 - mean (with b added to theta(1)).
    const long double b = 1.0L - mean + 0.0L;
    const long double a = (1.0L - mass) - b;
    p[0] = static_cast<double>(p[0] + a);
    p[1] = static_cast<double>(p[1] + b);
    return p;
  }

  static void check_unit(double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("pgf argument must lie in [0, 1]");
  }

  template <class Rng>
  static int draw(const std::vector<double>& cdf, Rng& rng) {
    const double u = rng::uniform01(rng);
    // Mass is concentrated on small k; a forward scan beats bisection here.
    std::size_t k = 0;
    while (cdf[k] <= u) ++k;
    return static_cast<int>(k);
  }

  OffspringKind kind_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  std::vector<double> sb_cdf_;
  double sigma2_ = 0.0;
};

/// Survival probabilities q_j = P(a GW tree reaches generation j).
class SurvivalTable {
 public:
  SurvivalTable() = default;

  SurvivalTable(const OffspringDistribution& dist, std::size_t n) { extend(dist, n); }

  /// Grows the table to hold q_0..q_n (no-op if already that long).
  void extend(const OffspringDistribution& dist, std::size_t n) {
    if (q_.empty()) {
      q_.push_back(1.0);
      exact_.push_back(1.0L);
    }
    while (q_.size() <= n) {
      const long double next = dist.survival_step(exact_.back());
      exact_.push_back(next);
      q_.push_back(static_cast<double>(next));
    }
  }

  std::size_t horizon() const { return q_.empty() ? 0 : q_.size() - 1; }
  double operator[](std::size_t j) const { return q_.at(j); }
  long double precise(std::size_t j) const { return exact_.at(j); }
  const std::vector<double>& values() const { return q_; }

 private:
  std::vector<double> q_;
  std::vector<long double> exact_;
};

inline SurvivalTable survival_table(const OffspringDistribution& dist, std::size_t n) {
  return SurvivalTable(dist, n);
}

/// P(eps_j = 1): at least one of the N^_j - 1 trees grafted at spine vertex
/// u_j reaches generation 0, i.e. 1 - g'(1 - q_{j-1}).
inline double graft_reach_probability(const OffspringDistribution& dist,
                                      const SurvivalTable& table, std::size_t j) {
  if (j == 0) throw std::invalid_argument("graft_reach_probability: j must be >= 1");
  return static_cast<double>(dist.size_biased_survival_step(table.precise(j - 1)));
}

}  // namespace hmgw
