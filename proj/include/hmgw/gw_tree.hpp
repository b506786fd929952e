#pragma once

// Samplers for Galton-Watson trees and their spine decompositions.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmgw/offspring.hpp"
#include "hmgw/plane_tree.hpp"
#include "hmgw/rng.hpp"

namespace hmgw {

/// Breadth-first GW tree; vertices at depth `height_cap` get no children.
/// A negative cap means no cap (the critical tree is a.s. finite).
template <class Rng>
void sample_gw_into(PlaneTree& t, const OffspringDistribution& dist, Rng& rng, int height_cap,
                    std::size_t budget = kDefaultNodeBudget) {
  t.reset();
  for (NodeId v = 0; static_cast<std::size_t>(v) < t.size(); ++v) {
    if (height_cap >= 0 && t.depth(v) >= height_cap) break;
    const int k = dist.sample(rng);
    if (k > 0) t.append_children(v, k, budget);
  }
}

template <class Rng>
PlaneTree sample_gw(const OffspringDistribution& dist, Rng& rng, int height_cap = -1,
                    std::size_t budget = kDefaultNodeBudget) {
  PlaneTree t;
  sample_gw_into(t, dist, rng, height_cap, budget);
  return t;
}

struct ConditionedSample {
  PlaneTree tree;
  std::uint64_t rejections = 0;
};

inline constexpr std::uint64_t kDefaultRejectionBudget = 100'000'000;

/// GW tree conditioned to reach generation n, restricted to generations <= n.
/// Exact rejection sampling: whole trees are regenerated until one survives.
template <class Rng>
ConditionedSample sample_conditioned(const OffspringDistribution& dist, int n, Rng& rng,
                                     std::uint64_t max_rejections = kDefaultRejectionBudget,
                                     std::size_t budget = kDefaultNodeBudget) {
  if (n < 1) throw std::invalid_argument("sample_conditioned: n must be >= 1");
  ConditionedSample out;
  for (;;) {
    sample_gw_into(out.tree, dist, rng, n, budget);
    if (out.tree.height() == n) return out;
    if (++out.rejections > max_rejections)
      throw BudgetExceeded("sample_conditioned: rejection budget exceeded");
  }
}

/// Offspring law of a vertex that is known to have descendants r generations
/// below it, counting only the children that themselves have descendants
/// r generations below the vertex:
///   P(K = k) = sum_N theta(N) C(N,k) q^k (1-q)^(N-k) / q_r,  q = q_{r-1}.
/// Used to grow reduced trees directly, without rejection.
class ReducedBranching {
 public:
  ReducedBranching(OffspringDistribution dist, std::size_t horizon)
      : dist_(std::move(dist)), table_(dist_, horizon) {
    const int kmax = dist_.max_offspring();
    log_binom_.assign(static_cast<std::size_t>(kmax + 1) * (kmax + 1), 0.0L);
    for (int nn = 0; nn <= kmax; ++nn)
      for (int k = 0; k <= nn; ++k)
        log_binom_[idx(nn, k)] = std::lgamma(nn + 1.0L) - std::lgamma(k + 1.0L) -
                                 std::lgamma(nn - k + 1.0L);
    cdf_.resize(horizon + 1);
    for (std::size_t r = 1; r <= horizon; ++r) cdf_[r] = build(r);
  }

  const OffspringDistribution& distribution() const { return dist_; }
  const SurvivalTable& survival() const { return table_; }
  std::size_t horizon() const { return table_.horizon(); }

  /// Number of surviving children of a vertex with remaining height r >= 1.
  template <class Rng>
  int sample(std::size_t r, Rng& rng) const {
    const auto& c = cdf_.at(r);
    const double u = rng::uniform01(rng);
    std::size_t i = 0;
    while (i + 1 < c.size() && c[i] <= u) ++i;
    return static_cast<int>(i) + 1;
  }

  /// P(K = k) for remaining height r (for tests).
  double probability(std::size_t r, int k) const {
    const auto& c = cdf_.at(r);
    if (k < 1 || static_cast<std::size_t>(k) > c.size()) return 0.0;
    return c[static_cast<std::size_t>(k - 1)] - (k > 1 ? c[static_cast<std::size_t>(k - 2)] : 0.0);
  }

 private:
  std::size_t idx(int nn, int k) const {
    return static_cast<std::size_t>(nn) * static_cast<std::size_t>(dist_.max_offspring() + 1) +
           static_cast<std::size_t>(k);
  }

  std::vector<double> build(std::size_t r) const {
    const long double q = table_.precise(r - 1);
    const int kmax = dist_.max_offspring();
    std::vector<long double> p(static_cast<std::size_t>(kmax), 0.0L);
    if (q >= 1.0L) {
      for (int k = 1; k <= kmax; ++k) p[static_cast<std::size_t>(k - 1)] = dist_.pmf(k);
    } else {
      const long double lq = std::log(q), l1q = std::log1p(-q);
      for (int k = 1; k <= kmax; ++k) {
        long double s = 0.0L;
        for (int nn = k; nn <= kmax; ++nn) {
          if (dist_.pmf(nn) == 0.0) continue;
          s += dist_.pmf(nn) * std::exp(log_binom_[idx(nn, k)] + k * lq + (nn - k) * l1q);
        }
        p[static_cast<std::size_t>(k - 1)] = s;
      }
    }
    long double total = 0.0L;
    for (auto v : p) total += v;
    std::vector<double> cdf;
    long double acc = 0.0L;
    for (auto v : p) {
      acc += v;
      cdf.push_back(static_cast<double>(acc / total));
      if (total - acc < 1e-18L * total) break;
    }
    cdf.back() = 1.0;
    return cdf;
  }

  OffspringDistribution dist_;
  SurvivalTable table_;
  std::vector<long double> log_binom_;
  std::vector<std::vector<double>> cdf_;
};

/// Reduced tree of a GW tree conditioned to reach generation n, grown
/// directly from the surviving-children law (same law as
/// reduce(sample_conditioned(...).tree, n)).
template <class Rng>
ReducedTree sample_reduced_conditioned(const ReducedBranching& branching, int n, Rng& rng,
                                       std::size_t budget = kDefaultNodeBudget) {
  if (n < 1) throw std::invalid_argument("sample_reduced_conditioned: n must be >= 1");
  if (static_cast<std::size_t>(n) > branching.horizon())
    throw std::invalid_argument("sample_reduced_conditioned: n beyond branching horizon");
  ReducedTree out;
  out.target_height = n;
  for (NodeId v = 0; static_cast<std::size_t>(v) < out.tree.size(); ++v) {
    const int d = out.tree.depth(v);
    if (d >= n) break;
    out.tree.append_children(v, branching.sample(static_cast<std::size_t>(n - d), rng), budget);
  }
  out.origin_ids.resize(out.tree.size());
  for (std::size_t i = 0; i < out.origin_ids.size(); ++i) out.origin_ids[i] = static_cast<NodeId>(i);
  return out;
}

// ---------------------------------------------------------------------------
// Spine decompositions

enum class Side : std::uint8_t { left, right };

struct GraftRoot {
  NodeId node = kNoNode;
  Side side = Side::left;
};

struct SpineGrafts {
  int left = 0;   // L_j: grafted trees left of the spine
  int right = 0;  // R_j
  std::vector<GraftRoot> roots;  // materialized graft roots
};

/// The finite tree above u_n in the backward size-biased tree, pruned at
/// generation 0 (depth n here). spine[j] is u_j, at depth n - j; u_n is the
/// root and u_0 is childless.
struct SpinePrefix {
  PlaneTree tree;
  int n = 0;
  std::vector<NodeId> spine;
  std::vector<SpineGrafts> grafts;  // indexed by j; grafts[0] is empty
  /// True when only grafts reaching generation 0 were materialized (each in
  /// reduced form). Hitting probabilities are unaffected by the omission.
  bool surviving_grafts_only = false;

  NodeId u(int j) const { return spine.at(static_cast<std::size_t>(j)); }
};

namespace detail {

// Grows the spine prefix breadth-first. In full mode every graft is a plain
// GW tree cut at depth n; in reduced mode each of the N^_j - 1 grafts at u_j
// is kept with probability q_{j-1} and then grown with the surviving-children
// law.
template <class Rng>
SpinePrefix grow_spine_prefix(const OffspringDistribution& dist, int n, Rng& rng,
                              const ReducedBranching* branching, std::size_t budget) {
  if (n < 1) throw std::invalid_argument("spine prefix: n must be >= 1");
  if (branching && static_cast<std::size_t>(n) > branching->horizon())
    throw std::invalid_argument("spine prefix: n beyond branching horizon");
  SpinePrefix p;
  p.n = n;
  p.surviving_grafts_only = branching != nullptr;
  p.spine.assign(static_cast<std::size_t>(n) + 1, kNoNode);
  p.grafts.resize(static_cast<std::size_t>(n) + 1);
  p.spine[static_cast<std::size_t>(n)] = p.tree.root();
  auto& t = p.tree;
  std::vector<GraftRoot> kept;
  for (NodeId v = 0; static_cast<std::size_t>(v) < t.size(); ++v) {
    const int d = t.depth(v);
    if (d >= n) break;
    const int j = n - d;
    if (p.spine[static_cast<std::size_t>(j)] == v) {
      const int nhat = dist.sample_size_biased(rng);
      const int left = static_cast<int>(rng::uniform_index(rng, static_cast<std::uint64_t>(nhat)));
      auto& g = p.grafts[static_cast<std::size_t>(j)];
      g.left = left;
      g.right = nhat - 1 - left;
      kept.clear();
      int kept_left = 0;
      for (int i = 0; i < nhat - 1; ++i) {
        const Side side = i < left ? Side::left : Side::right;
        const bool keep = !branching || rng::uniform01(rng) < branching->survival()[j - 1];
        if (keep) {
          kept.push_back({kNoNode, side});
          kept_left += side == Side::left;
        }
      }
      const auto count = static_cast<int>(kept.size()) + 1;
      const NodeId first = t.append_children(v, count, budget);
      NodeId c = first;
      for (auto& k : kept) {
        if (c == first + kept_left) ++c;  // spine slot
        k.node = c++;
      }
      p.spine[static_cast<std::size_t>(j - 1)] = first + kept_left;
      g.roots = kept;
    } else if (branching) {
      t.append_children(v, branching->sample(static_cast<std::size_t>(j), rng), budget);
    } else {
      const int k = dist.sample(rng);
      if (k > 0) t.append_children(v, k, budget);
    }
  }
  return p;
}

}  // namespace detail

/// Backward size-biased tree above u_n; every graft grown as a GW tree and
/// cut at generation 0.
template <class Rng>
SpinePrefix sample_backward_prefix(const OffspringDistribution& dist, int n, Rng& rng,
                                   std::size_t budget = kDefaultNodeBudget) {
  return detail::grow_spine_prefix(dist, n, rng, nullptr, budget);
}

/// Same law on everything that can reach generation 0; grafts that die out
/// before generation 0 are never built, surviving ones are built reduced.
template <class Rng>
SpinePrefix sample_backward_prefix_reduced(const ReducedBranching& branching, int n, Rng& rng,
                                           std::size_t budget = kDefaultNodeBudget) {
  return detail::grow_spine_prefix(branching.distribution(), n, rng, &branching, budget);
}

struct KestenPrefix {
  PlaneTree tree;
  std::vector<NodeId> spine;  // spine[d] = v_d at depth d; spine[0] is the root
};

/// First n generations of the size-biased (Kesten) tree.
template <class Rng>
KestenPrefix sample_kesten_prefix(const OffspringDistribution& dist, int n, Rng& rng,
                                  std::size_t budget = kDefaultNodeBudget) {
  auto p = detail::grow_spine_prefix(dist, n, rng, nullptr, budget);
  KestenPrefix k;
  k.spine.resize(static_cast<std::size_t>(n) + 1);
  for (int d = 0; d <= n; ++d) k.spine[static_cast<std::size_t>(d)] = p.u(n - d);
  k.tree = std::move(p.tree);
  return k;
}

// ---------------------------------------------------------------------------
// Marks on the spine

/// eps_j = 1 iff a tree grafted at u_j reaches generation 0. The marks are
/// M_1 < M_2 < ... (the j with eps_j = 1), L_k = M_k - M_{k-1}, M_0 = 0.
struct MSequence {
  int n = 0;
  std::vector<char> eps;  // eps[j] for j = 1..n; eps[0] unused
  std::vector<int> M;     // M[0] = 0, then marks <= n
  std::optional<int> next_mark;  // M_{k_n + 1} > n, when sampled

  int k_n() const { return static_cast<int>(M.size()) - 1; }
  int L(int k) const {
    if (k >= 1 && k <= k_n()) return M[static_cast<std::size_t>(k)] - M[static_cast<std::size_t>(k - 1)];
    if (k == k_n() + 1 && next_mark) return *next_mark - M.back();
    throw std::out_of_range("MSequence::L: index " + std::to_string(k));
  }
  int mark(int k) const {
    if (k >= 0 && k <= k_n()) return M[static_cast<std::size_t>(k)];
    if (k == k_n() + 1 && next_mark) return *next_mark;
    throw std::out_of_range("MSequence::mark: index " + std::to_string(k));
  }

  static MSequence from_indicators(std::vector<char> eps, int n) {
    MSequence m;
    m.n = n;
    m.eps = std::move(eps);
    m.M.push_back(0);
    for (int j = 1; j <= n; ++j)
      if (m.eps[static_cast<std::size_t>(j)]) m.M.push_back(j);
    return m;
  }
};

inline MSequence extract_m_sequence(const SpinePrefix& p) {
  const auto alive = reaches_depth(p.tree, p.n);
  std::vector<char> eps(static_cast<std::size_t>(p.n) + 1, 0);
  for (int j = 1; j <= p.n; ++j)
    for (const auto& g : p.grafts[static_cast<std::size_t>(j)].roots)
      if (alive[static_cast<std::size_t>(g.node)]) eps[static_cast<std::size_t>(j)] = 1;
  return MSequence::from_indicators(std::move(eps), p.n);
}

/// P(eps_j = 1) for j = 1..n (index 0 unused).
inline std::vector<double> mark_probabilities(const OffspringDistribution& dist,
                                              const SurvivalTable& table, int n) {
  if (table.horizon() + 1 < static_cast<std::size_t>(n))
    throw std::invalid_argument("mark_probabilities: survival table too short");
  std::vector<double> p(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = 1; j <= n; ++j) p[static_cast<std::size_t>(j)] = graft_reach_probability(dist, table, static_cast<std::size_t>(j));
  return p;
}

/// Marks drawn as independent Bernoulli(P(eps_j = 1)), without trees.
template <class Rng>
MSequence simulate_kn_fast(const std::vector<double>& mark_prob, int n, Rng& rng) {
  if (static_cast<std::size_t>(n) >= mark_prob.size())
    throw std::invalid_argument("simulate_kn_fast: probabilities shorter than n");
  std::vector<char> eps(static_cast<std::size_t>(n) + 1, 0);
  for (int j = 1; j <= n; ++j) eps[static_cast<std::size_t>(j)] = rng::uniform01(rng) < mark_prob[static_cast<std::size_t>(j)];
  return MSequence::from_indicators(std::move(eps), n);
}

template <class Rng>
MSequence simulate_kn_fast(const OffspringDistribution& dist, int n, Rng& rng) {
  const SurvivalTable table(dist, static_cast<std::size_t>(n));
  return simulate_kn_fast(mark_probabilities(dist, table, n), n, rng);
}

/// Samples M_{k_n+1}, the first mark beyond n. The eps_j for j > n are
/// independent of the prefix. mark_prob[j] = P(eps_j = 1) is used where
/// available (see mark_probabilities); further out the survival recursion is
/// continued from the end of the table.
template <class Rng>
void sample_next_mark(MSequence& m, const OffspringDistribution& dist, const SurvivalTable& table,
                      const std::vector<double>& mark_prob, Rng& rng, long long max_steps = 200'000'000) {
  std::size_t qidx = table.horizon();
  long double q = table.precise(qidx);
  for (long long j = m.n + 1; j - m.n <= max_steps; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    double p;
    if (ju < mark_prob.size()) {
      p = mark_prob[ju];
    } else if (ju - 1 <= table.horizon()) {
      p = graft_reach_probability(dist, table, ju);
    } else {
      while (qidx < ju - 1) {
        q = dist.survival_step(q);
        ++qidx;
      }
      p = static_cast<double>(dist.size_biased_survival_step(q));
    }
    if (rng::uniform01(rng) < p) {
      m.next_mark = static_cast<int>(j);
      return;
    }
  }
  throw BudgetExceeded("sample_next_mark: no mark within step budget");
}

template <class Rng>
void sample_next_mark(MSequence& m, const OffspringDistribution& dist, const SurvivalTable& table, Rng& rng) {
  sample_next_mark(m, dist, table, {}, rng);
}

}  // namespace hmgw
