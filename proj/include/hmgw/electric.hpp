#pragma once

// Conductances and harmonic measure on finite trees.
//
// Every edge has unit resistance. For a target depth n, a vertex at depth n
// is on the boundary. A vertex v below the boundary has conductance C(v) to
// the boundary through its own subtree, and its series contribution seen
// from the parent is s(v) = C(v)/(1 + C(v)), with s(v) = 1 on the boundary.
// Subtrees with no boundary vertex get C = s = 0, so unreduced trees are
// handled too.

#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmgw/gw_tree.hpp"
#include "hmgw/plane_tree.hpp"

namespace hmgw {

struct ConductanceMap {
  int target_height = 0;
  std::vector<double> C;       // conductance to the boundary; 0 on boundary vertices
  std::vector<double> series;  // s(v)
  std::vector<char> boundary;

  bool is_boundary(NodeId v) const { return boundary[static_cast<std::size_t>(v)] != 0; }
  double conductance(NodeId v) const { return C[static_cast<std::size_t>(v)]; }
  double series_contribution(NodeId v) const { return series[static_cast<std::size_t>(v)]; }
};

inline ConductanceMap subtree_conductances(const PlaneTree& t, int n) {
  if (n < 0) throw std::invalid_argument("subtree_conductances: negative target height");
  ConductanceMap m;
  m.target_height = n;
  m.C.assign(t.size(), 0.0);
  m.series.assign(t.size(), 0.0);
  m.boundary.assign(t.size(), 0);
  for (auto v = static_cast<NodeId>(t.size()) - 1; v >= 0; --v) {
    const auto i = static_cast<std::size_t>(v);
    const int d = t.depth(v);
    if (d > n) continue;
    if (d == n) {
      m.boundary[i] = 1;
      m.series[i] = 1.0;
      continue;
    }
    double c = 0.0;
    for (NodeId ch : t.children(v)) c += m.series[static_cast<std::size_t>(ch)];
    m.C[i] = c;
    m.series[i] = c / (1.0 + c);
  }
  return m;
}

inline ConductanceMap subtree_conductances(const ReducedTree& r) {
  for (std::size_t v = 0; v < r.tree.size(); ++v) {
    const auto id = static_cast<NodeId>(v);
    if (r.tree.depth(id) < r.target_height && r.tree.is_leaf(id))
      throw std::invalid_argument("subtree_conductances: reduced tree has a leaf below target height");
  }
  return subtree_conductances(r.tree, r.target_height);
}

/// C_i(T): probability that a walk started at the root reaches level i before
/// a phantom vertex joined to the root by a unit edge. Equal to 1 for i = 0.
inline double conductance_to_level(const PlaneTree& t, int i) {
  if (i < 0) throw std::invalid_argument("conductance_to_level: negative level");
  if (i == 0) return 1.0;
  const auto m = subtree_conductances(t, i);
  const double c = m.C[0];
  if (!(c > 0.0)) throw std::invalid_argument("conductance_to_level: no vertex at depth " + std::to_string(i));
  return c / (1.0 + c);
}

inline double conductance_to_level(const ReducedTree& r, int i) {
  return conductance_to_level(r.tree, i);
}

struct HarmonicMeasure {
  int target_height = 0;
  std::vector<NodeId> vertices;  // boundary vertices in index order
  std::vector<double> mass;

  double total() const {
    long double s = 0.0L;
    for (double x : mass) s += x;
    return static_cast<double>(s);
  }
};

/// Exit distribution at level n of simple random walk from the root, as the
/// unit current split by series contributions.
inline HarmonicMeasure harmonic_measure(const PlaneTree& t, int n) {
  const auto m = subtree_conductances(t, n);
  if (n > 0 && !(m.C[0] > 0.0))
    throw std::invalid_argument("harmonic_measure: no vertex at depth " + std::to_string(n));
  std::vector<double> flow(t.size(), 0.0);
  flow[0] = 1.0;
  HarmonicMeasure h;
  h.target_height = n;
  for (NodeId v = 0; static_cast<std::size_t>(v) < t.size(); ++v) {
    const auto i = static_cast<std::size_t>(v);
    const int d = t.depth(v);
    if (d > n) break;
    if (d == n) {
      h.vertices.push_back(v);
      h.mass.push_back(flow[i]);
      continue;
    }
    if (flow[i] == 0.0) continue;
    const double share = flow[i] / m.C[i];
    for (NodeId c : t.children(v)) flow[static_cast<std::size_t>(c)] = share * m.series[static_cast<std::size_t>(c)];
  }
  return h;
}

inline HarmonicMeasure harmonic_measure(const ReducedTree& r) {
  return harmonic_measure(r.tree, r.target_height);
}

namespace detail {

// Leaf-peeling elimination for the walk killed at depth n. For a vertex v
// other than the root, the hitting probability of a fixed target satisfies
// h(v) = a(v) + b(v) h(parent(v)), where b(v) = 1/(deg v - sum_c b(c)).
// Returns b for every vertex; vertices deeper than n are ignored and
// boundary vertices get b = 0.
inline std::vector<double> peel_coefficients(const PlaneTree& t, int n) {
  std::vector<double> b(t.size(), 0.0);
  for (auto v = static_cast<NodeId>(t.size()) - 1; v > 0; --v) {
    const int d = t.depth(v);
    if (d >= n) continue;
    double sb = 0.0;
    for (NodeId c : t.children(v)) sb += b[static_cast<std::size_t>(c)];
    const double deg = 1.0 + t.child_count(v);
    b[static_cast<std::size_t>(v)] = 1.0 / (deg - sb);
  }
  return b;
}

}  // namespace detail

/// Hitting distribution of level n from the root by exact elimination of the
/// absorbing-chain equations h(v) = mean of h over neighbours.
inline HarmonicMeasure hitting_probabilities_linear_solve(const PlaneTree& t, int n) {
  if (n < 1) throw std::invalid_argument("hitting_probabilities_linear_solve: n must be >= 1");
  const auto b = detail::peel_coefficients(t, n);
  // Pivot of each vertex: 1/(deg - sum_c b(c)); for the root deg = #children.
  std::vector<double> pivot(t.size(), 0.0);
  for (NodeId v = 0; static_cast<std::size_t>(v) < t.size(); ++v) {
    if (t.depth(v) >= n) break;
    if (v == 0) {
      double sb = 0.0;
      for (NodeId c : t.children(v)) sb += b[static_cast<std::size_t>(c)];
      const double denom = t.child_count(v) - sb;
      if (!(denom > 0.0)) throw std::invalid_argument("hitting_probabilities_linear_solve: level n unreachable");
      pivot[0] = 1.0 / denom;
    } else {
      pivot[static_cast<std::size_t>(v)] = b[static_cast<std::size_t>(v)];
    }
  }
  // mu(target) = product of pivots over its strict ancestors.
  std::vector<double> prod(t.size(), 0.0);
  prod[0] = 1.0;
  HarmonicMeasure h;
  h.target_height = n;
  for (NodeId v = 1; static_cast<std::size_t>(v) < t.size(); ++v) {
    const int d = t.depth(v);
    if (d > n) break;
    const NodeId p = t.parent(v);
    prod[static_cast<std::size_t>(v)] = prod[static_cast<std::size_t>(p)] * pivot[static_cast<std::size_t>(p)];
    if (d == n) {
      h.vertices.push_back(v);
      h.mass.push_back(prod[static_cast<std::size_t>(v)]);
    }
  }
  return h;
}

/// CSV with header `leaf_id,depth,mass`.
inline void write_harmonic_csv(std::ostream& os, const PlaneTree& t, const HarmonicMeasure& h) {
  os << "leaf_id,depth,mass\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < h.vertices.size(); ++i)
    os << h.vertices[i] << ',' << t.depth(h.vertices[i]) << ',' << h.mass[i] << '\n';
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Backward tree

/// Probabilities that a walk on the backward prefix started at u_{M_k} hits
/// generation 0 at u_0 before visiting u_{M_{k+1}}, for every admissible k.
/// Computed by elimination on the prefix; the subtree coefficients do not
/// depend on k, so one pass serves all k.
class BackwardHitSolver {
 public:
  BackwardHitSolver(const SpinePrefix& p, const MSequence& m) : p_(p), m_(m) {
    const auto& t = p.tree;
    const int n = p.n;
    a_.assign(t.size(), 0.0);
    b_.assign(t.size(), 0.0);
    const NodeId u0 = p.u(0);
    for (auto v = static_cast<NodeId>(t.size()) - 1; v > 0; --v) {
      const auto i = static_cast<std::size_t>(v);
      if (t.depth(v) >= n) {
        a_[i] = v == u0 ? 1.0 : 0.0;
        continue;
      }
      double sa = 0.0, sb = 0.0;
      for (NodeId c : t.children(v)) {
        sa += a_[static_cast<std::size_t>(c)];
        sb += b_[static_cast<std::size_t>(c)];
      }
      b_[i] = 1.0 / (1.0 + t.child_count(v) - sb);
      a_[i] = sa * b_[i];
    }
  }

  /// Requires 1 <= k and M_{k+1} <= n.
  double operator()(int k) const {
    if (k < 1 || k + 1 > m_.k_n())
      throw std::out_of_range("backward_hit_prob: need 1 <= k and M_{k+1} <= n");
    const int top = m_.mark(k + 1), start = m_.mark(k);
    double h = 0.0;  // at u_{M_{k+1}}, absorbing
    for (int j = top - 1; j >= start; --j) {
      const auto i = static_cast<std::size_t>(p_.u(j));
      h = a_[i] + b_[i] * h;
    }
    return h;
  }

 private:
  const SpinePrefix& p_;
  const MSequence& m_;
  std::vector<double> a_, b_;
};

inline double backward_hit_prob(const SpinePrefix& p, const MSequence& m, int k) {
  return BackwardHitSolver(p, m)(k);
}

struct SpineStats {
  std::vector<double> c;    // c[k], k = 1..k_n
  std::vector<double> h;    // h[k]
  std::vector<double> ell;  // ell[k] = 1/L_k, k = 1..k_n (+1 if the next mark is known)
  std::vector<double> Q;    // Q[k], k = 2..last; NaN where undefined
  double p1 = std::nan("");  // needs M_2 (or the next mark when k_n = 1)

  int k_n() const { return static_cast<int>(c.size()) - 1; }
  /// Largest k with Q_k defined.
  int last_q() const { return static_cast<int>(Q.size()) - 1; }
};

/// Per-mark electrical quantities along the spine:
///   c_k  conductance of the grafts at u_{M_k} to generation 0 (parallel sum);
///   h_k  C_{M_k - 1} of the tree below u_{M_k - 1};
///   Q_k  = log(1 + (c_k + l_{k+1})/l_k - l_k/(l_k + c_{k-1} + h_{k-1})).
/// Q_{k_n} is available only when m.next_mark is set.
inline SpineStats spine_statistics(const SpinePrefix& p, const MSequence& m) {
  const int kn = m.k_n();
  if (kn < 1) throw std::invalid_argument("spine_statistics: no marks in range");
  const auto cm = subtree_conductances(p.tree, p.n);
  SpineStats s;
  s.c.assign(static_cast<std::size_t>(kn) + 1, 0.0);
  s.h.assign(static_cast<std::size_t>(kn) + 1, 0.0);
  for (int k = 1; k <= kn; ++k) {
    const int mk = m.mark(k);
    double c = 0.0;
    for (const auto& g : p.grafts[static_cast<std::size_t>(mk)].roots) c += cm.series_contribution(g.node);
    s.c[static_cast<std::size_t>(k)] = c;
    s.h[static_cast<std::size_t>(k)] = mk - 1 == 0 ? 1.0 : cm.series_contribution(p.u(mk - 1));
  }
  const int nell = m.next_mark ? kn + 1 : kn;
  s.ell.assign(static_cast<std::size_t>(nell) + 1, 0.0);
  for (int k = 1; k <= nell; ++k) s.ell[static_cast<std::size_t>(k)] = 1.0 / m.L(k);
  if (nell >= 2) s.p1 = s.ell[1] / (s.ell[1] + s.c[1] + s.ell[2]);
  const int lastq = std::min(kn, nell - 1);
  s.Q.assign(static_cast<std::size_t>(std::max(lastq, 1)) + 1, std::nan(""));
  for (int k = 2; k <= lastq; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double l = s.ell[i];
    const double x = (s.c[i] + s.ell[i + 1]) / l - l / (l + s.c[i - 1] + s.h[i - 1]);
    s.Q[i] = std::log1p(x);
  }
  return s;
}

/// p_1 * exp(-(Q_2 + ... + Q_k)).
inline double hit_prob_from_product(const SpineStats& s, int k) {
  if (k < 1 || (k >= 2 && k > s.last_q()) || std::isnan(s.p1))
    throw std::out_of_range("hit_prob_from_product: k out of range");
  long double sum = 0.0L;
  for (int j = 2; j <= k; ++j) sum += s.Q[static_cast<std::size_t>(j)];
  return s.p1 * std::exp(static_cast<double>(-sum));
}

}  // namespace hmgw
