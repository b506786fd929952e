#pragma once

// The continuum reduced tree Delta, its size-biased version Delta-hat, and
// the Yule tree.
//
// Delta: the root segment starts at height 0 and branches at Y = U; a
// segment starting at height a branches at Y = a + U (1 - a) into two
// independent segments starting at Y. Truncated at 1 - eps, every branch
// with Y >= 1 - eps becomes a leaf ending at 1 - eps.
//
// Random numbers are consumed in depth-first order, left subtree first, and
// the streaming evaluators below follow exactly the same order, so they
// return the same value as sampling a skeleton and evaluating it.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "hmgw/gw_tree.hpp"
#include "hmgw/plane_tree.hpp"
#include "hmgw/rng.hpp"

namespace hmgw {

inline constexpr std::size_t kDefaultContinuumBudget = 10'000'000;

struct ContinuumSkeleton {
  struct Node {
    NodeId parent = kNoNode;
    double start = 0.0;   // height where the segment begins
    double height = 0.0;  // sampled branch height; >= 1 - eps on leaves
    NodeId left = kNoNode;
    NodeId right = kNoNode;
    bool is_leaf() const { return left == kNoNode; }
  };
  double eps = 0.0;
  std::vector<Node> nodes;  // nodes[0] is the root segment

  double cutoff() const { return 1.0 - eps; }
  /// Branch height clipped to the truncation level.
  double branch_height(NodeId v) const {
    return std::min(nodes[static_cast<std::size_t>(v)].height, cutoff());
  }
  std::size_t leaf_count() const {
    std::size_t c = 0;
    for (const auto& n : nodes) c += n.is_leaf();
    return c;
  }
};

namespace detail {

inline void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("truncation eps must lie in (0, 1/2)");
}

template <class Rng>
ContinuumSkeleton sample_delta_from(double start, double eps, Rng& rng, std::size_t budget) {
  check_eps(eps);
  ContinuumSkeleton s;
  s.eps = eps;
  const double cut = 1.0 - eps;
  s.nodes.push_back({kNoNode, start, 0.0, kNoNode, kNoNode});
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    auto a = s.nodes[static_cast<std::size_t>(v)].start;
    const double y = a + rng::uniform01(rng) * (1.0 - a);
    s.nodes[static_cast<std::size_t>(v)].height = y;
    if (y >= cut) continue;
    if (s.nodes.size() + 2 > budget) throw BudgetExceeded("continuum skeleton node budget exceeded");
    const auto l = static_cast<NodeId>(s.nodes.size());
    s.nodes.push_back({v, y, 0.0, kNoNode, kNoNode});
    s.nodes.push_back({v, y, 0.0, kNoNode, kNoNode});
    s.nodes[static_cast<std::size_t>(v)].left = l;
    s.nodes[static_cast<std::size_t>(v)].right = l + 1;
    stack.push_back(l + 1);
    stack.push_back(l);
  }
  return s;
}

// Conductance of a Delta copy whose root segment starts at `start`,
// generated on the fly; nothing but the current path is stored.
template <class Rng>
double stream_delta_conductance(double start, double eps, Rng& rng, std::size_t budget) {
  struct Frame {
    double a, y, sum;
    bool left_done;
  };
  const double cut = 1.0 - eps;
  std::vector<Frame> stack;
  stack.push_back({start, 0.0, 0.0, false});
  std::size_t nodes = 1;
  double result = 0.0;
  bool have_result = false;
  for (;;) {
    if (!have_result) {
      Frame& f = stack.back();
      f.y = f.a + rng::uniform01(rng) * (1.0 - f.a);
      if (f.y >= cut) {
        result = 1.0 / (cut - f.a);
        have_result = true;
        stack.pop_back();
      } else {
        if ((nodes += 2) > budget) throw BudgetExceeded("continuum skeleton node budget exceeded");
        stack.push_back({f.y, 0.0, 0.0, false});
      }
      continue;
    }
    if (stack.empty()) return result;
    Frame& p = stack.back();
    if (!p.left_done) {
      p.sum = result;
      p.left_done = true;
      have_result = false;
      stack.push_back({p.y, 0.0, 0.0, false});
    } else {
      result = 1.0 / ((p.y - p.a) + 1.0 / (p.sum + result));
      stack.pop_back();
    }
  }
}

}  // namespace detail

template <class Rng>
ContinuumSkeleton sample_delta(double eps, Rng& rng, std::size_t budget = kDefaultContinuumBudget) {
  return detail::sample_delta_from(0.0, eps, rng, budget);
}

/// C(Delta_eps) by series/parallel recursion. A coarser truncation
/// eps_view >= skel.eps may be requested; branches above 1 - eps_view are cut.
inline double conductance_delta(const ContinuumSkeleton& s, double eps_view = -1.0) {
  const double eps = eps_view < 0.0 ? s.eps : eps_view;
  if (eps < s.eps) throw std::invalid_argument("conductance_delta: cannot refine a truncated skeleton");
  const double cut = 1.0 - eps;
  std::vector<double> c(s.nodes.size(), 0.0);
  // Children always follow their parent in storage order.
  for (auto v = static_cast<std::ptrdiff_t>(s.nodes.size()) - 1; v >= 0; --v) {
    const auto& n = s.nodes[static_cast<std::size_t>(v)];
    if (n.start >= cut) continue;  // lies above the coarser cut
    if (n.is_leaf() || n.height >= cut) {
      c[static_cast<std::size_t>(v)] = 1.0 / (cut - n.start);
    } else {
      const double par = c[static_cast<std::size_t>(n.left)] + c[static_cast<std::size_t>(n.right)];
      c[static_cast<std::size_t>(v)] = 1.0 / ((n.height - n.start) + 1.0 / par);
    }
  }
  return c[0];
}

/// C(Delta) to relative accuracy tol, using 0 <= C(Delta_eps) - C(Delta)
/// <= eps C(Delta_eps) with eps = tol/2.
template <class Rng>
double conductance_delta_certified(double tol, Rng& rng, std::size_t budget = kDefaultContinuumBudget) {
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("tolerance must lie in (0, 1)");
  return detail::stream_delta_conductance(0.0, tol / 2.0, rng, budget);
}

struct SpineSkeleton {
  double eps = 0.0;
  std::vector<double> heights;  // graft heights Y^_1 < Y^_2 < ... < 1 - eps
  std::vector<Side> sides;
  std::vector<ContinuumSkeleton> grafts;  // Delta copies starting at heights[k]
};

/// V with density 2(1 - x) on [0, 1].
template <class Rng>
double sample_v(Rng& rng) {
  return 1.0 - std::sqrt(1.0 - rng::uniform01(rng));
}

namespace detail {

template <class Rng>
void sample_spine(double eps, Rng& rng, std::vector<double>& heights, std::vector<Side>& sides) {
  check_eps(eps);
  double y = 0.0;
  for (;;) {
    y += (1.0 - y) * sample_v(rng);
    if (y >= 1.0 - eps) break;
    heights.push_back(y);
  }
  for (std::size_t k = 0; k < heights.size(); ++k)
    sides.push_back(rng::uniform01(rng) < 0.5 ? Side::left : Side::right);
}

// Folds graft conductances into the spine from the top down.
inline double spine_conductance(double eps, const std::vector<double>& heights,
                                const std::vector<double>& graft_c) {
  const double cut = 1.0 - eps;
  double above = 1.0 / (cut - (heights.empty() ? 0.0 : heights.back()));
  for (std::size_t k = heights.size(); k-- > 0;) {
    const double below = k == 0 ? 0.0 : heights[k - 1];
    above = 1.0 / ((heights[k] - below) + 1.0 / (graft_c[k] + above));
  }
  return above;
}

}  // namespace detail

template <class Rng>
SpineSkeleton sample_delta_hat(double eps, Rng& rng, std::size_t budget = kDefaultContinuumBudget) {
  SpineSkeleton s;
  s.eps = eps;
  detail::sample_spine(eps, rng, s.heights, s.sides);
  for (double h : s.heights) s.grafts.push_back(detail::sample_delta_from(h, eps, rng, budget));
  return s;
}

inline double conductance_delta_hat(const SpineSkeleton& s) {
  std::vector<double> gc;
  gc.reserve(s.grafts.size());
  for (const auto& g : s.grafts) gc.push_back(conductance_delta(g));
  return detail::spine_conductance(s.eps, s.heights, gc);
}

/// C(Delta-hat) to relative accuracy tol, using
/// 0 <= C(Delta-hat_eps) - C(Delta-hat) <= 2 eps C(Delta-hat) with eps = tol/4.
template <class Rng>
double conductance_delta_hat_certified(double tol, Rng& rng, std::size_t budget = kDefaultContinuumBudget) {
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("tolerance must lie in (0, 1)");
  const double eps = tol / 4.0;
  std::vector<double> heights;
  std::vector<Side> sides;
  detail::sample_spine(eps, rng, heights, sides);
  std::vector<double> gc;
  gc.reserve(heights.size());
  for (double h : heights) gc.push_back(detail::stream_delta_conductance(h, eps, rng, budget));
  return detail::spine_conductance(eps, heights, gc);
}

/// `node_id parent_id branch_height` per line.
inline void dump_skeleton(std::ostream& os, const ContinuumSkeleton& s) {
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < s.nodes.size(); ++i)
    os << i << ' ' << s.nodes[i].parent << ' ' << s.branch_height(static_cast<NodeId>(i)) << '\n';
  os.precision(old);
}

struct YuleSample {
  std::uint64_t count = 1;  // #Gamma_r
  double first_split = 0.0;  // time of the root's split (may exceed r)
};

/// Yule tree run to time r: each particle splits in two at rate 1.
template <class Rng>
YuleSample sample_yule(double r, Rng& rng, std::uint64_t budget = 100'000'000) {
  if (!(r >= 0.0)) throw std::invalid_argument("sample_yule: r must be >= 0");
  YuleSample y;
  double t = 0.0;
  for (;;) {
    const double dt = rng::exponential(rng, static_cast<double>(y.count));
    if (y.count == 1) y.first_split = t + dt;
    t += dt;
    if (t > r) return y;
    if (++y.count > budget) throw BudgetExceeded("sample_yule: population budget exceeded");
  }
}

template <class Rng>
std::uint64_t sample_yule_count(double r, Rng& rng) {
  return sample_yule(r, rng).count;
}

}  // namespace hmgw
