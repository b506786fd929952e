#pragma once

// Arena-backed finite plane trees.
//
// Nodes are stored in breadth-first order: a node's children occupy a
// contiguous index range, every child has a larger index than its parent,
// and depth is non-decreasing in the index. All samplers in this library
// build trees through PlaneTree::append_children in queue order, which is
// what guarantees that layout; the algorithms that walk trees bottom-up
// (reverse index order) rely on it.

#include <cstdint>
#include <limits>
#include <ostream>
#include <ranges>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmgw {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultNodeBudget = 100'000'000;

class PlaneTree {
 public:
  struct Node {
    NodeId parent = kNoNode;
    std::int32_t depth = 0;
    NodeId first_child = kNoNode;
    std::int32_t child_count = 0;
  };

  PlaneTree() { nodes_.push_back(Node{}); }

  /// Clears to a single root, keeping capacity.
  void reset() {
    nodes_.clear();
    nodes_.push_back(Node{});
  }

  NodeId root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId v) const { return nodes_[static_cast<std::size_t>(v)]; }
  NodeId parent(NodeId v) const { return node(v).parent; }
  int depth(NodeId v) const { return node(v).depth; }
  int child_count(NodeId v) const { return node(v).child_count; }
  bool is_leaf(NodeId v) const { return node(v).child_count == 0; }

  auto children(NodeId v) const {
    const Node& n = node(v);
    return std::views::iota(n.first_child, n.first_child + n.child_count);
  }

  int height() const { return nodes_.back().depth; }

  /// Appends `count` children to `v`. Must be called for parents in
  /// increasing index order, at most once per parent.
  NodeId append_children(NodeId v, int count, std::size_t budget = kDefaultNodeBudget) {
    if (nodes_.size() + static_cast<std::size_t>(count) > budget)
      throw BudgetExceeded("plane tree node budget exceeded (" + std::to_string(budget) + ")");
    if (nodes_.size() + static_cast<std::size_t>(count) >
        static_cast<std::size_t>(std::numeric_limits<NodeId>::max()))
      throw BudgetExceeded("plane tree exceeds index range");
    auto& p = nodes_[static_cast<std::size_t>(v)];
    const auto first = static_cast<NodeId>(nodes_.size());
    p.first_child = count > 0 ? first : kNoNode;
    p.child_count = count;
    const int d = p.depth + 1;
    for (int i = 0; i < count; ++i) nodes_.push_back(Node{v, d, kNoNode, 0});
    return first;
  }

  /// Number of vertices at the given depth.
  std::size_t level_size(int d) const {
    std::size_t c = 0;
    for (const auto& n : nodes_) c += (n.depth == d);
    return c;
  }

  std::vector<NodeId> level(int d) const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].depth == d) out.push_back(static_cast<NodeId>(i));
    return out;
  }

  /// Checks the arena invariants; throws std::logic_error on violation.
  void validate() const {
    if (nodes_.empty() || nodes_[0].parent != kNoNode || nodes_[0].depth != 0)
      throw std::logic_error("root must be node 0 with no parent and depth 0");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (i > 0) {
        if (n.parent < 0 || static_cast<std::size_t>(n.parent) >= i)
          throw std::logic_error("parent index must precede child");
        const auto& p = nodes_[static_cast<std::size_t>(n.parent)];
        if (n.depth != p.depth + 1) throw std::logic_error("depth(child) != depth(parent)+1");
        const auto id = static_cast<NodeId>(i);
        if (id < p.first_child || id >= p.first_child + p.child_count)
          throw std::logic_error("child not listed in its parent's range");
      }
      if (n.child_count > 0) {
        for (NodeId c = n.first_child; c < n.first_child + n.child_count; ++c) {
          if (c <= static_cast<NodeId>(i) || static_cast<std::size_t>(c) >= nodes_.size() ||
              nodes_[static_cast<std::size_t>(c)].parent != static_cast<NodeId>(i))
            throw std::logic_error("child/parent references inconsistent");
        }
      }
    }
  }

  /// Canonical nested-parenthesis encoding of the ordered shape.
  std::string shape_code() const {
    std::string out;
    encode(root(), out);
    return out;
  }

 private:
  void encode(NodeId v, std::string& out) const {
    out.push_back('(');
    for (NodeId c : children(v)) encode(c, out);
    out.push_back(')');
  }

  std::vector<Node> nodes_;
};

/// Tree made of the vertices that have a descendant at depth target_height.
struct ReducedTree {
  PlaneTree tree;
  int target_height = 0;
  std::vector<NodeId> origin_ids;  // reduced node -> source node

  bool is_boundary(NodeId v) const { return tree.depth(v) == target_height; }
};

/// alive[v] is true iff v has a descendant (or is itself) at depth n.
inline std::vector<char> reaches_depth(const PlaneTree& t, int n) {
  std::vector<char> alive(t.size(), 0);
  for (auto v = static_cast<NodeId>(t.size()) - 1; v >= 0; --v) {
    if (t.depth(v) == n) {
      alive[static_cast<std::size_t>(v)] = 1;
    } else if (t.depth(v) < n) {
      for (NodeId c : t.children(v)) {
        if (alive[static_cast<std::size_t>(c)]) {
          alive[static_cast<std::size_t>(v)] = 1;
          break;
        }
      }
    }
  }
  return alive;
}

/// Keeps exactly the vertices of depth <= n having a depth-n descendant.
inline ReducedTree reduce(const PlaneTree& t, int n) {
  if (n < 0) throw std::invalid_argument("reduce: negative height");
  const auto alive = reaches_depth(t, n);
  if (!alive[0]) throw std::invalid_argument("reduce: tree has no vertex at depth " + std::to_string(n));
  ReducedTree out;
  out.target_height = n;
  out.origin_ids.push_back(t.root());
  std::vector<NodeId> kids;
  for (std::size_t r = 0; r < out.origin_ids.size(); ++r) {
    const NodeId src = out.origin_ids[r];
    if (t.depth(src) == n) continue;
    kids.clear();
    for (NodeId c : t.children(src))
      if (alive[static_cast<std::size_t>(c)]) kids.push_back(c);
    out.tree.append_children(static_cast<NodeId>(r), static_cast<int>(kids.size()),
                             std::numeric_limits<std::size_t>::max());
    out.origin_ids.insert(out.origin_ids.end(), kids.begin(), kids.end());
  }
  return out;
}

/// Writes `id parent_id depth n_children` per node after a header line.
inline void dump_tree(std::ostream& os, const PlaneTree& t, std::string_view dist_tag,
                      std::uint64_t seed) {
  os << "# offspring=" << dist_tag << " seed=" << seed << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& n = t.node(static_cast<NodeId>(i));
    os << i << ' ' << n.parent << ' ' << n.depth << ' ' << n.child_count << '\n';
  }
}

}  // namespace hmgw
