#pragma once

#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hmgw/plane_tree.hpp"

namespace testing_util {

// Builds a plane tree from its nested-parenthesis code, e.g. "(()(()))".
inline hmgw::PlaneTree tree_from_code(const std::string& code) {
  struct Shape {
    std::vector<Shape> kids;
  };
  std::size_t pos = 0;
  auto parse = [&](auto&& self) -> Shape {
    if (code.at(pos) != '(') throw std::invalid_argument("bad shape code");
    ++pos;
    Shape s;
    while (code.at(pos) == '(') s.kids.push_back(self(self));
    ++pos;
    return s;
  };
  const Shape root = parse(parse);
  hmgw::PlaneTree t;
  std::deque<const Shape*> queue{&root};
  for (hmgw::NodeId v = 0; !queue.empty(); ++v) {
    const Shape* s = queue.front();
    queue.pop_front();
    if (!s->kids.empty()) t.append_children(v, static_cast<int>(s->kids.size()));
    for (const auto& k : s->kids) queue.push_back(&k);
  }
  return t;
}

// Law of the reduced shape of a GW subtree rooted at depth d, cut at depth n,
// for a finitely supported pmf. The empty code stands for "dies before n".
inline std::map<std::string, double> reduced_shape_law(const std::vector<double>& pmf, int d, int n) {
  if (d == n) return {{"()", 1.0}};
  const auto child = reduced_shape_law(pmf, d + 1, n);
  std::map<std::string, double> out;
  std::map<std::string, double> concat{{"", 1.0}};
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    if (k > 0) {
      std::map<std::string, double> next;
      for (const auto& [a, pa] : concat)
        for (const auto& [b, pb] : child) next[a + b] += pa * pb;
      concat = std::move(next);
    }
    if (pmf[k] == 0.0) continue;
    for (const auto& [c, p] : concat) out[c.empty() ? "" : "(" + c + ")"] += pmf[k] * p;
  }
  return out;
}

struct FullShape {
  double prob = 0.0;
  double weighted = 0.0;  // prob * (number of vertices at depth n)
};

// Law of the full shape (cut at depth n) of a GW subtree rooted at depth d.
inline std::map<std::string, FullShape> full_shape_law(const std::vector<double>& pmf, int d, int n) {
  if (d == n) return {{"()", {1.0, 1.0}}};
  const auto child = full_shape_law(pmf, d + 1, n);
  std::map<std::string, FullShape> out;
  std::map<std::string, FullShape> concat{{"", {1.0, 0.0}}};
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    if (k > 0) {
      std::map<std::string, FullShape> next;
      for (const auto& [a, fa] : concat)
        for (const auto& [b, fb] : child) {
          auto& e = next[a + b];
          e.prob += fa.prob * fb.prob;
          e.weighted += fa.weighted * fb.prob + fa.prob * fb.weighted;
        }
      concat = std::move(next);
    }
    if (pmf[k] == 0.0) continue;
    for (const auto& [c, f] : concat) {
      auto& e = out["(" + c + ")"];
      e.prob += pmf[k] * f.prob;
      e.weighted += pmf[k] * f.weighted;
    }
  }
  return out;
}

// Total variation between an exact law and empirical counts.
inline double tv_to_counts(const std::map<std::string, double>& law,
                           const std::map<std::string, int>& counts, int total) {
  double tv = 0.0;
  for (const auto& [k, p] : law) {
    const auto it = counts.find(k);
    const double q = it == counts.end() ? 0.0 : static_cast<double>(it->second) / total;
    tv += std::abs(p - q);
  }
  for (const auto& [k, c] : counts)
    if (!law.count(k)) tv += static_cast<double>(c) / total;
  return tv / 2.0;
}

}  // namespace testing_util
