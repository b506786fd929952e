#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "hmgw/gw_tree.hpp"
#include "hmgw/stats.hpp"
#include "chi_square.hpp"
#include "tree_helpers.hpp"

using namespace hmgw;
using testing_util::tree_from_code;

namespace {

OffspringDistribution family(const char* tag) { return OffspringDistribution::from_tag(tag); }

// Finite law with theta(1) > 0 and up to three children.
OffspringDistribution four_point() {
  return OffspringDistribution::from_tag("custom", "0:0.375,1:0.375,2:0.125,3:0.125");
}

}  // namespace

TEST(PlaneTree, BuildsFromCodeAndValidates) {
  const auto t = tree_from_code("(()(()()))");
  t.validate();
  EXPECT_EQ(t.size(), 5u);
  EXPECT_EQ(t.height(), 2);
  EXPECT_EQ(t.level_size(1), 2u);
  EXPECT_EQ(t.level_size(2), 2u);
  EXPECT_EQ(t.shape_code(), "(()(()()))");
}

TEST(PlaneTree, DumpFormat) {
  const auto t = tree_from_code("(()(()))");
  std::ostringstream os;
  dump_tree(os, t, "binary", 9);
  EXPECT_EQ(os.str(), "# offspring=binary seed=9\n0 -1 0 2\n1 0 1 0\n2 0 1 1\n3 2 2 0\n");
}

TEST(Reduce, PrunesDeadBranches) {
  // root -> {A, B}, A leaf, B -> C at depth 2
  const auto t = tree_from_code("(()(()))");
  const auto r = reduce(t, 2);
  EXPECT_EQ(r.tree.shape_code(), "((()))");
  EXPECT_EQ(r.origin_ids, (std::vector<NodeId>{0, 2, 3}));
  EXPECT_TRUE(r.is_boundary(2));
  EXPECT_THROW(reduce(t, 3), std::invalid_argument);
}

TEST(Reduce, KeepsTreesWithoutDeadBranches) {
  for (const char* code : {"((((()))))", "((()())(()()))", "(())"}) {
    const auto t = tree_from_code(code);
    const auto r = reduce(t, t.height());
    EXPECT_EQ(r.tree.shape_code(), code);
  }
}

TEST(Reduce, IdempotentAndInjective) {
  const auto d = family("geometric");
  auto g = rng::substream(21, 0);
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_conditioned(d, 12, g);
    const auto r = reduce(s.tree, 12);
    r.tree.validate();
    const auto rr = reduce(r.tree, 12);
    EXPECT_EQ(rr.tree.shape_code(), r.tree.shape_code());
    std::vector<NodeId> ids = r.origin_ids;
    std::sort(ids.begin(), ids.end());
    EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
    for (std::size_t v = 0; v < r.tree.size(); ++v) {
      EXPECT_EQ(r.tree.depth(static_cast<NodeId>(v)), s.tree.depth(r.origin_ids[v]));
      if (r.tree.depth(static_cast<NodeId>(v)) < 12) {
        EXPECT_GT(r.tree.child_count(static_cast<NodeId>(v)), 0);
      }
    }
  }
}

TEST(GwTree, HeightCapZeroIsSingleVertex) {
  auto g = rng::substream(22, 0);
  const auto t = sample_gw(family("poisson"), g, 0);
  EXPECT_EQ(t.size(), 1u);
}

TEST(GwTree, FirstGenerationStatistics) {
  auto g = rng::substream(22, 1);
  const int n = 1'000'000;
  double level1 = 0.0;
  int survive_binary = 0;
  const auto geo = family("geometric");
  const auto bin = family("binary");
  for (int i = 0; i < n; ++i) {
    level1 += static_cast<double>(sample_gw(geo, g, 1).level_size(1));
    if (i < 100'000) survive_binary += sample_gw(bin, g, 1).height() >= 1;
  }
  EXPECT_NEAR(level1 / n, 1.0, 0.005);
  EXPECT_NEAR(survive_binary / 1e5, 0.5, 0.01);
}

TEST(GwTree, SampledTreesAreValid) {
  auto g = rng::substream(22, 2);
  for (int i = 0; i < 500; ++i) sample_gw(family("geometric"), g, 30).validate();
}

TEST(GwTree, BudgetIsEnforced) {
  auto g = rng::substream(22, 3);
  EXPECT_THROW(sample_conditioned(family("geometric"), 50, g, kDefaultRejectionBudget, 5), BudgetExceeded);
  EXPECT_THROW(sample_conditioned(family("binary"), 5000, g, 0), BudgetExceeded);
  EXPECT_THROW(sample_conditioned(family("binary"), 0, g), std::invalid_argument);
}

TEST(Conditioned, ReachesTargetHeight) {
  auto g = rng::substream(23, 0);
  for (int n : {1, 5, 40}) {
    for (int i = 0; i < 100; ++i) {
      const auto s = sample_conditioned(family("poisson"), n, g);
      EXPECT_EQ(s.tree.height(), n);
      EXPECT_GT(s.tree.level_size(n), 0u);
    }
  }
}

TEST(Conditioned, BinaryTwoGenerationsByEnumeration) {
  // Surviving binary trees of height 2: level 2 has 2 vertices with
  // probability (1/4)/(3/8) = 2/3 and 4 vertices otherwise.
  auto g = rng::substream(23, 1);
  const int n = 200'000;
  int two = 0;
  for (int i = 0; i < n; ++i) two += sample_conditioned(family("binary"), 2, g).tree.level_size(2) == 2;
  EXPECT_NEAR(static_cast<double>(two) / n, 2.0 / 3.0, 0.005);
}

TEST(Conditioned, RejectionCountIsGeometric) {
  const auto d = family("geometric");
  const int n = 200;
  const SurvivalTable q(d, n);
  auto g = rng::substream(23, 2);
  std::vector<double> rej(2000);
  for (auto& r : rej) r = static_cast<double>(sample_conditioned(d, n, g).rejections);
  const auto s = stats::summarize(rej);
  EXPECT_NEAR(s.mean, (1.0 - q[n]) / q[n], 4.0 * s.std_error());
}

TEST(Conditioned, FullShapeLawMatchesEnumeration) {
  const std::vector<double> pmf{0.5, 0.0, 0.5};
  const int n = 3;
  const SurvivalTable q(family("binary"), n);
  std::map<std::string, double> law;
  for (const auto& [code, f] : testing_util::full_shape_law(pmf, 0, n))
    if (f.weighted > 0.0) law[code] = f.prob / q[n];
  auto g = rng::substream(23, 3);
  std::map<std::string, int> counts;
  const int draws = 200'000;
  for (int i = 0; i < draws; ++i) counts[sample_conditioned(family("binary"), n, g).tree.shape_code()]++;
  EXPECT_LT(testing_util::tv_to_counts(law, counts, draws), 0.01);
  EXPECT_GT(testing_util::chi_square_pvalue(law, counts), 0.001);
}

TEST(ReducedBranching, FirstStepLaw) {
  for (auto d : {family("geometric"), family("poisson"), four_point()}) {
    const ReducedBranching b(d, 10);
    double total = 0.0;
    for (int k = 1; k <= d.max_offspring(); ++k) {
      EXPECT_NEAR(b.probability(1, k), d.pmf(k) / (1.0 - d.pmf(0)), 1e-12);
      total += b.probability(1, k);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(b.probability(1, 0), 0.0);
  }
}

TEST(ReducedBranching, ReducedShapeLawMatchesEnumeration) {
  const auto d = four_point();
  const std::vector<double> pmf{0.375, 0.375, 0.125, 0.125};
  const int n = 3;
  const SurvivalTable q(d, n);
  std::map<std::string, double> law;
  for (const auto& [code, p] : testing_util::reduced_shape_law(pmf, 0, n))
    if (!code.empty()) law[code] = p / q[n];
  double mass = 0.0;
  for (const auto& [c, p] : law) mass += p;
  ASSERT_NEAR(mass, 1.0, 1e-12);

  const ReducedBranching b(d, n);
  auto g = rng::substream(24, 0);
  const int draws = 200'000;
  std::map<std::string, int> direct, via_rejection;
  for (int i = 0; i < draws; ++i) {
    direct[sample_reduced_conditioned(b, n, g).tree.shape_code()]++;
    via_rejection[reduce(sample_conditioned(d, n, g).tree, n).tree.shape_code()]++;
  }
  EXPECT_GT(testing_util::chi_square_pvalue(law, direct), 0.001);
  EXPECT_GT(testing_util::chi_square_pvalue(law, via_rejection), 0.001);
  EXPECT_LT(testing_util::tv_to_counts(law, direct, draws), 0.03);
}

TEST(ReducedBranching, DirectSamplerAgreesWithRejectionAtDepth) {
  const auto d = family("geometric");
  const int n = 25;
  const ReducedBranching b(d, n);
  auto g = rng::substream(24, 1);
  std::vector<double> leaves_a, leaves_b, root_a, root_b;
  for (int i = 0; i < 4000; ++i) {
    const auto a = sample_reduced_conditioned(b, n, g);
    const auto r = reduce(sample_conditioned(d, n, g).tree, n);
    a.tree.validate();
    leaves_a.push_back(static_cast<double>(a.tree.level_size(n)));
    leaves_b.push_back(static_cast<double>(r.tree.level_size(n)));
    root_a.push_back(a.tree.child_count(0));
    root_b.push_back(r.tree.child_count(0));
  }
  EXPECT_GT(stats::ks_two_sample_pvalue(stats::ks_two_sample(leaves_a, leaves_b), 4000, 4000), 0.001);
  EXPECT_GT(stats::ks_two_sample_pvalue(stats::ks_two_sample(root_a, root_b), 4000, 4000), 0.001);
  EXPECT_THROW(sample_reduced_conditioned(b, n + 1, g), std::invalid_argument);
}

TEST(Kesten, BinarySpineVertexHasTwoChildren) {
  auto g = rng::substream(25, 0);
  const int draws = 100'000;
  int first = 0;
  for (int i = 0; i < draws; ++i) {
    const auto k = sample_kesten_prefix(family("binary"), 4, g);
    for (int dd = 0; dd < 4; ++dd) ASSERT_EQ(k.tree.child_count(k.spine[static_cast<std::size_t>(dd)]), 2);
    first += k.spine[1] == *k.tree.children(k.spine[0]).begin();
  }
  EXPECT_NEAR(static_cast<double>(first) / draws, 0.5, 0.01);
}

TEST(Kesten, ShapeLawIsSizeBiased) {
  // The first n generations of the Kesten tree have law Z_n P(shape).
  const std::vector<double> pmf{0.5, 0.0, 0.5};
  const int n = 3;
  std::map<std::string, double> law;
  for (const auto& [code, f] : testing_util::full_shape_law(pmf, 0, n))
    if (f.weighted > 0.0) law[code] = f.weighted;
  auto g = rng::substream(25, 1);
  std::map<std::string, int> counts;
  const int draws = 1'000'000;
  for (int i = 0; i < draws; ++i) counts[sample_kesten_prefix(family("binary"), n, g).tree.shape_code()]++;
  EXPECT_LT(testing_util::tv_to_counts(law, counts, draws), 0.02);
  EXPECT_GT(testing_util::chi_square_pvalue(law, counts), 0.001);
}

TEST(BackwardPrefix, Structure) {
  auto g = rng::substream(26, 0);
  for (int i = 0; i < 300; ++i) {
    const auto p = sample_backward_prefix(family("geometric"), 15, g);
    p.tree.validate();
    EXPECT_EQ(p.u(15), p.tree.root());
    EXPECT_EQ(p.tree.depth(p.u(0)), 15);
    EXPECT_TRUE(p.tree.is_leaf(p.u(0)));
    for (int j = 1; j <= 15; ++j) {
      const auto& gr = p.grafts[static_cast<std::size_t>(j)];
      EXPECT_EQ(p.tree.parent(p.u(j - 1)), p.u(j));
      EXPECT_EQ(gr.left + gr.right, p.tree.child_count(p.u(j)) - 1);
      EXPECT_EQ(static_cast<int>(gr.roots.size()), gr.left + gr.right);
      const NodeId first = *p.tree.children(p.u(j)).begin();
      EXPECT_EQ(p.u(j - 1), first + gr.left);
    }
  }
}

TEST(BackwardPrefix, BinaryHasOneGraftPerSpineVertex) {
  auto g = rng::substream(26, 1);
  for (int i = 0; i < 200; ++i) {
    const auto p = sample_backward_prefix(family("binary"), 20, g);
    for (int j = 1; j <= 20; ++j) EXPECT_EQ(p.grafts[static_cast<std::size_t>(j)].roots.size(), 1u);
    const auto m = extract_m_sequence(p);
    EXPECT_EQ(m.eps[1], 1);
  }
}

TEST(BackwardPrefix, MarkFrequencies) {
  const auto d = family("geometric");
  const int n = 10;
  const ReducedBranching b(d, n);
  const auto probs = mark_probabilities(d, b.survival(), n);
  auto g = rng::substream(26, 2);
  const int draws = 100'000;
  std::vector<int> full(n + 1, 0), reduced(n + 1, 0);
  for (int i = 0; i < draws; ++i) {
    const auto p = sample_backward_prefix(d, n, g);
    const auto m = extract_m_sequence(p);
    // eps_1 = 1 iff u_1 has a graft, since depth-n grafts are at generation 0
    EXPECT_EQ(m.eps[1], p.tree.child_count(p.u(1)) > 1);
    for (int j = 1; j <= n; ++j) full[static_cast<std::size_t>(j)] += m.eps[static_cast<std::size_t>(j)];
    const auto r = sample_backward_prefix_reduced(b, n, g);
    const auto mr = extract_m_sequence(r);
    for (int j = 1; j <= n; ++j) {
      EXPECT_EQ(mr.eps[static_cast<std::size_t>(j)], !r.grafts[static_cast<std::size_t>(j)].roots.empty());
      reduced[static_cast<std::size_t>(j)] += mr.eps[static_cast<std::size_t>(j)];
    }
  }
  for (int j : {1, 2, 5, 10}) {
    const double p = probs[static_cast<std::size_t>(j)];
    const double tol = 4.0 * std::sqrt(p * (1 - p) / draws);
    EXPECT_NEAR(full[static_cast<std::size_t>(j)] / double(draws), p, tol) << j;
    EXPECT_NEAR(reduced[static_cast<std::size_t>(j)] / double(draws), p, tol) << j;
  }
  EXPECT_NEAR(probs[1], 0.75, 1e-12);
}

TEST(MSequence, FromIndicators) {
  const auto m = MSequence::from_indicators({0, 1, 0, 0, 1, 1}, 5);
  EXPECT_EQ(m.k_n(), 3);
  EXPECT_EQ(m.M, (std::vector<int>{0, 1, 4, 5}));
  EXPECT_EQ(m.L(2), 3);
  EXPECT_THROW(m.L(4), std::out_of_range);
  const auto none = MSequence::from_indicators({0, 0, 0}, 2);
  EXPECT_EQ(none.k_n(), 0);
}

TEST(MSequence, NextMarkLaw) {
  const auto d = family("poisson");
  const int n = 50;
  const SurvivalTable table(d, n);
  const auto probs = mark_probabilities(d, table, n);
  auto g = rng::substream(27, 0);
  const int draws = 20'000;
  int at_next = 0;
  for (int i = 0; i < draws; ++i) {
    auto m = simulate_kn_fast(probs, n, g);
    sample_next_mark(m, d, table, probs, g);
    ASSERT_TRUE(m.next_mark.has_value());
    ASSERT_GT(*m.next_mark, n);
    EXPECT_EQ(m.mark(m.k_n() + 1), *m.next_mark);
    at_next += *m.next_mark == n + 1;
  }
  const double p = graft_reach_probability(d, SurvivalTable(d, n + 1), n + 1);
  EXPECT_NEAR(at_next / double(draws), p, 4.0 * std::sqrt(p * (1 - p) / draws));
}

TEST(MSequence, FastMarksMatchTreeMarks) {
  const auto d = family("geometric");
  const int n = 100;
  const SurvivalTable table(d, n);
  const auto probs = mark_probabilities(d, table, n);
  auto g = rng::substream(27, 1);
  std::vector<double> fast, tree;
  for (int i = 0; i < 3000; ++i) {
    fast.push_back(simulate_kn_fast(probs, n, g).k_n());
    tree.push_back(extract_m_sequence(sample_backward_prefix(d, n, g)).k_n());
  }
  EXPECT_GT(stats::ks_two_sample_pvalue(stats::ks_two_sample(fast, tree), 3000, 3000), 0.001);
  double expected = 0.0;
  for (int j = 1; j <= n; ++j) expected += probs[static_cast<std::size_t>(j)];
  EXPECT_NEAR(stats::summarize(fast).mean, expected, 4.0 * stats::summarize(fast).std_error());
}
