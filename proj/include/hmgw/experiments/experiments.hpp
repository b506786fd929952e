#pragma once

// Seeded studies. Each takes a Config and returns a Report whose checks are
// the pass/fail outcomes; raw samples go to the report's CSV table.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "hmgw/continuum.hpp"
#include "hmgw/electric.hpp"
#include "hmgw/experiments/common.hpp"
#include "hmgw/gw_tree.hpp"
#include "hmgw/rde.hpp"
#include "hmgw/stats.hpp"

namespace hmgw::exp {

// ---------------------------------------------------------------------------
// Harmonic-measure exponents at a uniform and at a harmonic-typical vertex.

inline Report exp_theorem1(const Config& cfg) {
  const Run run(cfg);
  auto rep = run.report("theorem1");
  const auto dist = run.offspring();
  const auto ns = cfg.get_int_list("n_values", {100, 300, 1000});
  const auto samples = static_cast<std::size_t>(cfg.get_int("samples", 2000));
  const auto n_check = cfg.get_int("n_check", ns.back());
  rep.raw() = CsvTable("n,sample,level_size,rejections,x_unif,x_harm");

  struct Row {
    std::size_t level = 0;
    std::uint64_t rejections = 0;
    double x_unif = 0.0, x_harm = 0.0, mass_error = 0.0;
  };
  std::vector<double> med_unif;
  double worst_mass = 0.0;
  for (long long n : ns) {
    const int ni = static_cast<int>(n);
    const double logn = std::log(static_cast<double>(n));
    const auto rows = collect<Row>(samples, run.threads, [&](std::size_t i) {
      auto rng = rng::substream(run.seed, (kThm1 << 20) + static_cast<std::uint64_t>(n), i);
      const auto cs = sample_conditioned(dist, ni, rng, kDefaultRejectionBudget, run.node_budget);
      const auto red = reduce(cs.tree, ni);
      const auto h = harmonic_measure(red);
      Row r;
      r.level = h.mass.size();
      r.rejections = cs.rejections;
      r.mass_error = std::abs(h.total() - 1.0);
      const auto u = rng::uniform_index(rng, h.mass.size());
      r.x_unif = -std::log(h.mass[u]) / logn;
      double t = rng::uniform01(rng), acc = 0.0;
      std::size_t k = 0;
      for (; k + 1 < h.mass.size(); ++k) {
        acc += h.mass[k];
        if (t < acc) break;
      }
      r.x_harm = -std::log(h.mass[k]) / logn;
      return r;
    });
    std::vector<double> xu, xh;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rep.raw().row(n, i, rows[i].level, rows[i].rejections, rows[i].x_unif, rows[i].x_harm);
      xu.push_back(rows[i].x_unif);
      xh.push_back(rows[i].x_harm);
      worst_mass = std::max(worst_mass, rows[i].mass_error);
    }
    const auto mu = median_estimate(xu), mh = median_estimate(xh);
    const std::string tag = "n" + std::to_string(n);
    rep.estimate("median_x_unif_" + tag, mu.median, mu.std_error);
    rep.estimate("median_x_harm_" + tag, mh.median, mh.std_error);
    rep.exact("q1_x_unif_" + tag, mu.q1);
    rep.exact("q3_x_unif_" + tag, mu.q3);
    rep.exact("q1_x_harm_" + tag, mh.q1);
    rep.exact("q3_x_harm_" + tag, mh.q3);
    med_unif.push_back(mu.median);
    if (n == n_check) {
      rep.check("median_x_unif_above_1_" + tag, mu.median, "> 1", mu.median > 1.0);
      rep.check("median_x_harm_below_1_" + tag, mh.median, "< 1", mh.median < 1.0);
      rep.check("median_x_harm_below_x_unif_" + tag, mu.median - mh.median, "> 0", mh.median < mu.median);
    }
  }
  if (med_unif.size() >= 2) {
    bool inc = true;
    for (std::size_t i = 1; i < med_unif.size(); ++i) inc = inc && med_unif[i] > med_unif[i - 1];
    rep.check("median_x_unif_increasing_in_n", med_unif.back() - med_unif.front(), "strictly increasing", inc);
  }
  rep.check("harmonic_mass_sums_to_1", worst_mass, "< 1e-12", worst_mass < 1e-12);
  return rep;
}

// ---------------------------------------------------------------------------
// Level-n population of conditioned trees against Exp(2/sigma^2).

inline Report exp_yaglom(const Config& cfg) {
  const Run run(cfg);
  auto rep = run.report("yaglom");
  const auto dist = run.offspring();
  const int n = static_cast<int>(cfg.get_int("n", 200));
  const auto samples = static_cast<std::size_t>(cfg.get_int("samples", 10000));
  const double ks_max = cfg.get_double("ks_max", 0.05);
  struct Row {
    std::size_t level = 0;
    std::uint64_t rejections = 0;
  };
  const auto rows = collect<Row>(samples, run.threads, [&](std::size_t i) {
    auto rng = rng::substream(run.seed, kYaglom, i);
    const auto cs = sample_conditioned(dist, n, rng, kDefaultRejectionBudget, run.node_budget);
    return Row{cs.tree.level_size(n), cs.rejections};
  });
  rep.raw() = CsvTable("sample,level_size,scaled,rejections");
  std::vector<double> scaled, rej;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double x = static_cast<double>(rows[i].level) / n;
    scaled.push_back(x);
    rej.push_back(static_cast<double>(rows[i].rejections));
    rep.raw().row(i, rows[i].level, x, rows[i].rejections);
  }
  const double rate = 2.0 / dist.variance();
  const double ks = stats::ks_statistic(scaled, [rate](double x) { return x <= 0 ? 0.0 : -std::expm1(-rate * x); });
  const auto sm = stats::summarize(scaled);
  rep.estimate("mean_scaled_level", sm.mean, sm.std_error());
  rep.exact("exp_mean", 1.0 / rate);
  const auto sr = stats::summarize(rej);
  const SurvivalTable q(dist, static_cast<std::size_t>(n));
  rep.estimate("mean_rejections", sr.mean, sr.std_error());
  rep.exact("expected_rejections", 1.0 / q[static_cast<std::size_t>(n)] - 1.0);
  rep.check("ks_vs_exponential", ks, "< " + fmt(ks_max), ks < ks_max);
  return rep;
}

// ---------------------------------------------------------------------------
// Survival probabilities against 2/(n sigma^2).

inline Report exp_kolmogorov(const Config& cfg) {
  const Run run(cfg);
  auto rep = run.report("kolmogorov");
  const auto families = cfg.get_list("families", {"geometric", "poisson", "binary"});
  const auto n = static_cast<std::size_t>(cfg.get_int("n", 10000));
  const double tol = cfg.get_double("tolerance", 0.05);
  rep.raw() = CsvTable("family,j,q_j,scaled");
  for (const auto& f : families) {
    const auto dist = run.offspring(f);
    const SurvivalTable q(dist, n);
    for (std::size_t j = 1; j <= n; j = j < 10 ? j + 1 : j * 10 / 8 + 1) {
      rep.raw().row(f, j, q[j], static_cast<double>(j) * q[j] * dist.variance() / 2.0);
    }
    const double scaled = static_cast<double>(n) * q[n] * dist.variance() / 2.0;
    rep.raw().row(f, n, q[n], scaled);
    rep.exact("n_qn_sigma2_over_2_" + f, scaled);
    rep.check("kolmogorov_" + f, std::abs(scaled - 1.0), "< " + fmt(tol), std::abs(scaled - 1.0) < tol);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Pools shared by several experiments.

inline StationaryPools make_pools(const Run& run, Report& rep) {
  const auto size = static_cast<std::size_t>(run.cfg.get_int("pool_size", 1000000));
  const auto burn = static_cast<std::size_t>(run.cfg.get_int("burn_in", 200));
  const auto seed = pool_seed_from_tag(run.cfg.get_string("pool_seed", "one"));
  rep.set_default("pool_size", std::to_string(size));
  rep.set_default("burn_in", std::to_string(burn));
  return run_population(size, burn, seed, run.population());
}

// ---------------------------------------------------------------------------
// n C_n(T*n) across offspring families and against the gamma pool.

inline Report exp_conductance_cv(const Config& cfg) {
  const Run run(cfg);
  auto rep = run.report("conductance_cv");
  const auto families = cfg.get_list("families", {"geometric", "poisson", "binary"});
  const int n = static_cast<int>(cfg.get_int("n", 200));
  const auto samples = static_cast<std::size_t>(cfg.get_int("samples", 10000));
  const double w1_max = cfg.get_double("w1_max", 0.1);
  const double ks_max = cfg.get_double("ks_max", 0.05);
  const double m2_max = cfg.get_double("second_moment_max", 10.0);
  const double eps = cfg.get_double("monotonicity_eps", 0.1);
  const int cut = n - static_cast<int>(std::floor(eps * n));
  const auto pools = make_pools(run, rep);

  rep.raw() = CsvTable("family,sample,n_c_n,c_cut");
  struct Row {
    double x = 0.0, c_cut = 0.0;
    bool monotone = true;
  };
  std::map<std::string, std::vector<double>> laws;
  for (const auto& f : families) {
    const auto dist = run.offspring(f);
    const auto rows = collect<Row>(samples, run.threads, [&](std::size_t i) {
      auto rng = rng::substream(run.seed, (kCond << 20) + family_index(f), i);
      const auto cs = sample_conditioned(dist, n, rng, kDefaultRejectionBudget, run.node_budget);
      const auto red = reduce(cs.tree, n);
      const double cn = conductance_to_level(red, n);
      const double ccut = conductance_to_level(red, cut);
      const double gap_bound = static_cast<double>(n - cut) / (n + 1) * ccut;
      return Row{n * cn, ccut, ccut >= cn && ccut - cn <= gap_bound * (1 + 1e-12)};
    });
    std::vector<double> x;
    std::size_t violations = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.push_back(rows[i].x);
      violations += !rows[i].monotone;
      rep.raw().row(f, i, rows[i].x, rows[i].c_cut);
    }
    const auto s = stats::summarize(x);
    std::vector<double> sq;
    for (double v : x) sq.push_back(v * v);
    const auto s2 = stats::summarize(sq);
    rep.estimate("mean_n_c_n_" + f, s.mean, s.std_error());
    rep.estimate("second_moment_n_c_n_" + f, s2.mean, s2.std_error());
    const double w1 = stats::wasserstein1(x, pools.gamma.values);
    rep.check("w1_vs_gamma_pool_" + f, w1, "< " + fmt(w1_max), w1 < w1_max);
    rep.check("second_moment_" + f, s2.mean, "<= " + fmt(m2_max), s2.mean <= m2_max);
    rep.check("level_monotonicity_" + f, static_cast<double>(violations), "== 0", violations == 0);
    laws[f] = std::move(x);
  }
  const auto sg = stats::summarize(pools.gamma.values);
  rep.estimate("gamma_pool_mean", sg.mean, sg.std_error());
  for (std::size_t a = 0; a < families.size(); ++a)
    for (std::size_t b = a + 1; b < families.size(); ++b) {
      const double ks = stats::ks_two_sample(laws[families[a]], laws[families[b]]);
      rep.check("ks_" + families[a] + "_" + families[b], ks, "< " + fmt(ks_max), ks < ks_max);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Number of marks k_n on the backward spine.

inline Report exp_kn(const Config& cfg) {
  const Run run(cfg);
  auto rep = run.report("kn");
  const auto dist = run.offspring();
  const int n_fast = static_cast<int>(cfg.get_int("n_fast", 100000));
  const auto runs_fast = static_cast<std::size_t>(cfg.get_int("runs_fast", 1000));
  const int n_tree = static_cast<int>(cfg.get_int("n_tree", 1000));
  const auto runs_tree = static_cast<std::size_t>(cfg.get_int("runs_tree", 10000));
  const auto tree_dist = run.offspring(cfg.get_string("tree_offspring", "binary"));
  const double pmin = cfg.get_double("ks_pvalue_min", 0.001);
  rep.raw() = CsvTable("source,n,sample,k_n");

  // Fast marks at large n.
  {
    const SurvivalTable q(dist, static_cast<std::size_t>(n_fast));
    const auto p = mark_probabilities(dist, q, n_fast);
    const auto kn = collect<double>(runs_fast, run.threads, [&](std::size_t i) {
      auto rng = rng::substream(run.seed, kKnFast, i);
      return static_cast<double>(simulate_kn_fast(p, n_fast, rng).k_n());
    });
    std::vector<double> ratio;
    for (std::size_t i = 0; i < kn.size(); ++i) {
      rep.raw().row("fast", n_fast, i, kn[i]);
      ratio.push_back(kn[i] / (2.0 * std::log(static_cast<double>(n_fast))));
    }
    const auto s = stats::summarize(ratio);
    rep.estimate("mean_kn_over_2logn", s.mean, s.std_error());
    const auto sk = stats::summarize(kn);
    const double expected = std::accumulate(p.begin(), p.end(), 0.0);
    rep.estimate("mean_kn", sk.mean, sk.std_error());
    rep.exact("expected_kn", expected);
    rep.check("kn_over_2logn", s.mean, "in [0.9, 1.1]", s.mean >= 0.9 && s.mean <= 1.1);
    rep.check("mean_kn_matches_sum_of_mark_probabilities", std::abs(sk.mean - expected) / sk.std_error(),
              "< 4 standard errors", std::abs(sk.mean - expected) < 4.0 * sk.std_error());
  }
  // Tree-based marks against fast marks at moderate n.
  {
    const auto from_trees = collect<double>(runs_tree, run.threads, [&](std::size_t i) {
      auto rng = rng::substream(run.seed, kKnTree, i);
      const auto prefix = sample_backward_prefix(tree_dist, n_tree, rng, run.node_budget);
      return static_cast<double>(extract_m_sequence(prefix).k_n());
    });
    const SurvivalTable q(tree_dist, static_cast<std::size_t>(n_tree));
    const auto p = mark_probabilities(tree_dist, q, n_tree);
    const auto fast = collect<double>(runs_tree, run.threads, [&](std::size_t i) {
      auto rng = rng::substream(run.seed, kKnFast + 1, i);
      return static_cast<double>(simulate_kn_fast(p, n_tree, rng).k_n());
    });
    for (std::size_t i = 0; i < runs_tree; ++i) rep.raw().row("tree", n_tree, i, from_trees[i]);
    for (std::size_t i = 0; i < runs_tree; ++i) rep.raw().row("fast_small", n_tree, i, fast[i]);
    const double d = stats::ks_two_sample(from_trees, fast);
    const double pv = stats::ks_two_sample_pvalue(d, from_trees.size(), fast.size());
    const auto st = stats::summarize(from_trees), sf = stats::summarize(fast);
    rep.estimate("mean_kn_tree", st.mean, st.std_error());
    rep.estimate("mean_kn_fast_small", sf.mean, sf.std_error());
    rep.exact("ks_tree_vs_fast", d);
    rep.check("tree_vs_fast_ks_pvalue", pv, "> " + fmt(pmin), pv > pmin);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Hitting probabilities on the backward tree and the ergodic mean of Q.

inline Report exp_ergodic_q(const Config& cfg) {
  const Run run(cfg);
  auto rep = run.report("ergodic_q");
  const auto dist = run.offspring();

  // Product formula against elimination on small prefixes.
  const auto n_oracle = static_cast<int>(cfg.get_int("oracle_n", 300));
  const auto oracle_count = static_cast<std::size_t>(cfg.get_int("oracle_prefixes", 20));
  const double oracle_tol = cfg.get_double("oracle_tolerance", 1e-9);
  double worst = 0.0;
  std::size_t compared = 0;
  CsvTable oracle_csv("prefix,k,p_solve,p_product");
  for (std::size_t i = 0, attempt = 0; i < oracle_count; ++attempt) {
    auto rng = rng::substream(run.seed, kErgOracle, attempt);
    const auto p = sample_backward_prefix(dist, n_oracle, rng, run.node_budget);
    const auto m = extract_m_sequence(p);
    if (m.k_n() < 2) continue;
    const auto s = spine_statistics(p, m);
    const BackwardHitSolver solve(p, m);
    for (int k = 1; k < m.k_n(); ++k) {
      const double a = solve(k), b = hit_prob_from_product(s, k);
      worst = std::max(worst, std::abs(a - b));
      oracle_csv.row(i, k, a, b);
      ++compared;
    }
    ++i;
  }
  rep.add_file("oracle.csv", oracle_csv.str());
  rep.exact("product_formula_max_error", worst);
  rep.exact("product_formula_comparisons", static_cast<double>(compared));
  rep.check("product_formula_vs_elimination", worst, "< " + fmt(oracle_tol), worst < oracle_tol && compared > 0);

  // Ergodic averages on long prefixes.
  const int n = static_cast<int>(cfg.get_int("n", 20000));
  const auto count = static_cast<std::size_t>(cfg.get_int("prefixes", 200));
  const double q_tol = cfg.get_double("ergodic_tolerance", 0.1);
  const ReducedBranching branching(dist, static_cast<std::size_t>(n));
  const auto far = static_cast<std::size_t>(cfg.get_int("mark_table_factor", 20)) * static_cast<std::size_t>(n);
  const SurvivalTable qfar(dist, far);
  const auto pfar = mark_probabilities(dist, qfar, static_cast<int>(far));
  struct Row {
    int kn = 0;
    double avg = std::nan("");
    std::size_t nodes = 0;
    bool bounds_ok = true;
  };
  const auto rows = collect<Row>(count, run.threads, [&](std::size_t i) {
    auto rng = rng::substream(run.seed, kErgPrefix, i);
    const auto p = sample_backward_prefix_reduced(branching, n, rng, run.node_budget);
    auto m = extract_m_sequence(p);
    Row r;
    r.kn = m.k_n();
    r.nodes = p.tree.size();
    if (r.kn < 1) return r;
    sample_next_mark(m, dist, qfar, pfar, rng);
    const auto s = spine_statistics(p, m);
    long double sum = 0.0L;
    for (int k = 2; k <= s.last_q(); ++k) sum += s.Q[static_cast<std::size_t>(k)];
    r.avg = static_cast<double>(sum / r.kn);
    for (int k = 1; k <= r.kn; ++k) {
      const double mk = m.mark(k);
      r.bounds_ok = r.bounds_ok && mk * s.c[static_cast<std::size_t>(k)] >= 1.0 - 1e-12 &&
                    mk * s.h[static_cast<std::size_t>(k)] >= 1.0 - 1e-12;
    }
    return r;
  });
  rep.raw() = CsvTable("prefix,k_n,mean_q,nodes");
  std::vector<double> avg;
  std::size_t bound_fail = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rep.raw().row(i, rows[i].kn, rows[i].avg, rows[i].nodes);
    if (!std::isnan(rows[i].avg)) avg.push_back(rows[i].avg);
    bound_fail += !rows[i].bounds_ok;
  }
  const auto sa = stats::summarize(avg);
  rep.estimate("mean_q_average", sa.mean, sa.std_error());
  rep.exact("prefixes_with_marks", static_cast<double>(avg.size()));
  rep.check("scaled_conductances_at_least_1", static_cast<double>(bound_fail), "== 0", bound_fail == 0);

  const auto pools = make_pools(run, rep);
  const auto lam = estimate_lambda_moment(pools.hat);
  rep.estimate("lambda_moment", lam.value, lam.std_error);
  const double half = lam.value / 2.0;
  rep.check("ergodic_mean_vs_half_lambda", std::abs(sa.mean - half), "< " + fmt(q_tol),
            std::abs(sa.mean - half) < q_tol && avg.size() >= std::min<std::size_t>(count, 200));

  const auto q_samples = static_cast<std::size_t>(cfg.get_int("q_inf_samples", 10000000));
  const double qinf_tol = cfg.get_double("q_inf_tolerance", 0.01);
  const auto q = estimate_Q_infinity(pools.hat, pools.gamma, q_samples, run.population());
  rep.estimate("q_inf_direct", q.direct.value, q.direct.std_error);
  rep.estimate("q_inf_via_v", q.via_v.value, q.via_v.std_error);
  rep.check("q_inf_vs_half_lambda", std::abs(q.direct.value - half), "< " + fmt(qinf_tol),
            std::abs(q.direct.value - half) < qinf_tol);
  const double se = std::hypot(q.direct.std_error, q.via_v.std_error);
  const double gap = std::abs(q.direct.value - q.via_v.value);
  rep.check("q_inf_assemblies_agree", gap / se, "< 2 standard errors", gap < 2.0 * se);
  return rep;
}

// ---------------------------------------------------------------------------
// Population dynamics: lambda, moments, densities, identities.

inline Report exp_rde_suite(const Config& cfg) {
  const Run run(cfg);
  auto rep = run.report("rde_suite");
  const auto size = static_cast<std::size_t>(cfg.get_int("pool_size", 1000000));
  const auto burn = static_cast<std::size_t>(cfg.get_int("burn_in", 200));
  const auto extra = static_cast<std::size_t>(cfg.get_int("stationarity_steps", 200));
  const auto ps = run.population();
  auto pools = run_population(size, burn, pool_seed_from_tag(cfg.get_string("pool_seed", "one")), ps);
  const bool valid = pools.gamma.all_valid() && pools.hat.all_valid();
  rep.check("pools_finite_and_at_least_1", valid ? 0.0 : 1.0, "all entries in [1, inf)", valid);

  // lambda
  const auto lm = estimate_lambda_moment(pools.hat);
  const auto ll = estimate_lambda_log(pools.hat, pools.gamma, run.seed + 1);
  rep.estimate("lambda_moment", lm.value, lm.std_error);
  rep.estimate("lambda_log", ll.value, ll.std_error);
  rep.estimate("mean_c_hat", lm.value + 1.0, lm.std_error);
  const auto sg = stats::summarize(pools.gamma.values);
  rep.estimate("mean_c", sg.mean, sg.std_error());
  rep.check("lambda_moment_range", lm.value, "in [1.15, 1.27]", lm.value >= 1.15 && lm.value <= 1.27);
  rep.check("lambda_log_range", ll.value, "in [1.15, 1.27]", ll.value >= 1.15 && ll.value <= 1.27);
  rep.check("lambda_estimators_agree", std::abs(lm.value - ll.value), "< 0.02", std::abs(lm.value - ll.value) < 0.02);
  rep.check("mean_c_hat_range", lm.value + 1.0, "in [2.16, 2.26]", lm.value + 1.0 >= 2.16 && lm.value + 1.0 <= 2.26);
  const double lower99 = lm.value - 2.5758293035489 * lm.std_error;
  rep.exact("lambda_lower_99", lower99);
  rep.check("lambda_lower_99_above_1", lower99, "> 1", lower99 > 1.0);

  // densities on [1, 2]
  const auto fit = fit_densities(pools.gamma, pools.hat, cfg.get_double("bin_width", 0.01),
                                 cfg.get_double("argmax_bin_width", 0.05));
  rep.estimate("A0", fit.A0, fit.A0_se);
  rep.estimate("K0", fit.K0, fit.K0_se);
  rep.exact("f_hat_argmax", fit.argmax);
  rep.exact("f_hat_first_bin_density", fit.first_bin_density);
  rep.exact("f_hat_fit_residual", fit.hat_residual);
  rep.exact("f_fit_residual", fit.gamma_residual);
  rep.check("A0_range", fit.A0, "in [0.95, 1.00]", fit.A0 >= 0.95 && fit.A0 <= 1.00);
  rep.check("K0_range", fit.K0, "in [1.45, 1.51]", fit.K0 >= 1.45 && fit.K0 <= 1.51);
  rep.check("f_hat_argmax_range", fit.argmax, "in [1.4, 1.6]", fit.argmax >= 1.4 && fit.argmax <= 1.6);
  rep.check("f_hat_first_bin", fit.first_bin_density, "< 0.1", fit.first_bin_density < 0.1);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(1.0 + i * 0.05);
  const double tail_gap = tail_formula_gap(pools.hat, fit.A0, grid);
  rep.check("F_hat_closed_form_on_1_2", tail_gap, "< 0.01", tail_gap < 0.01);

  // identities
  struct G {
    std::string name;
    std::function<double(double)> g, dg;
  };
  const std::vector<G> gs = {
      {"x", [](double x) { return x; }, [](double) { return 1.0; }},
      {"log", [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; }},
      {"x2", [](double x) { return x * x; }, [](double x) { return 2.0 * x; }},
  };
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const auto r = check_identity_g(pools.hat, pools.gamma, gs[i].g, gs[i].dg, run.seed + 10 + i);
    rep.estimate("identity_residual_" + gs[i].name, r.value, r.std_error);
    rep.check("identity_" + gs[i].name, std::abs(r.value) / r.std_error, "< 3 standard errors",
              std::abs(r.value) < 3.0 * r.std_error);
  }
  const auto ells = cfg.get_double_list("ell_grid", {0.5, 1.0, 2.0, 4.0});
  double worst_z = 0.0;
  for (const auto& r : laplace_ode_check(pools.hat, pools.gamma, ells, run.seed + 20)) {
    rep.estimate("laplace_residual_l" + fmt(r.ell), r.residual, r.std_error);
    worst_z = std::max(worst_z, std::abs(r.residual) / r.std_error);
  }
  rep.check("laplace_ode", worst_z, "< 5 standard errors", worst_z < 5.0);
  double worst_ode = 0.0;
  for (const auto& r : density_ode_check(pools.hat, pools.gamma, std::vector<double>{2.2, 2.4, 2.6, 2.8},
                                         run.seed + 30)) {
    rep.exact("density_ode_residual_t" + fmt(r.t), r.residual);
    worst_ode = std::max(worst_ode, std::abs(r.residual));
  }
  const double ode_tol = cfg.get_double("density_ode_tolerance", 0.03);
  rep.check("density_ode_on_2_3", worst_ode, "< " + fmt(ode_tol), worst_ode < ode_tol);

  rep.raw() = CsvTable("t,f_hat_hist,f_hat_fit,f_hist,f_fit");
  for (std::size_t b = 0; b < fit.centers.size(); ++b) {
    const double t = fit.centers[b];
    rep.raw().row(t, fit.hat_density[b], fhat_closed_form(t, fit.A0), fit.gamma_density[b], f_closed_form(t, fit.K0));
  }

  // seed independence and stationarity
  if (cfg.get_int("seed_comparison", 1) != 0) {
    const auto other = run_population(size, burn, PoolSeed::infinity, ps, 1);
    const auto so = stats::summarize(other.gamma.values);
    rep.estimate("mean_c_from_infinity_seed", so.mean, so.std_error());
    rep.check("mean_c_seed_independent", std::abs(so.mean - sg.mean), "< 0.005", std::abs(so.mean - sg.mean) < 0.005);
    const double ks = stats::ks_two_sample(other.hat.values, pools.hat.values);
    rep.check("c_hat_law_seed_independent", ks, "KS < 0.01", ks < 0.01);
  }
  if (extra > 0) {
    auto later = pools;
    advance_population(later, extra, ps);
    const double ks_g = stats::ks_two_sample(later.gamma.values, pools.gamma.values);
    const double ks_h = stats::ks_two_sample(later.hat.values, pools.hat.values);
    rep.check("gamma_stationary", ks_g, "KS < 0.01", ks_g < 0.01);
    rep.check("gamma_hat_stationary", ks_h, "KS < 0.01", ks_h < 0.01);
  }
  {
    auto one_more = pools.gamma;
    one_more = step_gamma(one_more, ps, 7);
    const double change = std::abs(stats::summarize(one_more.values).mean - sg.mean);
    rep.check("gamma_mean_fixed_point", change, "< 0.003", change < 0.003);
  }

  const auto qi = estimate_Q_infinity(pools.hat, pools.gamma, static_cast<std::size_t>(cfg.get_int("q_inf_samples", 1000000)), ps);
  rep.estimate("q_inf_direct", qi.direct.value, qi.direct.std_error);
  rep.estimate("q_inf_via_v", qi.via_v.value, qi.via_v.std_error);

  const std::string export_pools = cfg.get_string("export_pools", "none");
  if (export_pools == "csv") {
    std::ostringstream a, b;
    write_pool_csv(a, pools.gamma);
    write_pool_csv(b, pools.hat);
    rep.add_file("pool_gamma.csv", a.str());
    rep.add_file("pool_gamma_hat.csv", b.str());
  } else if (export_pools == "binary") {
    std::ostringstream a(std::ios::binary), b(std::ios::binary);
    write_pool_binary(a, pools.gamma);
    write_pool_binary(b, pools.hat);
    rep.add_file("pool_gamma.bin", a.str());
    rep.add_file("pool_gamma_hat.bin", b.str());
  } else if (export_pools != "none") {
    throw std::invalid_argument("export_pools must be none, csv or binary");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Continuum constructions against the pools, and the Yule tree.

inline Report exp_continuum(const Config& cfg) {
  const Run run(cfg);
  auto rep = run.report("continuum");
  const auto samples = static_cast<std::size_t>(cfg.get_int("samples", 100000));
  const double tol = cfg.get_double("certified_tolerance", 1e-3);
  const double w1_max = cfg.get_double("w1_max", 0.05);
  const auto pools = make_pools(run, rep);

  const auto c = collect<double>(samples, run.threads, [&](std::size_t i) {
    auto rng = rng::substream(run.seed, kCont, i);
    return conductance_delta_certified(tol, rng);
  });
  const auto ch = collect<double>(samples, run.threads, [&](std::size_t i) {
    auto rng = rng::substream(run.seed, kCont + 1, i);
    return conductance_delta_hat_certified(tol, rng);
  });
  const double r = cfg.get_double("yule_r", 6.0);
  const auto yule_samples = static_cast<std::size_t>(cfg.get_int("yule_samples", 10000));
  const auto y = collect<YuleSample>(yule_samples, run.threads, [&](std::size_t i) {
    auto rng = rng::substream(run.seed, kCont + 2, i);
    return sample_yule(r, rng);
  });
  rep.raw() = CsvTable("kind,sample,value");
  for (std::size_t i = 0; i < c.size(); ++i) rep.raw().row("c_delta", i, c[i]);
  for (std::size_t i = 0; i < ch.size(); ++i) rep.raw().row("c_delta_hat", i, ch[i]);
  for (std::size_t i = 0; i < y.size(); ++i) rep.raw().row("yule_count", i, y[i].count);

  const auto sc = stats::summarize(c), sh = stats::summarize(ch);
  rep.estimate("mean_c_delta", sc.mean, sc.std_error());
  rep.estimate("mean_c_delta_hat", sh.mean, sh.std_error());
  const double w1 = stats::wasserstein1(c, pools.gamma.values);
  const double w1h = stats::wasserstein1(ch, pools.hat.values);
  rep.check("c_delta_vs_gamma_pool_w1", w1, "< " + fmt(w1_max), w1 < w1_max);
  rep.check("c_delta_hat_mean_range", sh.mean, "in [2.16, 2.26]", sh.mean >= 2.16 && sh.mean <= 2.26);
  rep.check("c_delta_hat_vs_gamma_hat_pool_w1", w1h, "< " + fmt(w1_max), w1h < w1_max);
  const bool ge1 = std::all_of(c.begin(), c.end(), [](double v) { return v >= 1.0; }) &&
                   std::all_of(ch.begin(), ch.end(), [](double v) { return v >= 1.0; });
  rep.check("conductances_at_least_1", ge1 ? 0.0 : 1.0, "all >= 1", ge1);

  std::vector<double> w, split;
  for (const auto& s : y) {
    w.push_back(std::exp(-r) * static_cast<double>(s.count));
    split.push_back(-std::expm1(-s.first_split));
  }
  const double ks = stats::ks_statistic(w, [](double x) { return x <= 0 ? 0.0 : -std::expm1(-x); });
  rep.exact("yule_w_ks_vs_exp1", ks);
  rep.check("yule_w_vs_exp1", ks, "KS < 0.05", ks < 0.05);
  const double ks_split = stats::ks_statistic(split, [](double x) { return std::clamp(x, 0.0, 1.0); });
  rep.check("yule_first_split_uniform", ks_split, "KS < 0.02", ks_split < 0.02);
  return rep;
}

// ---------------------------------------------------------------------------
// Flow-based harmonic measure against elimination; reduced against full.

inline Report exp_oracle(const Config& cfg) {
  const Run run(cfg);
  auto rep = run.report("oracle");
  const auto dist = run.offspring();
  const auto trees = static_cast<std::size_t>(cfg.get_int("trees", 56));
  const int n_max = static_cast<int>(cfg.get_int("n_max", 8));
  const auto max_vertices = static_cast<std::size_t>(cfg.get_int("max_vertices", 10000));
  const double tol = cfg.get_double("tolerance", 1e-10);
  rep.raw() = CsvTable("tree,n,leaf_id,depth,flow_reduced,solve_full,solve_reduced");
  double worst_flow = 0.0, worst_reduced = 0.0, worst_full_flow = 0.0, worst_conservation = 0.0;
  std::size_t leaves = 0, attempts = 0;
  for (std::size_t i = 0; i < trees; ++attempts) {
    const int n = 1 + static_cast<int>(i % static_cast<std::size_t>(n_max));
    auto rng = rng::substream(run.seed, kOracle, attempts);
    const auto cs = sample_conditioned(dist, n, rng, kDefaultRejectionBudget, run.node_budget);
    if (cs.tree.size() > max_vertices) continue;
    const auto red = reduce(cs.tree, n);
    const auto flow = harmonic_measure(red);
    const auto solve_red = hitting_probabilities_linear_solve(red.tree, n);
    const auto solve_full = hitting_probabilities_linear_solve(cs.tree, n);
    const auto flow_full = harmonic_measure(cs.tree, n);
    std::map<NodeId, double> full_by_id;
    for (std::size_t k = 0; k < solve_full.vertices.size(); ++k) full_by_id[solve_full.vertices[k]] = solve_full.mass[k];
    for (std::size_t k = 0; k < flow.vertices.size(); ++k) {
      const NodeId v = flow.vertices[k];
      const double full = full_by_id.at(red.origin_ids[static_cast<std::size_t>(v)]);
      worst_flow = std::max(worst_flow, std::abs(flow.mass[k] - solve_red.mass[k]));
      worst_reduced = std::max(worst_reduced, std::abs(flow.mass[k] - full));
      rep.raw().row(i, n, v, n, flow.mass[k], full, solve_red.mass[k]);
      ++leaves;
    }
    for (std::size_t k = 0; k < flow_full.mass.size(); ++k)
      worst_full_flow = std::max(worst_full_flow, std::abs(flow_full.mass[k] - solve_full.mass[k]));
    // Conservation: through-flow at each internal vertex equals the sum over children.
    const auto cm = subtree_conductances(red);
    std::vector<double> phi(red.tree.size(), 0.0);
    phi[0] = 1.0;
    for (NodeId v = 0; static_cast<std::size_t>(v) < red.tree.size(); ++v) {
      if (red.is_boundary(v)) continue;
      double out = 0.0;
      for (NodeId ch : red.tree.children(v)) {
        phi[static_cast<std::size_t>(ch)] = phi[static_cast<std::size_t>(v)] * cm.series_contribution(ch) / cm.conductance(v);
        out += phi[static_cast<std::size_t>(ch)];
      }
      worst_conservation = std::max(worst_conservation, std::abs(out - phi[static_cast<std::size_t>(v)]));
    }
    ++i;
  }
  rep.exact("leaves_compared", static_cast<double>(leaves));
  rep.exact("trees_skipped_for_size", static_cast<double>(attempts - trees));
  rep.check("flow_vs_elimination", worst_flow, "< " + fmt(tol), worst_flow < tol);
  rep.check("flow_vs_elimination_unreduced", worst_full_flow, "< " + fmt(tol), worst_full_flow < tol);
  rep.check("reduced_vs_full_tree", worst_reduced, "< " + fmt(tol), worst_reduced < tol);
  rep.check("flow_conservation", worst_conservation, "< 1e-12", worst_conservation < 1e-12);
  return rep;
}

using ExperimentFn = std::function<Report(const Config&)>;

inline const std::map<std::string, ExperimentFn>& registry() {
  static const std::map<std::string, ExperimentFn> r = {
      {"theorem1", exp_theorem1},       {"yaglom", exp_yaglom},   {"kolmogorov", exp_kolmogorov},
      {"conductance_cv", exp_conductance_cv}, {"kn", exp_kn},    {"ergodic_q", exp_ergodic_q},
      {"rde_suite", exp_rde_suite},     {"continuum", exp_continuum}, {"oracle", exp_oracle},
  };
  return r;
}

inline Report run_experiment(const std::string& name, const Config& cfg) {
  const auto& r = registry();
  const auto it = r.find(name);
  if (it == r.end()) throw std::invalid_argument("unknown experiment: " + name);
  return it->second(cfg);
}

}  // namespace hmgw::exp
