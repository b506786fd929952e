#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <string>
#include <vector>

namespace testing_util {

// Pearson goodness-of-fit p-value. Categories with expected count below 5
// are pooled together; observations outside the law count toward that pool.
inline double chi_square_pvalue(const std::vector<double>& expected_prob, const std::vector<double>& observed) {
  double total = 0.0;
  for (double o : observed) total += o;
  double stat = 0.0, pooled_e = 0.0, pooled_o = 0.0;
  int bins = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = (i < expected_prob.size() ? expected_prob[i] : 0.0) * total;
    if (e < 5.0) {
      pooled_e += e;
      pooled_o += observed[i];
      continue;
    }
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++bins;
  }
  if (pooled_e > 0.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++bins;
  } else if (pooled_o > 0.0) {
    return 0.0;
  }
  if (bins < 2) return 1.0;
  boost::math::chi_squared chi(bins - 1);
  return boost::math::cdf(boost::math::complement(chi, stat));
}

inline double chi_square_pvalue(const std::map<std::string, double>& law, const std::map<std::string, int>& counts) {
  std::vector<double> e, o;
  for (const auto& [k, p] : law) {
    e.push_back(p);
    const auto it = counts.find(k);
    o.push_back(it == counts.end() ? 0.0 : it->second);
  }
  for (const auto& [k, c] : counts)
    if (!law.count(k)) {
      e.push_back(0.0);
      o.push_back(c);
    }
  return chi_square_pvalue(e, o);
}

}  // namespace testing_util
