#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gcnshield/common.hpp"

namespace gcnshield {

struct WilcoxonResult {
  double p_value = 1.0;   // two-sided
  double w_plus = 0.0;    // sum of positive-difference ranks
  int n = 0;              // pairs remaining after dropping zero differences
  bool exact = false;     // exact null enumeration vs normal approximation
};

namespace detail {

/// Average ranks of |d| doubled so ties-at-.5 stay integral: rank 1 -> 2,
/// tied ranks 2.5, 2.5 -> 5, 5.
inline std::vector<std::int64_t> doubled_ranks(const std::vector<double>& abs_d) {
  const std::size_t n = abs_d.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
  std::vector<std::int64_t> out(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_d[idx[j + 1]] == abs_d[idx[i]]) ++j;
    // positions i..j (0-based) share the average rank; doubled it is (i+1)+(j+1)
    const std::int64_t doubled = static_cast<std::int64_t>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) out[idx[k]] = doubled;
    i = j + 1;
  }
  return out;
}

}  // namespace detail

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped (Wilcoxon's rule); fewer than 5 nonzero pairs raises
/// InsufficientData. Exact enumeration of the 2^n sign null for n <= 25 via
/// subset-sum counting; normal approximation with tie and continuity
/// corrections above that.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                           const std::vector<double>& y) {
  if (x.size() != y.size()) throw InputError("paired samples differ in length");

  std::vector<double> abs_d;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;
    abs_d.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  const int n = static_cast<int>(abs_d.size());
  if (n < 5)
    throw InsufficientData("need at least 5 nonzero differences, have " + std::to_string(n));

  const auto ranks2 = detail::doubled_ranks(abs_d);
  std::int64_t w2 = 0;  // doubled W+
  std::int64_t total2 = 0;
  for (std::size_t i = 0; i < ranks2.size(); ++i) {
    total2 += ranks2[i];
    if (positive[i]) w2 += ranks2[i];
  }

  WilcoxonResult res;
  res.n = n;
  res.w_plus = static_cast<double>(w2) / 2.0;

  if (n <= 25) {
    res.exact = true;
    // dp[s] = number of sign assignments whose doubled positive-rank sum is s
    std::vector<std::uint64_t> dp(static_cast<std::size_t>(total2) + 1, 0);
    dp[0] = 1;
    for (const std::int64_t r : ranks2)
      for (std::int64_t s = total2; s >= r; --s) dp[static_cast<std::size_t>(s)] += dp[static_cast<std::size_t>(s - r)];
    std::uint64_t c_le = 0, c_ge = 0;
    for (std::int64_t s = 0; s <= total2; ++s) {
      if (s <= w2) c_le += dp[static_cast<std::size_t>(s)];
      if (s >= w2) c_ge += dp[static_cast<std::size_t>(s)];
    }
    const double denom = std::pow(2.0, n);
    res.p_value = std::min(1.0, 2.0 * static_cast<double>(std::min(c_le, c_ge)) / denom);
    return res;
  }

  const double nd = n;
  const double mean = nd * (nd + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<double> sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
  const double diff = res.w_plus - mean;
  const double shifted = std::abs(diff) <= 0.5 ? 0.0 : diff - (diff > 0 ? 0.5 : -0.5);
  const double z = shifted / std::sqrt(var);
  res.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
  return res;
}

}  // namespace gcnshield
