#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "gcnshield/common.hpp"

namespace gcnshield {

/// Pairwise Euclidean distances over embedding rows. The full N x N matrix is
/// materialized up to a size cap (covers the common citation networks); above
/// it, rows are computed on demand from the stored embedding with the same
/// per-pair kernel, so both paths give identical values.
class DistanceMatrix {
 public:
  static constexpr int kMaterializeLimit = 25000;

  explicit DistanceMatrix(Mat embedding) : e_(std::move(embedding)) {
    if (!e_.allFinite()) throw InputError("embedding contains non-finite values");
    if (n() <= kMaterializeLimit) {
      full_.resize(n(), n());
      for (int i = 0; i < n(); ++i) {
        full_(i, i) = real_t(0);
        for (int j = i + 1; j < n(); ++j) {
          const real_t dist = pair(i, j);
          full_(i, j) = dist;
          full_(j, i) = dist;
        }
      }
    }
  }

  int n() const { return static_cast<int>(e_.rows()); }
  int dim() const { return static_cast<int>(e_.cols()); }
  bool materialized() const { return full_.size() > 0; }

  real_t operator()(int i, int j) const {
    check(i);
    check(j);
    return materialized() ? full_(i, j) : pair(i, j);
  }

  /// All distances from v, as a dense vector (row v of D).
  Vec row(int v) const {
    check(v);
    if (materialized()) return full_.row(v).transpose();
    Vec out(n());
    for (int j = 0; j < n(); ++j) out[j] = pair(v, j);
    return out;
  }

 private:
  void check(int i) const {
    if (i < 0 || i >= n()) throw InputError("node out of range");
  }
  real_t pair(int i, int j) const { return (e_.row(i) - e_.row(j)).norm(); }

  Mat e_;
  Mat full_;
};

inline DistanceMatrix distance_matrix(const Mat& embedding) { return DistanceMatrix(embedding); }

/// The p nodes closest to v, excluding v itself, by ascending distance with
/// ties broken by ascending node index. The result for p is always a prefix
/// of the result for p+1.
inline std::vector<int> top_p_similar(const DistanceMatrix& d, int v, int p) {
  if (v < 0 || v >= d.n()) throw InputError("node out of range");
  if (p < 1 || p >= d.n())
    throw ConfigError("p must satisfy 1 <= p <= N-1 (p=" + std::to_string(p) +
                      ", N=" + std::to_string(d.n()) + ")");
  const Vec dist = d.row(v);
  std::vector<std::pair<real_t, int>> order;
  order.reserve(static_cast<std::size_t>(d.n()) - 1);
  for (int k = 0; k < d.n(); ++k)
    if (k != v) order.emplace_back(dist[k], k);
  std::partial_sort(order.begin(), order.begin() + p, order.end());
  std::vector<int> out(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) out[static_cast<std::size_t>(i)] = order[static_cast<std::size_t>(i)].second;
  return out;
}

/// Same selection skipping an excluded (sorted) node set; used by the
/// donor-filtering option.
inline std::vector<int> top_p_similar_excluding(const DistanceMatrix& d, int v, int p,
                                                const std::vector<int>& excluded) {
  if (v < 0 || v >= d.n()) throw InputError("node out of range");
  const Vec dist = d.row(v);
  std::vector<std::pair<real_t, int>> order;
  for (int k = 0; k < d.n(); ++k) {
    if (k == v) continue;
    if (std::binary_search(excluded.begin(), excluded.end(), k)) continue;
    order.emplace_back(dist[k], k);
  }
  if (p < 1 || p > static_cast<int>(order.size()))
    throw ConfigError("p exceeds the candidate donor pool");
  std::partial_sort(order.begin(), order.begin() + p, order.end());
  std::vector<int> out(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) out[static_cast<std::size_t>(i)] = order[static_cast<std::size_t>(i)].second;
  return out;
}

}  // namespace gcnshield
