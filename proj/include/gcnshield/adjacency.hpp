#pragma once

#include <cmath>
#include <vector>

#include "gcnshield/common.hpp"
#include "gcnshield/graph.hpp"

namespace gcnshield {

/// Self-loop-augmented symmetric normalization applied at every layer.
/// Entry (u, v) = 1/sqrt((d_u+1)(d_v+1)) for an edge, (v, v) = 1/(d_v+1).
using NormalizedAdjacency = SpMat;

inline NormalizedAdjacency normalized_adjacency(const Graph& g) {
  const int n = g.n_nodes();
  std::vector<real_t> inv_sqrt(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v)
    inv_sqrt[static_cast<std::size_t>(v)] =
        real_t(1) / std::sqrt(static_cast<real_t>(g.degree(v) + 1));

  std::vector<Eigen::Triplet<real_t>> trip;
  trip.reserve(static_cast<std::size_t>(2 * g.n_edges() + n));
  for (int u = 0; u < n; ++u) {
    trip.emplace_back(u, u, inv_sqrt[static_cast<std::size_t>(u)] * inv_sqrt[static_cast<std::size_t>(u)]);
    for (int v : g.neighbors(u))
      trip.emplace_back(u, v, inv_sqrt[static_cast<std::size_t>(u)] * inv_sqrt[static_cast<std::size_t>(v)]);
  }
  SpMat a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

/// The (u, v) entry of the normalized adjacency without building the matrix.
/// Degrees come from the full graph, so localized computations match the
/// global operator exactly.
inline real_t normalized_entry(const Graph& g, int u, int v) {
  if (u == v) return real_t(1) / static_cast<real_t>(g.degree(u) + 1);
  return real_t(1) / std::sqrt(static_cast<real_t>(g.degree(u) + 1) *
                               static_cast<real_t>(g.degree(v) + 1));
}

}  // namespace gcnshield
