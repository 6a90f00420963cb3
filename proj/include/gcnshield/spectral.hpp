#pragma once

#include <cmath>

#include <Eigen/Eigenvalues>

#include "gcnshield/common.hpp"
#include "gcnshield/graph.hpp"

namespace gcnshield {

/// Deterministic embedding fallback: eigenvectors of the symmetric normalized
/// Laplacian for the d smallest nontrivial eigenvalues (trivial = eigenvalue
/// numerically zero, one per connected component). On graphs with many
/// components the nontrivial pairs may run short; trivial vectors then pad
/// the tail, so the shape contract always holds. Sign convention: the first
/// nonzero entry of each eigenvector is positive.
inline Mat spectral_embedding(const Graph& g, int d) {
  const int n = g.n_nodes();
  if (d < 1) throw ConfigError("embedding dimension must be >= 1");
  if (d >= n) throw ConfigError("embedding dimension must be < number of nodes");

  Mat lap = Mat::Zero(n, n);
  for (int v = 0; v < n; ++v)
    if (g.degree(v) > 0) lap(v, v) = real_t(1);
  for (int u = 0; u < n; ++u) {
    const real_t du = static_cast<real_t>(g.degree(u));
    for (int v : g.neighbors(u))
      lap(u, v) = real_t(-1) / std::sqrt(du * static_cast<real_t>(g.degree(v)));
  }

  Eigen::SelfAdjointEigenSolver<Mat> solver(lap);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
  const Vec& vals = solver.eigenvalues();   // ascending
  const Mat& vecs = solver.eigenvectors();

  constexpr real_t kTrivial = real_t(1e-8);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < n && static_cast<int>(order.size()) < d; ++i)
    if (vals[i] > kTrivial) order.push_back(i);
  for (int i = 0; i < n && static_cast<int>(order.size()) < d; ++i)
    if (vals[i] <= kTrivial) order.push_back(i);

  Mat e(n, d);
  for (int c = 0; c < d; ++c) {
    Vec col = vecs.col(order[static_cast<std::size_t>(c)]);
    for (int r = 0; r < n; ++r) {
      if (col[r] != real_t(0)) {
        if (col[r] < real_t(0)) col = -col;
        break;
      }
    }
    e.col(c) = col;
  }
  return e;
}

}  // namespace gcnshield
