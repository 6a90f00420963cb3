#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <span>
#include <utility>
#include <vector>

#include "gcnshield/common.hpp"

namespace gcnshield {

using EdgeList = std::vector<std::pair<int, int>>;

/// Counters for input rows dropped while building a graph.
struct BuildStats {
  std::int64_t self_loops_dropped = 0;
  std::int64_t duplicates_dropped = 0;
};

/// Undirected simple graph in compressed sparse row form.
/// Symmetric, no self-loops, no parallel edges; neighbor lists sorted.
class Graph {
 public:
  Graph() = default;

  static Graph from_edge_list(const EdgeList& edges, int n_nodes, BuildStats* stats = nullptr) {
    if (n_nodes < 0) throw InputError("n_nodes must be nonnegative");
    BuildStats local;
    std::vector<std::pair<int, int>> canon;
    canon.reserve(edges.size());
    for (const auto& [u, v] : edges) {
      if (u < 0 || u >= n_nodes || v < 0 || v >= n_nodes)
        throw InputError("edge endpoint out of range: (" + std::to_string(u) + ", " +
                         std::to_string(v) + ") with n_nodes=" + std::to_string(n_nodes));
      if (u == v) {
        ++local.self_loops_dropped;
        continue;
      }
      canon.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(canon.begin(), canon.end());
    const auto last = std::unique(canon.begin(), canon.end());
    local.duplicates_dropped = static_cast<std::int64_t>(canon.end() - last);
    canon.erase(last, canon.end());
    if (stats) *stats = local;

    Graph g;
    g.n_ = n_nodes;
    g.offsets_.assign(static_cast<std::size_t>(n_nodes) + 1, 0);
    for (const auto& [u, v] : canon) {
      ++g.offsets_[static_cast<std::size_t>(u) + 1];
      ++g.offsets_[static_cast<std::size_t>(v) + 1];
    }
    for (std::size_t i = 1; i < g.offsets_.size(); ++i) g.offsets_[i] += g.offsets_[i - 1];
    g.neighbors_.resize(g.offsets_.back());
    std::vector<int> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, v] : canon) {
      g.neighbors_[static_cast<std::size_t>(cursor[u]++)] = v;
      g.neighbors_[static_cast<std::size_t>(cursor[v]++)] = u;
    }
    // Canonical pairs were sorted, so each row is already ascending.
    return g;
  }

  /// Rebuild from adjacency lists (each list sorted or not; symmetrized input expected).
  static Graph from_adjacency(const std::vector<std::vector<int>>& adj) {
    EdgeList edges;
    for (int u = 0; u < static_cast<int>(adj.size()); ++u)
      for (int v : adj[static_cast<std::size_t>(u)])
        if (u < v) edges.emplace_back(u, v);
    return from_edge_list(edges, static_cast<int>(adj.size()));
  }

  int n_nodes() const { return n_; }

  /// Number of undirected edges.
  std::int64_t n_edges() const { return static_cast<std::int64_t>(neighbors_.size()) / 2; }

  int degree(int v) const { return offsets_[static_cast<std::size_t>(v) + 1] - offsets_[static_cast<std::size_t>(v)]; }

  std::span<const int> neighbors(int v) const {
    return {neighbors_.data() + offsets_[static_cast<std::size_t>(v)],
            neighbors_.data() + offsets_[static_cast<std::size_t>(v) + 1]};
  }

  bool has_edge(int u, int v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  /// Undirected edges as (u, v) with u < v, ascending.
  EdgeList edge_list() const {
    EdgeList out;
    out.reserve(static_cast<std::size_t>(n_edges()));
    for (int u = 0; u < n_; ++u)
      for (int v : neighbors(u))
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  std::vector<std::vector<int>> adjacency_lists() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_));
    for (int u = 0; u < n_; ++u) {
      const auto nb = neighbors(u);
      adj[static_cast<std::size_t>(u)].assign(nb.begin(), nb.end());
    }
    return adj;
  }

  /// Structural sanity: symmetry, sorted rows, no loops or duplicates.
  void validate() const {
    for (int u = 0; u < n_; ++u) {
      const auto nb = neighbors(u);
      for (std::size_t i = 0; i < nb.size(); ++i) {
        const int v = nb[i];
        if (v < 0 || v >= n_) throw InputError("neighbor out of range");
        if (v == u) throw InputError("self-loop at node " + std::to_string(u));
        if (i > 0 && nb[i] <= nb[i - 1]) throw InputError("unsorted/duplicate neighbor row");
        if (!has_edge(v, u)) throw InputError("asymmetric edge (" + std::to_string(u) + ", " + std::to_string(v) + ")");
      }
    }
  }

  bool operator==(const Graph& o) const {
    return n_ == o.n_ && offsets_ == o.offsets_ && neighbors_ == o.neighbors_;
  }

 private:
  int n_ = 0;
  std::vector<int> offsets_{0};
  std::vector<int> neighbors_;
};

inline Graph build_graph(const EdgeList& edges, int n_nodes, BuildStats* stats = nullptr) {
  return Graph::from_edge_list(edges, n_nodes, stats);
}

/// All nodes within shortest-path distance <= L of v, v included, ascending.
inline std::vector<int> l_hop_neighborhood(const Graph& g, int v, int hops) {
  if (v < 0 || v >= g.n_nodes()) throw InputError("node out of range");
  if (hops < 0) throw InputError("hop count must be nonnegative");
  std::vector<std::int8_t> seen(static_cast<std::size_t>(g.n_nodes()), 0);
  std::vector<int> frontier{v};
  seen[static_cast<std::size_t>(v)] = 1;
  std::vector<int> out{v};
  for (int level = 0; level < hops && !frontier.empty(); ++level) {
    std::vector<int> next;
    for (int u : frontier) {
      for (int w : g.neighbors(u)) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          next.push_back(w);
          out.push_back(w);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Class labels for every node, values in [0, n_classes).
struct LabelVector {
  std::vector<int> values;
  int n_classes = 0;

  int size() const { return static_cast<int>(values.size()); }
  int operator[](int i) const { return values[static_cast<std::size_t>(i)]; }

  void validate() const {
    for (int y : values)
      if (y < 0 || y >= n_classes) throw InputError("label index out of range");
  }
};

}  // namespace gcnshield
