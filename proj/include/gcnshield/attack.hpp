#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnshield/common.hpp"
#include "gcnshield/graph.hpp"
#include "gcnshield/rng.hpp"

namespace gcnshield {

struct AttackConfig {
  Ratio beta{1, 2};  // perturbation budget as a fraction of the target's degree
  /// Alternative reading of "Delete Internally": restrict removals to
  /// same-label incident edges. The budget truncates to that pool (additions
  /// shrink to match, keeping the degree fixed). Off = remove any edges.
  bool internal_only = false;
};

/// One attacked node's applied perturbation, in application order.
struct NodeAttack {
  int node = 0;
  int degree = 0;  // degree at this node's attack step
  std::vector<std::pair<int, int>> removed;
  std::vector<std::pair<int, int>> added;
};

/// Everything needed to replay the attack exactly.
struct AttackReport {
  AttackConfig config;
  std::vector<int> targets;          // requested, ascending
  std::vector<int> skipped;          // degree-zero targets, ascending
  std::vector<NodeAttack> per_node;  // one entry per non-skipped target
  int edges_removed = 0;
  int edges_added = 0;
};

namespace detail {

inline std::pair<int, int> canon_edge(int u, int v) { return {std::min(u, v), std::max(u, v)}; }

}  // namespace detail

/// DICE topology poisoning: for each target v in ascending order, remove
/// ceil(beta * deg(v)) incident edges uniformly at random and add the same
/// number of edges from v to uniformly sampled different-label non-neighbors.
/// Degrees are taken from the evolving graph, so earlier targets influence
/// later ones. Degree-zero targets are skipped and recorded. An exhausted
/// candidate pool raises AttackInfeasible naming the node (unless
/// internal_only truncates).
inline std::pair<Graph, AttackReport> dice_attack(const Graph& g, const LabelVector& labels,
                                                  std::vector<int> targets,
                                                  const AttackConfig& cfg, Rng& rng) {
  if (labels.size() != g.n_nodes()) throw InputError("label/graph size mismatch");
  labels.validate();
  if (cfg.beta.num < 0) throw ConfigError("beta must be non-negative");
  for (int t : targets)
    if (t < 0 || t >= g.n_nodes()) throw InputError("attack target out of range");
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  auto adj = g.adjacency_lists();  // working copy, sorted lists maintained
  const int n = g.n_nodes();

  auto contains = [&](int a, int b) {
    const auto& lst = adj[static_cast<std::size_t>(a)];
    return std::binary_search(lst.begin(), lst.end(), b);
  };
  auto erase_edge = [&](int a, int b) {
    auto& la = adj[static_cast<std::size_t>(a)];
    la.erase(std::lower_bound(la.begin(), la.end(), b));
    auto& lb = adj[static_cast<std::size_t>(b)];
    lb.erase(std::lower_bound(lb.begin(), lb.end(), a));
  };
  auto insert_edge = [&](int a, int b) {
    auto& la = adj[static_cast<std::size_t>(a)];
    la.insert(std::lower_bound(la.begin(), la.end(), b), b);
    auto& lb = adj[static_cast<std::size_t>(b)];
    lb.insert(std::lower_bound(lb.begin(), lb.end(), a), a);
  };

  AttackReport report;
  report.config = cfg;
  report.targets = targets;

  for (int v : targets) {
    const auto deg = static_cast<std::int64_t>(adj[static_cast<std::size_t>(v)].size());
    if (deg == 0) {
      report.skipped.push_back(v);
      continue;
    }
    const std::int64_t budget = cfg.beta.ceil_mul(deg);

    NodeAttack na;
    na.node = v;
    na.degree = static_cast<int>(deg);

    if (budget > 0) {
      std::vector<int> removal_pool;
      for (int u : adj[static_cast<std::size_t>(v)])
        if (!cfg.internal_only || labels[u] == labels[v]) removal_pool.push_back(u);
      const auto n_replace =
          std::min<std::int64_t>(budget, static_cast<std::int64_t>(removal_pool.size()));
      for (int u :
           rng.sample_without_replacement(removal_pool, static_cast<std::size_t>(n_replace))) {
        erase_edge(v, u);
        na.removed.push_back(detail::canon_edge(v, u));
      }

      std::vector<int> insertion_pool;
      for (int u = 0; u < n; ++u) {
        if (u == v || labels[u] == labels[v]) continue;
        if (contains(v, u)) continue;
        insertion_pool.push_back(u);
      }
      if (static_cast<std::int64_t>(insertion_pool.size()) < n_replace)
        throw AttackInfeasible(
            v, "not enough different-label non-neighbors for node " + std::to_string(v));
      for (int u :
           rng.sample_without_replacement(insertion_pool, static_cast<std::size_t>(n_replace))) {
        insert_edge(v, u);
        na.added.push_back(detail::canon_edge(v, u));
      }
    }

    report.edges_removed += static_cast<int>(na.removed.size());
    report.edges_added += static_cast<int>(na.added.size());
    report.per_node.push_back(std::move(na));
  }

  return {Graph::from_adjacency(adj), std::move(report)};
}

inline nlohmann::json to_json(const AttackReport& r) {
  nlohmann::json j;
  j["beta"] = {{"num", r.config.beta.num}, {"den", r.config.beta.den}};
  j["internal_only"] = r.config.internal_only;
  j["targets"] = r.targets;
  j["skipped"] = r.skipped;
  j["edges_removed"] = r.edges_removed;
  j["edges_added"] = r.edges_added;
  auto edges_json = [](const std::vector<std::pair<int, int>>& es) {
    nlohmann::json a = nlohmann::json::array();
    for (auto [u, v] : es) a.push_back({u, v});
    return a;
  };
  j["per_node"] = nlohmann::json::array();
  for (const auto& na : r.per_node)
    j["per_node"].push_back({{"node", na.node},
                             {"degree", na.degree},
                             {"removed", edges_json(na.removed)},
                             {"added", edges_json(na.added)}});
  return j;
}

inline AttackReport attack_report_from_json(const nlohmann::json& j) {
  AttackReport r;
  r.config.beta = Ratio(j.at("beta").at("num").get<std::int64_t>(),
                        j.at("beta").at("den").get<std::int64_t>());
  r.config.internal_only = j.at("internal_only").get<bool>();
  r.targets = j.at("targets").get<std::vector<int>>();
  r.skipped = j.at("skipped").get<std::vector<int>>();
  r.edges_removed = j.at("edges_removed").get<int>();
  r.edges_added = j.at("edges_added").get<int>();
  for (const auto& nj : j.at("per_node")) {
    NodeAttack na;
    na.node = nj.at("node").get<int>();
    na.degree = nj.at("degree").get<int>();
    for (const auto& e : nj.at("removed")) na.removed.emplace_back(e.at(0), e.at(1));
    for (const auto& e : nj.at("added")) na.added.emplace_back(e.at(0), e.at(1));
    r.per_node.push_back(std::move(na));
  }
  return r;
}

/// Re-applies a recorded attack to the clean graph; no randomness involved.
inline Graph replay_attack(const Graph& g, const AttackReport& report) {
  auto adj = g.adjacency_lists();
  auto erase_edge = [&](int a, int b) {
    auto& la = adj[static_cast<std::size_t>(a)];
    auto it = std::lower_bound(la.begin(), la.end(), b);
    if (it == la.end() || *it != b) throw InputError("replayed removal of a missing edge");
    la.erase(it);
    auto& lb = adj[static_cast<std::size_t>(b)];
    lb.erase(std::lower_bound(lb.begin(), lb.end(), a));
  };
  auto insert_edge = [&](int a, int b) {
    auto& la = adj[static_cast<std::size_t>(a)];
    auto it = std::lower_bound(la.begin(), la.end(), b);
    if (it != la.end() && *it == b) throw InputError("replayed addition of an existing edge");
    la.insert(it, b);
    auto& lb = adj[static_cast<std::size_t>(b)];
    lb.insert(std::lower_bound(lb.begin(), lb.end(), a), a);
  };
  for (const auto& na : report.per_node) {
    for (auto [u, v] : na.removed) erase_edge(u, v);
    for (auto [u, v] : na.added) insert_edge(u, v);
  }
  return Graph::from_adjacency(adj);
}

}  // namespace gcnshield
