#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnshield/common.hpp"
#include "gcnshield/gcn.hpp"
#include "gcnshield/graph.hpp"
#include "gcnshield/rng.hpp"
#include "gcnshield/similarity.hpp"

namespace gcnshield {

struct DefenseOptions {
  /// Drop donors that are themselves attacked (needs `attacked` to be set).
  bool exclude_attacked_donors = false;
  /// Weight donor vectors by 1/(distance + 1e-9) instead of uniformly.
  bool distance_weighted = false;
  /// Sorted attacked-node set, consulted only by exclude_attacked_donors.
  const std::vector<int>* attacked = nullptr;
};

/// One corrected node: its donors, every per-donor softmax, the aggregate,
/// and the final label.
struct CopyPrediction {
  int node = 0;
  std::vector<int> donors;
  std::vector<double> donor_distances;
  std::vector<Vec> donor_outputs;
  Vec aggregate;
  int label = 0;
};

/// Softmax at node k when row k of X is (virtually) replaced by row v.
/// k == v degenerates to the base prediction at v.
inline Vec copy_and_predict(const GcnModel& m, const Graph& g, const Mat& x, int v, int k) {
  if (v < 0 || v >= g.n_nodes() || k < 0 || k >= g.n_nodes())
    throw InputError("node out of range");
  RowOverlay overlay{k, x.row(v).transpose()};
  return predict_node_local(m, g, x, k, &overlay);
}

namespace detail {

inline std::vector<int> select_donors(const DistanceMatrix& d, int v, int p,
                                      const DefenseOptions& opt) {
  if (opt.exclude_attacked_donors && opt.attacked)
    return top_p_similar_excluding(d, v, p, *opt.attacked);
  return top_p_similar(d, v, p);
}

inline Vec aggregate_outputs(const std::vector<Vec>& outputs,
                             const std::vector<double>& distances, bool weighted) {
  Vec agg = Vec::Zero(outputs.front().size());
  double total = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double w = weighted ? 1.0 / (distances[i] + 1e-9) : 1.0;
    agg += static_cast<real_t>(w) * outputs[i];
    total += w;
  }
  return agg / static_cast<real_t>(total);
}

/// Plurality over votes; ties among the leaders resolved uniformly by rng.
inline int plurality(const std::vector<int>& votes, int n_classes, Rng& rng) {
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (int c : votes) counts[static_cast<std::size_t>(c)]++;
  const int best = *std::max_element(counts.begin(), counts.end());
  std::vector<int> leaders;
  for (int c = 0; c < n_classes; ++c)
    if (counts[static_cast<std::size_t>(c)] == best) leaders.push_back(c);
  if (leaders.size() == 1) return leaders.front();
  return leaders[static_cast<std::size_t>(rng.index(leaders.size()))];
}

}  // namespace detail

/// Alg. 1: donors from the distance matrix, copy v's features onto each
/// donor, average the donor softmaxes, argmax (lowest class index on ties).
inline CopyPrediction correct_node(const GcnModel& m, const Graph& g, const Mat& x,
                                   const DistanceMatrix& d, int v, int p,
                                   const DefenseOptions& opt = {}) {
  CopyPrediction cp;
  cp.node = v;
  cp.donors = detail::select_donors(d, v, p, opt);
  for (int k : cp.donors) {
    cp.donor_distances.push_back(static_cast<double>(d(v, k)));
    cp.donor_outputs.push_back(copy_and_predict(m, g, x, v, k));
  }
  cp.aggregate = detail::aggregate_outputs(cp.donor_outputs, cp.donor_distances,
                                           opt.distance_weighted);
  cp.label = argmax_lowest(cp.aggregate);
  return cp;
}

/// Majority vote over donor argmaxes; ties resolved uniformly at random.
inline int majority_vote_correct(const GcnModel& m, const Graph& g, const Mat& x,
                                 const DistanceMatrix& d, int v, int p, Rng& rng,
                                 const DefenseOptions& opt = {}) {
  const auto donors = detail::select_donors(d, v, p, opt);
  std::vector<int> votes;
  votes.reserve(donors.size());
  int n_classes = 0;
  for (int k : donors) {
    const Vec out = copy_and_predict(m, g, x, v, k);
    n_classes = static_cast<int>(out.size());
    votes.push_back(argmax_lowest(out));
  }
  return detail::plurality(votes, n_classes, rng);
}

enum class AggregationMode { average, vote };

/// Ablation: aggregate the donors' *own* predictions — no feature copying.
inline Vec no_copying_average(const GcnModel& m, const Graph& g, const Mat& x,
                              const DistanceMatrix& d, int v, int p,
                              const DefenseOptions& opt = {}) {
  const auto donors = detail::select_donors(d, v, p, opt);
  std::vector<Vec> outputs;
  std::vector<double> distances;
  for (int k : donors) {
    outputs.push_back(predict_node_local(m, g, x, k));
    distances.push_back(static_cast<double>(d(v, k)));
  }
  return detail::aggregate_outputs(outputs, distances, opt.distance_weighted);
}

inline int no_copying_predict(const GcnModel& m, const Graph& g, const Mat& x,
                              const DistanceMatrix& d, int v, int p, AggregationMode mode,
                              Rng& rng, const DefenseOptions& opt = {}) {
  if (mode == AggregationMode::average)
    return argmax_lowest(no_copying_average(m, g, x, d, v, p, opt));
  const auto donors = detail::select_donors(d, v, p, opt);
  std::vector<int> votes;
  int n_classes = 0;
  for (int k : donors) {
    const Vec out = predict_node_local(m, g, x, k);
    n_classes = static_cast<int>(out.size());
    votes.push_back(argmax_lowest(out));
  }
  return detail::plurality(votes, n_classes, rng);
}

/// Independent correction of every attacked node. Donor selection and
/// per-node outputs are pure functions of the inputs, so worker count never
/// changes the result. Per-node failures are rethrown with the node id.
inline std::map<int, CopyPrediction> correct_all(const GcnModel& m, const Graph& g, const Mat& x,
                                                 const DistanceMatrix& d,
                                                 const std::vector<int>& attacked, int p,
                                                 const DefenseOptions& opt = {}, int jobs = 1) {
  std::vector<CopyPrediction> results(attacked.size());
  std::vector<std::string> errors(attacked.size());

  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < attacked.size(); i += step) {
      try {
        results[i] = correct_node(m, g, x, d, attacked[i], p, opt);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  if (jobs <= 1 || attacked.size() < 2) {
    work(0, 1);
  } else {
    const auto n_threads = static_cast<std::size_t>(jobs);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work, t, n_threads);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < attacked.size(); ++i)
    if (!errors[i].empty())
      throw Error("correction failed at node " + std::to_string(attacked[i]) + ": " + errors[i]);

  std::map<int, CopyPrediction> out;
  for (std::size_t i = 0; i < attacked.size(); ++i) out.emplace(attacked[i], std::move(results[i]));
  return out;
}

/// Audit record consumed by the report command.
inline nlohmann::json to_json(const CopyPrediction& cp) {
  nlohmann::json j;
  j["node"] = cp.node;
  j["label"] = cp.label;
  j["donors"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cp.donors.size(); ++i)
    j["donors"].push_back({{"node", cp.donors[i]},
                           {"distance", cp.donor_distances[i]},
                           {"argmax", argmax_lowest(cp.donor_outputs[i])}});
  j["aggregate"] = std::vector<double>(cp.aggregate.data(), cp.aggregate.data() + cp.aggregate.size());
  return j;
}

}  // namespace gcnshield
