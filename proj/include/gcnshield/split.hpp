#pragma once

#include <algorithm>
#include <vector>

#include "gcnshield/common.hpp"
#include "gcnshield/graph.hpp"
#include "gcnshield/rng.hpp"

namespace gcnshield {

/// Train/test partition plus the attacked subset of the test nodes.
struct NodeSplit {
  std::vector<int> train;     // sorted
  std::vector<int> test;      // sorted, complement of train
  std::vector<int> attacked;  // sorted, subset of test
};

/// per_class uniform draws per class form the training set; the attacked
/// set is n_attacked uniform draws from the remaining (test) nodes.
inline NodeSplit sample_split(const LabelVector& labels, int per_class, int n_attacked, Rng& rng) {
  if (per_class <= 0) throw ConfigError("per_class must be positive");
  if (n_attacked < 0) throw ConfigError("n_attacked must be nonnegative");

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(labels.n_classes));
  for (int i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  NodeSplit split;
  for (int c = 0; c < labels.n_classes; ++c) {
    auto& members = by_class[static_cast<std::size_t>(c)];
    if (static_cast<int>(members.size()) < per_class)
      throw ConfigError("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                        " nodes, fewer than per_class=" + std::to_string(per_class));
    auto picked = rng.sample_without_replacement(members, static_cast<std::size_t>(per_class));
    split.train.insert(split.train.end(), picked.begin(), picked.end());
  }
  std::sort(split.train.begin(), split.train.end());

  std::vector<std::int8_t> in_train(static_cast<std::size_t>(labels.size()), 0);
  for (int v : split.train) in_train[static_cast<std::size_t>(v)] = 1;
  for (int v = 0; v < labels.size(); ++v)
    if (!in_train[static_cast<std::size_t>(v)]) split.test.push_back(v);

  if (n_attacked > static_cast<int>(split.test.size()))
    throw ConfigError("n_attacked=" + std::to_string(n_attacked) + " exceeds test set size " +
                      std::to_string(split.test.size()));
  split.attacked = rng.sample_without_replacement(split.test, static_cast<std::size_t>(n_attacked));
  std::sort(split.attacked.begin(), split.attacked.end());
  return split;
}

}  // namespace gcnshield
