#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gcnshield/common.hpp"
#include "gcnshield/graph.hpp"

namespace gcnshield {

struct LoadStats {
  std::int64_t dangling_edges_dropped = 0;  // .cites rows naming unknown ids
  BuildStats graph;
};

/// A loaded citation dataset: graph, per-node feature rows, labels, and the
/// string-id maps needed to reproduce the dense indexing.
struct Dataset {
  Graph graph;
  Mat features;  // n_nodes x n_features
  LabelVector labels;
  std::vector<std::string> node_ids;     // dense index -> original id
  std::vector<std::string> label_names;  // class index -> label string
  LoadStats stats;

  int n_nodes() const { return graph.n_nodes(); }
  int n_features() const { return static_cast<int>(features.cols()); }
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

inline bool parse_real(const std::string& tok, double& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + tok.size() && end != begin;
}

/// Deterministic shortest-ish formatting that round-trips float64.
inline std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back;
  if (parse_real(buf, back) && back == v) {
    // try a shorter form
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      if (parse_real(shorter, back) && back == v) return shorter;
    }
  }
  return buf;
}

}  // namespace detail

/// Parse the `<id> <f_1> ... <f_F> <label>` / `<id_cited> <id_citing>` text
/// pair. String ids map to dense indices in content-file order; labels map
/// to class indices in first-appearance order; edges naming unknown ids are
/// dropped and counted.
inline Dataset load_dataset(const std::string& content_path, const std::string& cites_path) {
  std::ifstream content(content_path);
  if (!content) throw InputError("cannot open " + content_path);

  std::vector<std::vector<double>> feature_rows;
  std::vector<std::string> node_ids;
  std::vector<std::string> label_names;
  std::vector<int> labels;
  std::unordered_map<std::string, int> id_of;
  std::unordered_map<std::string, int> class_of;

  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(content, line)) {
    ++lineno;
    const auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() < 3)
      throw ParseError(content_path, lineno, "expected <id> <features...> <label>");
    if (width == 0) width = toks.size();
    if (toks.size() != width)
      throw InputError(content_path + ":" + std::to_string(lineno) +
                       ": inconsistent feature width (got " + std::to_string(toks.size() - 2) +
                       " features, expected " + std::to_string(width - 2) + ")");
    if (id_of.count(toks.front()))
      throw InputError(content_path + ":" + std::to_string(lineno) + ": duplicate node id " + toks.front());

    std::vector<double> row(width - 2);
    for (std::size_t i = 1; i + 1 < toks.size(); ++i) {
      if (!detail::parse_real(toks[i], row[i - 1]))
        throw ParseError(content_path, lineno, "bad feature value '" + toks[i] + "'");
      if (!std::isfinite(row[i - 1]))
        throw ParseError(content_path, lineno, "non-finite feature value");
    }
    id_of.emplace(toks.front(), static_cast<int>(node_ids.size()));
    node_ids.push_back(toks.front());
    feature_rows.push_back(std::move(row));

    const auto& label_tok = toks.back();
    auto it = class_of.find(label_tok);
    if (it == class_of.end()) {
      it = class_of.emplace(label_tok, static_cast<int>(label_names.size())).first;
      label_names.push_back(label_tok);
    }
    labels.push_back(it->second);
  }
  const int n = static_cast<int>(node_ids.size());
  if (n == 0) throw InputError(content_path + ": no nodes");

  std::ifstream cites(cites_path);
  if (!cites) throw InputError("cannot open " + cites_path);
  EdgeList edges;
  LoadStats stats;
  lineno = 0;
  while (std::getline(cites, line)) {
    ++lineno;
    const auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != 2)
      throw ParseError(cites_path, lineno, "expected <id_cited> <id_citing>");
    const auto a = id_of.find(toks[0]);
    const auto b = id_of.find(toks[1]);
    if (a == id_of.end() || b == id_of.end()) {
      ++stats.dangling_edges_dropped;
      continue;
    }
    edges.emplace_back(a->second, b->second);
  }

  Dataset ds;
  ds.graph = build_graph(edges, n, &stats.graph);
  ds.features = Mat(n, static_cast<int>(width - 2));
  for (int i = 0; i < n; ++i)
    for (std::size_t j = 0; j < width - 2; ++j)
      ds.features(i, static_cast<int>(j)) = static_cast<real_t>(feature_rows[static_cast<std::size_t>(i)][j]);
  ds.labels = LabelVector{std::move(labels), static_cast<int>(label_names.size())};
  ds.node_ids = std::move(node_ids);
  ds.label_names = std::move(label_names);
  ds.stats = stats;
  return ds;
}

/// Canonical on-disk bundle: edges.tsv, features.tsv, labels.tsv, meta.json.
/// Byte-deterministic for a given dataset.
inline void write_bundle(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "edges.tsv");
    for (const auto& [u, v] : ds.graph.edge_list()) f << u << '\t' << v << '\n';
  }
  {
    std::ofstream f(dir / "features.tsv");
    for (int i = 0; i < ds.n_nodes(); ++i) {
      for (int j = 0; j < ds.n_features(); ++j) {
        if (j) f << '\t';
        f << detail::fmt_real(static_cast<double>(ds.features(i, j)));
      }
      f << '\n';
    }
  }
  {
    std::ofstream f(dir / "labels.tsv");
    for (int i = 0; i < ds.n_nodes(); ++i) f << ds.labels[i] << '\n';
  }
  {
    nlohmann::json meta;
    meta["n_nodes"] = ds.n_nodes();
    meta["n_features"] = ds.n_features();
    meta["n_classes"] = ds.labels.n_classes;
    meta["n_edges"] = ds.graph.n_edges();
    meta["node_ids"] = ds.node_ids;
    meta["label_names"] = ds.label_names;
    meta["stats"] = {{"dangling_edges_dropped", ds.stats.dangling_edges_dropped},
                     {"self_loops_dropped", ds.stats.graph.self_loops_dropped},
                     {"duplicate_edges_dropped", ds.stats.graph.duplicates_dropped}};
    std::ofstream f(dir / "meta.json");
    f << meta.dump(2) << '\n';
  }
}

inline Dataset read_bundle(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "meta.json");
  if (!mf) throw InputError("cannot open " + (dir / "meta.json").string());
  nlohmann::json meta = nlohmann::json::parse(mf);
  const int n = meta.at("n_nodes").get<int>();
  const int nf = meta.at("n_features").get<int>();

  Dataset ds;
  ds.node_ids = meta.at("node_ids").get<std::vector<std::string>>();
  ds.label_names = meta.at("label_names").get<std::vector<std::string>>();
  if (meta.contains("stats")) {
    ds.stats.dangling_edges_dropped = meta["stats"].value("dangling_edges_dropped", std::int64_t{0});
    ds.stats.graph.self_loops_dropped = meta["stats"].value("self_loops_dropped", std::int64_t{0});
    ds.stats.graph.duplicates_dropped = meta["stats"].value("duplicate_edges_dropped", std::int64_t{0});
  }

  {
    std::ifstream f(dir / "edges.tsv");
    if (!f) throw InputError("cannot open " + (dir / "edges.tsv").string());
    EdgeList edges;
    int u, v;
    while (f >> u >> v) edges.emplace_back(u, v);
    ds.graph = build_graph(edges, n);
  }
  {
    std::ifstream f(dir / "features.tsv");
    if (!f) throw InputError("cannot open " + (dir / "features.tsv").string());
    ds.features = Mat(n, nf);
    std::string line;
    int i = 0;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (i >= n) throw InputError("features.tsv has more rows than n_nodes");
      const auto toks = detail::tokenize(line);
      if (static_cast<int>(toks.size()) != nf)
        throw ParseError((dir / "features.tsv").string(), lineno, "bad column count");
      for (int j = 0; j < nf; ++j) {
        double v;
        if (!detail::parse_real(toks[static_cast<std::size_t>(j)], v))
          throw ParseError((dir / "features.tsv").string(), lineno, "bad value");
        ds.features(i, j) = static_cast<real_t>(v);
      }
      ++i;
    }
    if (i != n) throw InputError("features.tsv has fewer rows than n_nodes");
  }
  {
    std::ifstream f(dir / "labels.tsv");
    if (!f) throw InputError("cannot open " + (dir / "labels.tsv").string());
    std::vector<int> labels;
    int y;
    while (f >> y) labels.push_back(y);
    if (static_cast<int>(labels.size()) != n) throw InputError("labels.tsv row count mismatch");
    ds.labels = LabelVector{std::move(labels), meta.at("n_classes").get<int>()};
    ds.labels.validate();
  }
  return ds;
}

}  // namespace gcnshield
