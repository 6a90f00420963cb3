#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcnshield/attack.hpp"
#include "gcnshield/common.hpp"
#include "gcnshield/dataset.hpp"
#include "gcnshield/defense.hpp"
#include "gcnshield/gcn.hpp"
#include "gcnshield/gvae.hpp"
#include "gcnshield/similarity.hpp"
#include "gcnshield/spectral.hpp"
#include "gcnshield/split.hpp"
#include "gcnshield/wilcoxon.hpp"

namespace gcnshield {

/// Per-stage rng stream tags; every trial derives all of its randomness from
/// base_seed + trial_index through these, so methods within a trial share the
/// same split and attack while stages stay independently reproducible.
namespace stream {
inline constexpr std::uint64_t split = 0, attack = 1, gcn = 2, embedder = 3, tiebreak = 4,
                               mlp = 5;
}

struct ExperimentConfig {
  std::string dataset = "cora";
  int per_class = 10;
  int n_attacked = 50;
  Ratio beta{1, 2};
  int p = 10;
  int n_trials = 50;
  std::string embedder = "gvae";  // or "spectral"
  std::uint64_t base_seed = 1;
  int jobs = 1;
  bool exclude_attacked_donors = false;
  bool distance_weighted = false;

  TrainConfig gcn;       // also the MLP baseline's budget
  GvaeConfig gvae;
  int spectral_dim = 16;

  void validate() const {
    if (per_class <= 0) throw ConfigError("per_class must be positive");
    if (n_attacked <= 0) throw ConfigError("n_attacked must be positive");
    if (p <= 0) throw ConfigError("p must be positive");
    if (n_trials <= 0) throw ConfigError("n_trials must be positive");
    if (jobs <= 0) throw ConfigError("jobs must be positive");
    if (beta.num <= 0 || beta.value() > 1.0) throw ConfigError("beta must lie in (0, 1]");
    if (embedder != "gvae" && embedder != "spectral")
      throw ConfigError("embedder must be 'gvae' or 'spectral'");
  }
};

/// Flat JSON keys mirror the config; training knobs use prefixed overrides.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  return nlohmann::json{{"dataset", c.dataset},
                        {"per_class", c.per_class},
                        {"n_attacked", c.n_attacked},
                        {"beta", c.beta.value()},
                        {"p", c.p},
                        {"n_trials", c.n_trials},
                        {"embedder", c.embedder},
                        {"base_seed", c.base_seed},
                        {"jobs", c.jobs},
                        {"exclude_attacked_donors", c.exclude_attacked_donors},
                        {"distance_weighted", c.distance_weighted},
                        {"gcn_hidden", c.gcn.hidden_dim},
                        {"gcn_lr", c.gcn.learning_rate},
                        {"gcn_epochs", c.gcn.epochs},
                        {"gcn_dropout", c.gcn.dropout},
                        {"gcn_weight_decay", c.gcn.weight_decay},
                        {"gvae_hidden", c.gvae.hidden_dim},
                        {"gvae_latent", c.gvae.latent_dim},
                        {"gvae_lr", c.gvae.learning_rate},
                        {"gvae_epochs", c.gvae.epochs},
                        {"spectral_dim", c.spectral_dim}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "dataset") c.dataset = value.get<std::string>();
      else if (key == "per_class") c.per_class = value.get<int>();
      else if (key == "n_attacked") c.n_attacked = value.get<int>();
      else if (key == "beta") c.beta = Ratio::from_double(value.get<double>());
      else if (key == "p") c.p = value.get<int>();
      else if (key == "n_trials") c.n_trials = value.get<int>();
      else if (key == "embedder") c.embedder = value.get<std::string>();
      else if (key == "base_seed") c.base_seed = value.get<std::uint64_t>();
      else if (key == "jobs") c.jobs = value.get<int>();
      else if (key == "exclude_attacked_donors") c.exclude_attacked_donors = value.get<bool>();
      else if (key == "distance_weighted") c.distance_weighted = value.get<bool>();
      else if (key == "gcn_hidden") c.gcn.hidden_dim = value.get<int>();
      else if (key == "gcn_lr") c.gcn.learning_rate = value.get<double>();
      else if (key == "gcn_epochs") c.gcn.epochs = value.get<int>();
      else if (key == "gcn_dropout") c.gcn.dropout = value.get<double>();
      else if (key == "gcn_weight_decay") c.gcn.weight_decay = value.get<double>();
      else if (key == "gvae_hidden") c.gvae.hidden_dim = value.get<int>();
      else if (key == "gvae_latent") c.gvae.latent_dim = value.get<int>();
      else if (key == "gvae_lr") c.gvae.learning_rate = value.get<double>();
      else if (key == "gvae_epochs") c.gvae.epochs = value.get<int>();
      else if (key == "spectral_dim") c.spectral_dim = value.get<int>();
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

inline constexpr std::array<const char*, 6> kMethodNames = {
    "before_copying", "copying_avg", "copying_vote", "nocopy_avg", "nocopy_vote", "mlp_baseline"};

struct TrialResult {
  int trial_index = 0;
  std::uint64_t seed = 0;
  std::string embedder;
  std::vector<int> attacked;
  std::array<double, 6> accuracy{};  // indexed like kMethodNames

  double operator[](std::size_t m) const { return accuracy[m]; }
};

/// Fraction of `subset` where prediction equals label. `predictions` is
/// indexed by node id and must cover every subset member.
inline double accuracy(const std::vector<int>& predictions, const LabelVector& labels,
                       const std::vector<int>& subset) {
  if (subset.empty()) throw MetricUndefined("accuracy over an empty node set");
  int correct = 0;
  for (int v : subset) {
    if (v < 0 || v >= static_cast<int>(predictions.size()))
      throw InputError("subset node " + std::to_string(v) + " has no prediction");
    if (predictions[static_cast<std::size_t>(v)] == labels[v]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(subset.size());
}

namespace detail {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(std::string("stage ") + name + ": " + e.what());
  }
}

}  // namespace detail

/// One full trial: split, attack, GCN, the four corrected predictors, and
/// the MLP baseline, all evaluated on the identical attacked set. Fully
/// determined by (cfg, base_seed + trial_index).
inline TrialResult run_trial(const Dataset& ds, const ExperimentConfig& cfg, int trial_index) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(trial_index);
  TrialResult res;
  res.trial_index = trial_index;
  res.seed = seed;
  res.embedder = cfg.embedder;

  Rng r_split = Rng::derive(seed, stream::split);
  const NodeSplit split = detail::stage("split", [&] {
    return sample_split(ds.labels, cfg.per_class, cfg.n_attacked, r_split);
  });
  res.attacked = split.attacked;

  Rng r_attack = Rng::derive(seed, stream::attack);
  const Graph g_att = detail::stage("attack", [&] {
    AttackConfig ac;
    ac.beta = cfg.beta;
    return dice_attack(ds.graph, ds.labels, split.attacked, ac, r_attack).first;
  });

  Rng r_gcn = Rng::derive(seed, stream::gcn);
  const NormalizedAdjacency a_att = normalized_adjacency(g_att);
  const GcnModel model = detail::stage("train_gcn", [&] {
    TrainConfig tc = cfg.gcn;
    tc.seed = seed;
    GcnModel m = init_model(ds.n_features(), tc.hidden_dim, ds.labels.n_classes, r_gcn);
    return train(std::move(m), a_att, ds.features, ds.labels, split.train, tc, r_gcn);
  });

  std::vector<int> base_pred(static_cast<std::size_t>(ds.n_nodes()));
  detail::stage("before_copying", [&] {
    const SoftmaxOutput probs = forward(model, a_att, ds.features);
    for (int i = 0; i < ds.n_nodes(); ++i)
      base_pred[static_cast<std::size_t>(i)] = argmax_lowest(probs.row(i).transpose());
    res.accuracy[0] = accuracy(base_pred, ds.labels, split.attacked);
    return 0;
  });

  Rng r_emb = Rng::derive(seed, stream::embedder);
  const Mat emb = detail::stage("embed", [&] {
    if (cfg.embedder == "gvae") {
      GvaeConfig gc = cfg.gvae;
      gc.seed = seed;
      const GvaeModel gm = train_gvae(g_att, ds.features, gc, r_emb);
      return embed(gm, g_att, ds.features);
    }
    return spectral_embedding(g_att, cfg.spectral_dim);
  });
  const DistanceMatrix dm = detail::stage("distance", [&] { return DistanceMatrix(emb); });

  DefenseOptions opt;
  opt.exclude_attacked_donors = cfg.exclude_attacked_donors;
  opt.distance_weighted = cfg.distance_weighted;
  opt.attacked = &split.attacked;

  Rng r_tie = Rng::derive(seed, stream::tiebreak);
  detail::stage("correct", [&] {
    std::vector<int> copy_avg = base_pred, copy_vote = base_pred, nc_avg = base_pred,
                     nc_vote = base_pred;
    for (int v : split.attacked) {
      const auto vi = static_cast<std::size_t>(v);
      copy_avg[vi] = correct_node(model, g_att, ds.features, dm, v, cfg.p, opt).label;
      copy_vote[vi] = majority_vote_correct(model, g_att, ds.features, dm, v, cfg.p, r_tie, opt);
      nc_avg[vi] = argmax_lowest(no_copying_average(model, g_att, ds.features, dm, v, cfg.p, opt));
      nc_vote[vi] = no_copying_predict(model, g_att, ds.features, dm, v, cfg.p,
                                       AggregationMode::vote, r_tie, opt);
    }
    res.accuracy[1] = accuracy(copy_avg, ds.labels, split.attacked);
    res.accuracy[2] = accuracy(copy_vote, ds.labels, split.attacked);
    res.accuracy[3] = accuracy(nc_avg, ds.labels, split.attacked);
    res.accuracy[4] = accuracy(nc_vote, ds.labels, split.attacked);
    return 0;
  });

  Rng r_mlp = Rng::derive(seed, stream::mlp);
  detail::stage("train_mlp", [&] {
    TrainConfig tc = cfg.gcn;
    tc.seed = seed;
    MlpModel mm = init_mlp(ds.n_features(), tc.hidden_dim, ds.labels.n_classes, r_mlp);
    mm = train_mlp(std::move(mm), ds.features, ds.labels, split.train, tc, r_mlp);
    const SoftmaxOutput probs = predict_mlp(mm, ds.features);
    std::vector<int> pred(static_cast<std::size_t>(ds.n_nodes()));
    for (int i = 0; i < ds.n_nodes(); ++i)
      pred[static_cast<std::size_t>(i)] = argmax_lowest(probs.row(i).transpose());
    res.accuracy[5] = accuracy(pred, ds.labels, split.attacked);
    return 0;
  });

  return res;
}

struct TrialFailure {
  int trial_index = 0;
  std::string message;
};

/// Runs all trials, in parallel when cfg.jobs > 1. Failed trials are
/// recorded and skipped; results come back ordered by trial index.
inline std::vector<TrialResult> run_trials(const Dataset& ds, const ExperimentConfig& cfg,
                                           std::vector<TrialFailure>* failures = nullptr,
                                           std::ostream* progress = nullptr) {
  std::vector<std::optional<TrialResult>> slots(static_cast<std::size_t>(cfg.n_trials));
  std::vector<std::string> errors(static_cast<std::size_t>(cfg.n_trials));

  auto work = [&](int begin, int step) {
    for (int i = begin; i < cfg.n_trials; i += step) {
      try {
        slots[static_cast<std::size_t>(i)] = run_trial(ds, cfg, i);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(i)] = e.what();
      }
      if (progress && step == 1) *progress << "trial " << i << " done\n" << std::flush;
    }
  };

  if (cfg.jobs <= 1 || cfg.n_trials < 2) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    const int n_threads = std::min(cfg.jobs, cfg.n_trials);
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work, t, n_threads);
    for (auto& th : pool) th.join();
  }

  std::vector<TrialResult> out;
  for (int i = 0; i < cfg.n_trials; ++i) {
    if (slots[static_cast<std::size_t>(i)]) {
      out.push_back(std::move(*slots[static_cast<std::size_t>(i)]));
    } else if (failures) {
      failures->push_back({i, errors[static_cast<std::size_t>(i)]});
    }
  }
  return out;
}

struct MethodSummary {
  std::string method;
  double mean_pct = 0;  // percent scale
  double std_pct = 0;   // population standard deviation, percent scale
  std::optional<double> p_value;  // vs before_copying; empty for the reference
  bool asterisk = false;          // p >= 0.05 or not evaluable
};

struct SummaryTable {
  std::vector<MethodSummary> methods;  // ordered like kMethodNames
  int n_trials_completed = 0;
  std::vector<TrialFailure> failures;
};

/// Aggregates completed trials: mean +- population std per method (percent),
/// two-sided Wilcoxon signed-rank against before_copying. A test that cannot
/// run (fewer than 5 nonzero differences) gets an empty p and an asterisk —
/// no significance claim can be made.
inline SummaryTable summarize(const std::vector<TrialResult>& trials,
                              std::vector<TrialFailure> failures = {}) {
  if (trials.empty()) throw Error("experiment failed: no completed trials");
  SummaryTable table;
  table.n_trials_completed = static_cast<int>(trials.size());
  table.failures = std::move(failures);

  std::array<std::vector<double>, 6> series;
  for (const auto& t : trials)
    for (std::size_t m = 0; m < 6; ++m) series[m].push_back(t.accuracy[m]);

  for (std::size_t m = 0; m < 6; ++m) {
    MethodSummary s;
    s.method = kMethodNames[m];
    const auto n = static_cast<double>(series[m].size());
    double mean = 0;
    for (double a : series[m]) mean += a;
    mean /= n;
    double var = 0;
    for (double a : series[m]) var += (a - mean) * (a - mean);
    var /= n;
    s.mean_pct = 100.0 * mean;
    s.std_pct = 100.0 * std::sqrt(var);
    if (m != 0) {
      try {
        s.p_value = wilcoxon_signed_rank(series[m], series[0]).p_value;
        s.asterisk = *s.p_value >= 0.05;
      } catch (const InsufficientData&) {
        s.p_value = std::nullopt;
        s.asterisk = true;
      }
    }
    table.methods.push_back(std::move(s));
  }
  return table;
}

inline SummaryTable run_experiment(const Dataset& ds, const ExperimentConfig& cfg,
                                   std::ostream* progress = nullptr) {
  std::vector<TrialFailure> failures;
  auto trials = run_trials(ds, cfg, &failures, progress);
  return summarize(trials, std::move(failures));
}

inline nlohmann::json to_json(const TrialResult& t) {
  nlohmann::json acc;
  for (std::size_t m = 0; m < 6; ++m) acc[kMethodNames[m]] = t.accuracy[m];
  return nlohmann::json{{"trial", t.trial_index},
                        {"seed", t.seed},
                        {"embedder", t.embedder},
                        {"attacked", t.attacked},
                        {"accuracy", std::move(acc)}};
}

inline TrialResult trial_from_json(const nlohmann::json& j) {
  TrialResult t;
  t.trial_index = j.at("trial").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.embedder = j.at("embedder").get<std::string>();
  t.attacked = j.at("attacked").get<std::vector<int>>();
  for (std::size_t m = 0; m < 6; ++m)
    t.accuracy[m] = j.at("accuracy").at(kMethodNames[m]).get<double>();
  return t;
}

inline nlohmann::json to_json(const SummaryTable& s, const ExperimentConfig& cfg) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : s.methods) {
    nlohmann::json row{{"method", m.method},
                       {"mean_pct", m.mean_pct},
                       {"std_pct", m.std_pct},
                       {"asterisk", m.asterisk}};
    row["p_value"] = m.p_value ? nlohmann::json(*m.p_value) : nlohmann::json(nullptr);
    methods.push_back(std::move(row));
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : s.failures)
    failures.push_back({{"trial", f.trial_index}, {"message", f.message}});
  return nlohmann::json{{"config", to_json(cfg)},
                        {"methods", std::move(methods)},
                        {"n_trials_completed", s.n_trials_completed},
                        {"failures", std::move(failures)}};
}

namespace detail {

inline std::string fmt_fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

inline std::string fmt_p(const std::optional<double>& p) {
  if (!p) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", *p);
  return buf;
}

}  // namespace detail

/// Markdown report: mean +- std per method, asterisk marking results whose
/// difference from before_copying is not significant at 5%.
inline std::string render_markdown(const SummaryTable& s, const ExperimentConfig& cfg) {
  std::string md;
  md += "# " + cfg.dataset + ": " + std::to_string(cfg.per_class) + " labels/class, beta=" +
        detail::fmt_fixed1(100.0 * cfg.beta.value()) + "%, p=" + std::to_string(cfg.p) +
        ", embedder=" + cfg.embedder + ", " + std::to_string(s.n_trials_completed) +
        " trials\n\n";
  md += "| method | accuracy (%) | p vs before_copying |\n";
  md += "|---|---|---|\n";
  for (const auto& m : s.methods) {
    md += "| " + m.method + " | " + detail::fmt_fixed1(m.mean_pct) + " \xc2\xb1 " +
          detail::fmt_fixed1(m.std_pct) + (m.asterisk ? "*" : "") + " | " +
          (m.method == "before_copying" ? std::string("-") : detail::fmt_p(m.p_value)) + " |\n";
  }
  if (!s.failures.empty()) {
    md += "\n" + std::to_string(s.failures.size()) + " trial(s) failed:\n";
    for (const auto& f : s.failures)
      md += "- trial " + std::to_string(f.trial_index) + ": " + f.message + "\n";
  }
  md += "\n(* difference from before_copying not significant at the 5% level; "
        "std is the population standard deviation)\n";
  return md;
}

/// Runs the experiment and persists one JSON per trial plus summary.json and
/// summary.md. Rerunning with the same config rewrites byte-identical trial
/// files.
inline SummaryTable run_experiment_to_dir(const Dataset& ds, const ExperimentConfig& cfg,
                                          const std::filesystem::path& out_dir,
                                          std::ostream* progress = nullptr) {
  std::filesystem::create_directories(out_dir);
  std::vector<TrialFailure> failures;
  auto trials = run_trials(ds, cfg, &failures, progress);

  for (const auto& t : trials) {
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%03d.json", t.trial_index);
    std::ofstream out(out_dir / name, std::ios::trunc);
    out << to_json(t).dump(2) << "\n";
    if (!out) throw InputError("failed writing trial file in " + out_dir.string());
  }

  SummaryTable table = summarize(trials, std::move(failures));
  {
    std::ofstream out(out_dir / "summary.json", std::ios::trunc);
    out << to_json(table, cfg).dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir / "summary.md", std::ios::trunc);
    out << render_markdown(table, cfg);
  }
  return table;
}

}  // namespace gcnshield
