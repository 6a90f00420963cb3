// Command-line front end: dataset preparation, experiment runs, and report
// rendering over stored results. Exit codes: 0 success, 1 partial trial
// failure, 2 usage or input error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gcnshield/gcnshield.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path data_root() {
  if (const char* env = std::getenv("GCNSHIELD_DATA")) return fs::path(env);
  return fs::path("data");
}

/// A dataset id resolves under the data root; an explicit path is used as is.
fs::path resolve_bundle(const std::string& dataset) {
  fs::path direct(dataset);
  if (fs::exists(direct / "meta.json")) return direct;
  return data_root() / dataset;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int cmd_prepare_data(const std::string& content, const std::string& cites,
                     const std::string& out_dir) {
  const auto ds = gcnshield::load_dataset(content, cites);
  gcnshield::write_bundle(ds, out_dir);
  std::cerr << "wrote bundle to " << out_dir << "\n";
  std::cout << "N=" << ds.n_nodes() << " F=" << ds.n_features()
            << " C=" << ds.labels.n_classes << " edges=" << ds.graph.n_edges()
            << " dangling_edges_dropped=" << ds.stats.dangling_edges_dropped
            << " duplicate_edges_dropped=" << ds.stats.graph.duplicates_dropped
            << " self_loops_dropped=" << ds.stats.graph.self_loops_dropped << "\n";
  return 0;
}

void write_manifest(const fs::path& out_dir, const gcnshield::ExperimentConfig& cfg,
                    const fs::path& bundle) {
  json manifest;
  manifest["config"] = gcnshield::to_json(cfg);
  manifest["version"] = gcnshield::kVersion;
  manifest["timestamp"] = timestamp_utc();
  manifest["output_dir"] = out_dir.string();
  json checksums;
  for (const char* f : {"edges.tsv", "features.tsv", "labels.tsv", "meta.json"})
    checksums[f] = gcnshield::fnv1a64_file(bundle / f);
  manifest["dataset"] = {{"bundle", bundle.string()}, {"fnv1a64", std::move(checksums)}};
  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << "\n";
  if (!out) throw gcnshield::InputError("failed writing manifest in " + out_dir.string());
}

int cmd_run(const gcnshield::ExperimentConfig& cfg, const std::string& out) {
  const fs::path bundle = resolve_bundle(cfg.dataset);
  if (!fs::exists(bundle / "meta.json"))
    throw gcnshield::InputError("no dataset bundle at " + bundle.string() +
                                " (set GCNSHIELD_DATA or run prepare-data)");
  const auto ds = gcnshield::read_bundle(bundle);

  const fs::path out_dir = out.empty() ? fs::path("results") / cfg.dataset : fs::path(out);
  fs::create_directories(out_dir);
  write_manifest(out_dir, cfg, bundle);

  std::cerr << "running " << cfg.n_trials << " trial(s) on " << cfg.dataset << " into "
            << out_dir << "\n";
  const auto table = gcnshield::run_experiment_to_dir(ds, cfg, out_dir, &std::cerr);
  std::cerr << gcnshield::render_markdown(table, cfg);

  if (!table.failures.empty()) {
    std::cerr << table.failures.size() << " of " << cfg.n_trials << " trial(s) failed\n";
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& results_dir) {
  const fs::path dir(results_dir);
  std::ifstream sum(dir / "summary.json");
  if (!sum) throw gcnshield::InputError("no summary.json in " + results_dir);
  json stored;
  try {
    stored = json::parse(sum);
  } catch (const json::exception& e) {
    throw gcnshield::InputError("corrupt summary.json: " + std::string(e.what()));
  }
  const auto cfg = gcnshield::config_from_json(stored.at("config"));

  // Recompute the table from the per-trial files; the stored summary is
  // cross-checked rather than trusted.
  std::vector<gcnshield::TrialResult> trials;
  for (int i = 0; i < cfg.n_trials; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%03d.json", i);
    std::ifstream in(dir / name);
    if (!in) continue;
    try {
      trials.push_back(gcnshield::trial_from_json(json::parse(in)));
    } catch (const json::exception& e) {
      throw gcnshield::InputError(std::string(name) + ": " + e.what());
    }
  }
  if (trials.empty()) throw gcnshield::InputError("no trial files in " + results_dir);

  const auto table = gcnshield::summarize(trials);
  const std::string md = gcnshield::render_markdown(table, cfg);
  std::cout << md;

  std::ofstream csv(dir / "report.csv", std::ios::trunc);
  csv << "method,mean_pct,std_pct,p_value,asterisk\n";
  for (const auto& m : table.methods)
    csv << m.method << "," << m.mean_pct << "," << m.std_pct << ","
        << (m.p_value ? std::to_string(*m.p_value) : "") << "," << (m.asterisk ? 1 : 0)
        << "\n";

  for (const auto& row : stored.at("methods")) {
    const std::string name = row.at("method").get<std::string>();
    for (const auto& m : table.methods)
      if (m.method == name && std::abs(m.mean_pct - row.at("mean_pct").get<double>()) > 1e-9)
        std::cerr << "warning: stored summary disagrees with trial files for " << name << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Node-copying defense for poisoned graph convolutional classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gcnshield::kVersion);

  auto* prep = app.add_subcommand("prepare-data", "Build a canonical bundle from raw files");
  std::string content, cites, prep_out;
  prep->add_option("--content", content, ".content file (id, features..., label)")->required();
  prep->add_option("--cites", cites, ".cites file (edge per line)")->required();
  prep->add_option("--out", prep_out, "output bundle directory")->required();

  auto* run = app.add_subcommand("run", "Run the trial protocol and write results");
  std::string config_path, run_out;
  gcnshield::ExperimentConfig cfg;
  double beta_flag = -1;
  std::optional<int> gcn_epochs, gvae_epochs, n_attacked;
  run->add_option("--config", config_path, "JSON config file (flags override it)");
  run->add_option("--dataset", cfg.dataset, "dataset id or bundle path");
  run->add_option("--per-class", cfg.per_class, "training nodes per class")
      ->check(CLI::IsMember({10, 20}));
  run->add_option("--beta", beta_flag, "attack budget fraction")
      ->check(CLI::IsMember({0.5, 0.75}));
  run->add_option("--p", cfg.p, "donors per attacked node");
  run->add_option("--trials", cfg.n_trials, "number of trials");
  run->add_option("--attacked", n_attacked, "number of attacked nodes");
  run->add_option("--embedder", cfg.embedder, "gvae or spectral")
      ->check(CLI::IsMember({"gvae", "spectral"}));
  run->add_option("--seed", cfg.base_seed, "base seed");
  run->add_option("--jobs", cfg.jobs, "parallel trial workers");
  run->add_option("--gcn-epochs", gcn_epochs, "override GCN training epochs");
  run->add_option("--gvae-epochs", gvae_epochs, "override GVAE training epochs");
  run->add_option("--out", run_out, "results directory");

  auto* rep = app.add_subcommand("report", "Render tables from a results directory");
  std::string results_dir;
  rep->add_option("dir", results_dir, "results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (prep->parsed()) return cmd_prepare_data(content, cites, prep_out);
    if (run->parsed()) {
      gcnshield::ExperimentConfig base;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw gcnshield::InputError("cannot open config " + config_path);
        try {
          base = gcnshield::config_from_json(json::parse(in));
        } catch (const json::exception& e) {
          throw gcnshield::ConfigError(config_path + ": " + e.what());
        }
      }
      // Only flags the user actually passed override the file values.
      if (run->count("--dataset")) base.dataset = cfg.dataset;
      if (run->count("--per-class")) base.per_class = cfg.per_class;
      if (run->count("--beta")) base.beta = gcnshield::Ratio::from_double(beta_flag);
      if (run->count("--p")) base.p = cfg.p;
      if (run->count("--trials")) base.n_trials = cfg.n_trials;
      if (n_attacked) base.n_attacked = *n_attacked;
      if (run->count("--embedder")) base.embedder = cfg.embedder;
      if (run->count("--seed")) base.base_seed = cfg.base_seed;
      if (run->count("--jobs")) base.jobs = cfg.jobs;
      if (gcn_epochs) base.gcn.epochs = *gcn_epochs;
      if (gvae_epochs) base.gvae.epochs = *gvae_epochs;
      base.validate();
      return cmd_run(base, run_out);
    }
    if (rep->parsed()) return cmd_report(results_dir);
  } catch (const gcnshield::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gcnshield::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gcnshield::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
