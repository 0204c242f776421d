#include <algorithm>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entropy_triage/commands.hpp"

using namespace entropy_triage;

namespace {

// CLI11 only binds config files to the app that owns --config, so `run`
// expands its key = value file into flags placed ahead of the command line.
// Options keep the last value, which lets explicit flags win.
std::vector<std::string> expand_run_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] != "run") return args;
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t consumed = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      consumed = 1;
    } else {
      continue;
    }
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::vector<std::string> injected;
    for (const auto& item : CLI::ConfigINI().from_config(in)) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      if (!item.parents.empty() && item.parents != std::vector<std::string>{"run"}) continue;
      injected.push_back("--" + item.name);
      for (const auto& v : item.inputs) injected.push_back(v);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
    args.insert(args.begin() + 1, injected.begin(), injected.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropy-triage: semantic-entropy uncertainty for short-answer grading"};
  app.require_subcommand(1);

  // run ---------------------------------------------------------------------
  RunConfig run_cfg;
  std::string backend_name = "mock";
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Sample, cluster, evaluate and write reports");
  run->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  run->add_option("--config", config_path,
                  "key = value file using the long flag names; flags take precedence");
  run->add_option("--dataset", run_cfg.dataset_path, "Corpus TSV")->required();
  run->add_option("--metadata", run_cfg.metadata_path, "Essay-set metadata JSON")->required();
  run->add_option("--cache-dir", run_cfg.cache_dir, "Response cache directory")
      ->capture_default_str();
  run->add_option("--output-dir", run_cfg.output_dir, "Report output directory")
      ->capture_default_str();
  run->add_option("--backend", backend_name, "mock or http")
      ->check(CLI::IsMember({"mock", "http"}))
      ->capture_default_str();
  run->add_option("--base-url", run_cfg.base_url, "Chat-completions base URL (http backend)");
  run->add_option("--model", run_cfg.model_id, "Model id")->capture_default_str();
  auto* seed_opt = run->add_option("--seed", seed, "Seed for the mock backend and sampling");
  run->add_option("--mock-fixtures", run_cfg.mock_fixtures_path, "Mock backend fixture JSON");
  run->add_option("-k,--k-samples", run_cfg.sampling.k_samples, "Rationales per response")
      ->capture_default_str();
  run->add_option("--temperature", run_cfg.sampling.temperature)->capture_default_str();
  run->add_option("--top-p", run_cfg.sampling.top_p)->capture_default_str();
  run->add_option("--max-output-tokens", run_cfg.sampling.max_output_tokens)
      ->capture_default_str();
  run->add_option("--min-tokens", run_cfg.min_tokens, "Length filter lower bound")
      ->capture_default_str();
  run->add_option("--max-tokens", run_cfg.max_tokens, "Length filter upper bound")
      ->capture_default_str();
  run->add_option("--sample-n", run_cfg.sample_n, "Stratified sample size (0 = all)")
      ->capture_default_str();
  run->add_option("--auc-threshold", run_cfg.auc_threshold)->capture_default_str();
  run->add_option("--h-threshold", run_cfg.h_threshold, "Triage entropy threshold")
      ->capture_default_str();
  run->add_option("--d-threshold", run_cfg.d_threshold, "Triage disagreement threshold")
      ->capture_default_str();
  run->add_option("--workers", run_cfg.worker_count, "In-flight backend requests")
      ->capture_default_str();
  run->add_option("--retries", run_cfg.retry_attempts, "Attempts per backend request")
      ->capture_default_str();
  run->add_option("--retry-backoff-ms", run_cfg.retry_backoff_ms)->capture_default_str();

  // synth -------------------------------------------------------------------
  SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with mock fixtures");
  synth->add_option("--n", synth_cfg.n, "Number of responses")->capture_default_str();
  synth->add_option("--coupling", synth_cfg.coupling, "Diversity/disagreement coupling in [0,1]")
      ->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
  synth->add_option("--out-dir", synth_out, "Output directory")->required();

  // cache-stats -------------------------------------------------------------
  std::string stats_dir = "cache";
  auto* cache_stats = app.add_subcommand("cache-stats", "Summarize a response cache");
  cache_stats->add_option("--cache-dir", stats_dir)->capture_default_str();

  // report ------------------------------------------------------------------
  std::string report_path, report_out;
  auto* report = app.add_subcommand("report", "Re-render CSV tables from report.json");
  report->add_option("--report", report_path, "Path to report.json")->required();
  report->add_option("--out-dir", report_out, "Directory for CSV tables")->required();

  try {
    auto args = expand_run_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*run) {
    return run_command([&] {
      run_cfg.backend = backend_name == "http" ? BackendKind::Http : BackendKind::Mock;
      if (seed_opt->count() > 0) run_cfg.seed = seed;
      run_pipeline(run_cfg);
    });
  }
  if (*synth) {
    return run_command([&] { run_synth(synth_cfg, synth_out); });
  }
  if (*cache_stats) {
    return run_command([&] { run_cache_stats(stats_dir, std::cout); });
  }
  return run_command([&] { run_report(report_path, report_out); });
}
