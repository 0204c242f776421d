#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "entropy_triage/dataset.hpp"
#include "entropy_triage/evaluation.hpp"
#include "entropy_triage/gateway/cache.hpp"
#include "entropy_triage/gateway/gateway.hpp"
#include "entropy_triage/gateway/http_backend.hpp"
#include "entropy_triage/gateway/mock_backend.hpp"
#include "entropy_triage/pipeline.hpp"
#include "entropy_triage/report.hpp"
#include "entropy_triage/synth.hpp"

namespace entropy_triage {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitData = 2,
  kExitBackend = 3,
  kExitInternal = 4,
};

inline int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    const auto& k = err->kind();
    if (k == "config") return kExitConfig;
    if (k == "gateway" || k == "transport") return kExitBackend;
    if (k == "parse" || k == "range" || k == "capacity" || k == "template" ||
        k == "validation" || k == "structural" || k == "degenerate") {
      return kExitData;
    }
  }
  return kExitInternal;
}

enum class BackendKind { Mock, Http };

struct RunConfig {
  fs::path dataset_path;
  fs::path metadata_path;
  fs::path cache_dir = "cache";
  fs::path output_dir = "out";
  BackendKind backend = BackendKind::Mock;
  std::string base_url;
  std::string model_id = "gpt-4";
  std::optional<std::uint64_t> seed;
  fs::path mock_fixtures_path;
  SamplingParams sampling;
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 250;
  std::size_t sample_n = 0;  // 0 keeps the whole corpus
  double auc_threshold = 0.4;
  double h_threshold = 0.5;
  double d_threshold = 0.4;
  std::size_t worker_count = 4;
  int retry_attempts = 3;
  long retry_backoff_ms = 1000;

  void validate() const {
    auto require_file = [](const fs::path& p, const char* what) {
      if (p.empty()) throw ConfigError(std::string(what) + " path is required");
      if (!fs::is_regular_file(p)) {
        throw ConfigError(std::string(what) + " not found: " + p.string());
      }
    };
    require_file(dataset_path, "dataset");
    require_file(metadata_path, "metadata");
    if (!mock_fixtures_path.empty()) require_file(mock_fixtures_path, "mock fixtures");
    if (backend == BackendKind::Mock && !seed) throw ConfigError("mock backend requires --seed");
    if (backend == BackendKind::Http) {
      if (base_url.empty()) throw ConfigError("http backend requires --base-url");
      if (model_id.empty()) throw ConfigError("http backend requires --model");
    }
    if (min_tokens > max_tokens) throw ConfigError("min-tokens exceeds max-tokens");
    if (worker_count == 0) throw ConfigError("workers must be positive");
    if (retry_attempts < 1) throw ConfigError("retry attempts must be at least 1");
    if (!(h_threshold >= 0.0) || !(d_threshold >= 0.0)) {
      throw ConfigError("triage thresholds must be non-negative");
    }
    SamplingParams p = sampling;
    p.model_id = model_id;
    p.validate();
  }

  nlohmann::ordered_json to_json() const {
    return {{"dataset_path", dataset_path.string()},
            {"metadata_path", metadata_path.string()},
            {"cache_dir", cache_dir.string()},
            {"output_dir", output_dir.string()},
            {"backend", backend == BackendKind::Mock ? "mock" : "http"},
            {"base_url", base_url},
            {"model_id", model_id},
            {"seed", seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr)},
            {"mock_fixtures_path", mock_fixtures_path.string()},
            {"k_samples", sampling.k_samples},
            {"temperature", sampling.temperature},
            {"top_p", sampling.top_p},
            {"max_output_tokens", sampling.max_output_tokens},
            {"min_tokens", min_tokens},
            {"max_tokens", max_tokens},
            {"sample_n", sample_n},
            {"auc_threshold", auc_threshold},
            {"h_threshold", h_threshold},
            {"d_threshold", d_threshold},
            {"worker_count", worker_count},
            {"retry_attempts", retry_attempts},
            {"retry_backoff_ms", retry_backoff_ms}};
  }
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << content;
  if (!out) throw ConfigError("failed writing " + p.string());
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

struct RunSummary {
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t responses_scored = 0;
};

/// Full pipeline: ingest, sample, generate, cluster, evaluate, report.
/// Throws on failure; see run_command for the exit-code mapping.
inline RunSummary run_pipeline(const RunConfig& cfg, std::ostream& log = std::cerr) {
  const auto started = std::chrono::steady_clock::now();
  const auto started_at = utc_timestamp();
  cfg.validate();
  ensure_directory(cfg.output_dir);

  const auto meta = parse_metadata(read_file(cfg.metadata_path));
  auto corpus = parse_corpus(read_file(cfg.dataset_path), meta);
  log << "loaded " << corpus.records.size() << " responses across " << corpus.sets.size()
      << " essay sets\n";
  if (cfg.sample_n > 0) {
    corpus = stratified_sample(corpus, {cfg.sample_n, cfg.seed.value_or(0), cfg.min_tokens,
                                        cfg.max_tokens});
    log << "stratified sample: " << corpus.records.size() << " responses\n";
  }

  std::unique_ptr<Backend> backend;
  if (cfg.backend == BackendKind::Mock) {
    MockFixtures fixtures;
    if (!cfg.mock_fixtures_path.empty()) {
      fixtures = parse_mock_fixtures(read_file(cfg.mock_fixtures_path));
    }
    backend = std::make_unique<MockBackend>(*cfg.seed, std::move(fixtures));
  } else {
    const char* key = std::getenv(kApiKeyEnv);
    backend = std::make_unique<HttpBackend>(cfg.base_url, key ? key : "");
  }

  Cache cache(cfg.cache_dir / "cache.jsonl");
  for (const auto& w : cache.warnings()) log << "warning: " << w << "\n";
  Gateway gateway(*backend, cache,
                  RetryPolicy{cfg.retry_attempts, std::chrono::milliseconds(cfg.retry_backoff_ms)});

  SamplingParams params = cfg.sampling;
  params.model_id = cfg.model_id;
  const auto analysis = analyze_corpus(corpus, gateway, params, cfg.worker_count);
  log << "scored " << analysis.scored.size() << " responses ("
      << analysis.records_without_samples << " without valid samples)\n";

  std::string clusterings;
  for (const auto& a : analysis.responses) {
    if (!a.clustering) continue;
    clusterings += clustering_to_json(a.record.response_id, *a.clustering).dump() + "\n";
  }
  write_file(cfg.output_dir / "clusterings.jsonl", clusterings);

  const auto report = evaluate(analysis.scored, corpus.sets,
                               {cfg.auc_threshold, cfg.h_threshold, cfg.d_threshold});
  const auto report_json = to_json(report);
  write_file(cfg.output_dir / "report.json", report_json.dump(2) + "\n");
  for (const auto& [name, content] : render_csv_tables(report_json)) {
    write_file(cfg.output_dir / name, content);
  }

  const auto errors = gateway.error_log();
  if (!errors.empty()) {
    std::string text;
    for (const auto& e : errors) text += e + "\n";
    write_file(cfg.output_dir / "errors.log", text);
  }

  const auto st = gateway.stats();
  const auto config_json = cfg.to_json();
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  nlohmann::ordered_json manifest = {
      {"schema_version", kReportSchemaVersion},
      {"config", config_json},
      {"config_hash", sha256_hex(config_json.dump())},
      {"backend", backend->name()},
      {"responses_in_corpus", corpus.records.size()},
      {"responses_scored", analysis.scored.size()},
      {"responses_without_valid_samples", analysis.records_without_samples},
      {"responses_flagged_invalid_samples", analysis.flagged_records},
      {"backend_calls", st.backend_calls},
      {"cache_hits", st.cache_hits},
      {"cache_misses", st.cache_misses},
      {"invalid_samples", st.invalid_samples},
      {"judge_parse_failures", st.judge_parse_failures},
      {"judge_failed_pairs", analysis.failed_judge_pairs},
      {"cache_warnings", cache.warnings().size()},
      {"started_at", started_at},
      {"finished_at", utc_timestamp()},
      {"wall_time_seconds", wall}};
  write_file(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
  log << "backend calls " << st.backend_calls << ", cache hits " << st.cache_hits
      << ", cache misses " << st.cache_misses << "\n";
  return {st.backend_calls, st.cache_hits, st.cache_misses, analysis.scored.size()};
}

/// Writes corpus.tsv, metadata.json and mock_fixtures.json into `out_dir`.
inline void run_synth(const SynthConfig& cfg, const fs::path& out_dir) {
  const auto out = synth_corpus(cfg);
  ensure_directory(out_dir);
  write_file(out_dir / "corpus.tsv", out.corpus_tsv());
  write_file(out_dir / "metadata.json", out.metadata_json());
  write_file(out_dir / "mock_fixtures.json", out.fixtures_json(cfg.seed));
}

inline void run_cache_stats(const fs::path& cache_dir, std::ostream& os) {
  const auto file = cache_dir / "cache.jsonl";
  if (!fs::is_regular_file(file)) throw ConfigError("no cache file at " + file.string());
  Cache cache(file);
  os << "entries " << cache.size() << "\n";
  std::map<std::string, std::size_t> sorted;
  for (const auto& [p, c] : cache.counts_by_purpose()) sorted[p] = c;
  for (const auto& [p, c] : sorted) os << p << " " << c << "\n";
  os << "corrupt_lines " << cache.warnings().size() << "\n";
}

/// Re-renders the CSV tables from an existing report.json.
inline void run_report(const fs::path& report_path, const fs::path& out_dir) {
  nlohmann::ordered_json report;
  try {
    report = nlohmann::ordered_json::parse(read_file(report_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what());
  }
  if (report.value("schema_version", 0) != kReportSchemaVersion) {
    throw ParseError("unsupported report schema_version");
  }
  ensure_directory(out_dir);
  for (const auto& [name, content] : render_csv_tables(report)) write_file(out_dir / name, content);
}

/// Runs `fn`, mapping exceptions to exit codes with a one-line message.
template <typename Fn>
int run_command(Fn&& fn, std::ostream& err = std::cerr) {
  try {
    fn();
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace entropy_triage
