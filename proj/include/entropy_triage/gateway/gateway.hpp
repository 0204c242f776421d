#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "entropy_triage/clustering.hpp"
#include "entropy_triage/dataset.hpp"
#include "entropy_triage/error.hpp"
#include "entropy_triage/gateway/backend.hpp"
#include "entropy_triage/gateway/cache.hpp"
#include "entropy_triage/prompting.hpp"

namespace entropy_triage {

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 0.9;
  std::size_t k_samples = 6;
  std::string model_id = "gpt-4";
  int max_output_tokens = 256;

  void validate() const {
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
    if (k_samples == 0) throw ConfigError("k_samples must be positive");
    if (model_id.empty()) throw ConfigError("model_id must not be empty");
    if (max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
  }
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

struct GenerationResult {
  int implied_score = 0;
  std::string rationale;
  std::size_t sample_index = 0;
  bool from_cache = false;
};

struct InvalidSample {
  std::size_t sample_index = 0;
  std::string reason;
  std::string raw_payload;
};

/// Outcome of sampling K rationales: every index lands in exactly one list.
struct SampleBatch {
  std::vector<GenerationResult> valid;
  std::vector<InvalidSample> invalid;
};

struct GatewayStats {
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t invalid_samples = 0;
  std::size_t judge_parse_failures = 0;
};

/// Parses a record_score argument object. Throws ParseError on malformed input.
inline std::pair<int, std::string> parse_record_score(std::string_view payload) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(payload);
  } catch (const nlohmann::json::parse_error&) {
    throw ParseError("record_score arguments are not valid JSON");
  }
  if (!j.is_object()) throw ParseError("record_score arguments must be a JSON object");
  if (!j.contains("score") || !j["score"].is_number_integer()) {
    throw ParseError("record_score.score missing or not an integer");
  }
  if (!j.contains("rationale") || !j["rationale"].is_string()) {
    throw ParseError("record_score.rationale missing or not a string");
  }
  return {j["score"].get<int>(), j["rationale"].get<std::string>()};
}

/// YES/NO, case-insensitive, surrounding whitespace ignored.
inline std::optional<bool> parse_judge_answer(std::string_view answer) {
  while (!answer.empty() && std::isspace(static_cast<unsigned char>(answer.front())))
    answer.remove_prefix(1);
  while (!answer.empty() && std::isspace(static_cast<unsigned char>(answer.back())))
    answer.remove_suffix(1);
  std::string upper(answer);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "YES") return true;
  if (upper == "NO") return false;
  return std::nullopt;
}

/// Sampling and judging front end over a backend plus cache.
class Gateway {
 public:
  Gateway(Backend& backend, Cache& cache, RetryPolicy retry = {})
      : backend_(backend), cache_(cache), retry_(retry) {}

  /// Draws K scored rationales. Invalid samples are reported, never clamped.
  SampleBatch generate_rationales(const RenderedPrompt& prompt, const EssaySetSpec& spec,
                                  const SamplingParams& params, std::int64_t response_id) {
    SampleBatch batch;
    for (std::size_t s = 0; s < params.k_samples; ++s) {
      auto outcome = generate_sample(prompt, spec, params, response_id, s);
      if (auto* ok = std::get_if<GenerationResult>(&outcome)) {
        batch.valid.push_back(std::move(*ok));
      } else {
        batch.invalid.push_back(std::get<InvalidSample>(std::move(outcome)));
      }
    }
    return batch;
  }

  std::variant<GenerationResult, InvalidSample> generate_sample(const RenderedPrompt& prompt,
                                                                const EssaySetSpec& spec,
                                                                const SamplingParams& params,
                                                                std::int64_t response_id,
                                                                std::size_t sample_index) {
    ChatRequest req;
    req.purpose = Purpose::Generate;
    req.model_id = params.model_id;
    req.prompt = prompt.text;
    req.temperature = params.temperature;
    req.top_p = params.top_p;
    req.max_output_tokens = params.max_output_tokens;
    req.sample_index = sample_index;

    const std::string key = cache_key(req);
    const std::string where =
        "response " + std::to_string(response_id) + " sample " + std::to_string(sample_index);

    bool from_cache = false;
    std::string payload;
    if (auto hit = cache_.get(key)) {
      ++cache_hits_;
      payload = std::move(*hit);
      from_cache = true;
    } else {
      ++cache_misses_;
      payload = call_with_retry(req, where);
      // One retry on a malformed function call; the final payload is cached
      // either way so a replay reproduces the same outcome.
      if (!try_parse(payload)) payload = call_with_retry(req, where);
      cache_.put(req, payload);
    }

    try {
      auto [score, rationale] = parse_record_score(payload);
      if (score < spec.score_min || score > spec.score_max) {
        throw ValidationError("score " + std::to_string(score) + " outside [" +
                              std::to_string(spec.score_min) + ", " +
                              std::to_string(spec.score_max) + "]");
      }
      auto truncated = truncate_rationale(rationale);
      if (count_whitespace_tokens(truncated) == 0) throw ValidationError("empty rationale");
      return GenerationResult{score, std::move(truncated), sample_index, from_cache};
    } catch (const Error& e) {
      ++invalid_samples_;
      log_error(where + ": " + e.what() + " | payload: " + payload);
      return InvalidSample{sample_index, e.what(), payload};
    }
  }

  /// Directed entailment query at temperature 0. An unparseable answer is
  /// retried once, then counted and treated as non-entailing.
  bool judge_entailment(std::string_view premise, std::string_view hypothesis,
                        const std::string& model_id) {
    if (premise.empty() || hypothesis.empty()) throw DomainError("judge texts must be non-empty");
    ChatRequest req;
    req.purpose = Purpose::Entail;
    req.model_id = model_id;
    req.prompt = render_entailment_prompt(premise, hypothesis).text;
    req.temperature = 0.0;
    req.top_p = 1.0;
    req.max_output_tokens = 2;
    req.sample_index = 0;

    const std::string key = cache_key(req);
    std::string answer;
    if (auto hit = cache_.get(key)) {
      ++cache_hits_;
      answer = std::move(*hit);
    } else {
      ++cache_misses_;
      answer = call_with_retry(req, "entailment judge");
      if (!parse_judge_answer(answer)) answer = call_with_retry(req, "entailment judge");
      cache_.put(req, answer);
    }
    if (auto verdict = parse_judge_answer(answer)) return *verdict;
    ++judge_parse_failures_;
    log_error("entailment judge: unparseable answer '" + answer + "'");
    return false;
  }

  EntailmentJudge judge(std::string model_id) {
    return [this, model_id = std::move(model_id)](std::string_view p, std::string_view h) {
      return judge_entailment(p, h, model_id);
    };
  }

  GatewayStats stats() const {
    return {backend_calls_.load(), cache_hits_.load(), cache_misses_.load(),
            invalid_samples_.load(), judge_parse_failures_.load()};
  }

  std::vector<std::string> error_log() const {
    std::lock_guard lock(log_mutex_);
    return errors_;
  }

 private:
  static bool try_parse(const std::string& payload) {
    try {
      parse_record_score(payload);
      return true;
    } catch (const ParseError&) {
      return false;
    }
  }

  std::string call_with_retry(const ChatRequest& req, const std::string& where) {
    auto backoff = retry_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
      ++backend_calls_;
      try {
        return backend_.complete(req);
      } catch (const TransportError& e) {
        last_error = e.what();
        if (!e.retryable()) break;
      }
      if (attempt < retry_.attempts && backoff.count() > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
    }
    throw GatewayError(where + ": backend failed after retries: " + last_error);
  }

  void log_error(std::string msg) {
    std::lock_guard lock(log_mutex_);
    errors_.push_back(std::move(msg));
  }

  Backend& backend_;
  Cache& cache_;
  RetryPolicy retry_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> cache_misses_{0};
  std::atomic<std::size_t> invalid_samples_{0};
  std::atomic<std::size_t> judge_parse_failures_{0};
  mutable std::mutex log_mutex_;
  std::vector<std::string> errors_;
};

}  // namespace entropy_triage
