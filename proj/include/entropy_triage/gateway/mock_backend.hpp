#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "entropy_triage/detail/hash.hpp"
#include "entropy_triage/error.hpp"
#include "entropy_triage/gateway/backend.hpp"
#include "entropy_triage/prompting.hpp"

namespace entropy_triage {

/// Per-response knobs for the mock backend, keyed by response text.
struct MockFixture {
  std::int64_t response_id = 0;
  double diversity = 0.0;
  std::optional<int> score_hint;
};

using MockFixtures = std::map<std::string, MockFixture>;

/// Deterministic stand-in for the chat service.
///
/// Generation: each response gets a primary concept tag derived from
/// hash(seed, response text). Sample s keeps the primary tag unless a seeded
/// coin with bias `diversity` fires, in which case it gets a tag unique to s.
/// diversity 0 therefore yields one semantic cluster and diversity 1 yields
/// K singletons. The implied score is the hint (or range midpoint), nudged by
/// one point with probability diversity/2 and kept inside the rubric range.
/// Rationales read "<tag>: <filler words>".
///
/// Entailment: YES iff premise and hypothesis carry the same tag.
///
/// Every reply is a pure function of (seed, request), so results do not
/// depend on call order or concurrency.
class MockBackend : public Backend {
 public:
  explicit MockBackend(std::uint64_t seed, MockFixtures fixtures = {})
      : seed_(seed), fixtures_(std::move(fixtures)) {}

  std::string complete(const ChatRequest& req) override {
    ++calls_;
    return req.purpose == Purpose::Generate ? generate(req) : entail(req);
  }

  std::string name() const override { return "mock"; }
  std::size_t calls() const { return calls_.load(); }
  std::uint64_t seed() const { return seed_; }

  /// Concept tag carried by a mock rationale (text before the first ':').
  static std::string tag_of(std::string_view rationale) {
    return std::string(rationale.substr(0, rationale.find(':')));
  }

 private:
  static constexpr std::array<std::string_view, 12> kConcepts = {
      "evidence", "units", "procedure", "comparison", "inference", "detail",
      "accuracy", "structure", "replication", "vocabulary", "relevance", "reasoning"};
  static constexpr std::array<std::string_view, 16> kFiller = {
      "response", "mentions", "the", "key", "idea", "but", "lacks", "support",
      "rubric",   "level",    "fits", "partially", "clear", "missing", "point", "explains"};

  static std::string tag_word(std::uint64_t base, std::uint64_t slot) {
    const auto h = detail::mix(base, 0x7a6700ULL + slot);
    static constexpr char hex[] = "0123456789abcdef";
    std::string tag(kConcepts[h % kConcepts.size()]);
    tag += '-';
    for (int i = 0; i < 4; ++i) tag += hex[(h >> (8 + 4 * i)) & 0xF];
    return tag;
  }

  std::string generate(const ChatRequest& req) const {
    const auto text = extract_student_response(req.prompt).value_or(req.prompt);
    const auto range = extract_score_range(req.prompt).value_or(std::pair{0, 3});
    const std::uint64_t base = detail::mix(seed_, detail::fnv1a64(text));

    const MockFixture* fx = nullptr;
    if (auto it = fixtures_.find(text); it != fixtures_.end()) fx = &it->second;
    const double diversity =
        std::clamp(fx ? fx->diversity : detail::to_unit(detail::mix(base, 0xd17e)), 0.0, 1.0);
    const int center = fx && fx->score_hint ? *fx->score_hint : (range.first + range.second) / 2;

    const std::uint64_t s = req.sample_index;
    const double coin = detail::to_unit(detail::mix(base, 2 * s + 1));
    const std::string tag = coin < diversity ? tag_word(base, s + 1) : tag_word(base, 0);

    const double nudge = detail::to_unit(detail::mix(base, 2 * s + 2));
    int score = center;
    if (nudge < 0.25 * diversity) {
      score -= 1;
    } else if (nudge < 0.5 * diversity) {
      score += 1;
    }
    score = std::clamp(score, range.first, range.second);

    std::string rationale = tag + ":";
    const auto words = 5 + detail::mix(base, 0xf111 + s) % 10;
    for (std::uint64_t w = 0; w < words; ++w) {
      rationale += ' ';
      rationale += kFiller[detail::mix(base, (s << 8) + w) % kFiller.size()];
    }
    return nlohmann::json{{"score", score}, {"rationale", rationale}}.dump();
  }

  std::string entail(const ChatRequest& req) const {
    auto pair = parse_entailment_prompt(req.prompt);
    if (!pair) return "NO";
    return tag_of(pair->first) == tag_of(pair->second) ? "YES" : "NO";
  }

  std::uint64_t seed_;
  MockFixtures fixtures_;
  std::atomic<std::size_t> calls_{0};
};

inline nlohmann::json fixtures_to_json(std::uint64_t seed,
                                       const std::vector<std::pair<std::string, MockFixture>>& rows) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& [text, fx] : rows) {
    nlohmann::json r = {{"response_id", fx.response_id}, {"text", text}, {"diversity", fx.diversity}};
    if (fx.score_hint) r["score_hint"] = *fx.score_hint;
    records.push_back(std::move(r));
  }
  return {{"seed", seed}, {"records", records}};
}

inline MockFixtures parse_mock_fixtures(std::string_view json_text) {
  MockFixtures out;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    for (const auto& r : doc.at("records")) {
      MockFixture fx;
      fx.response_id = r.value("response_id", std::int64_t{0});
      fx.diversity = r.at("diversity").get<double>();
      if (r.contains("score_hint")) fx.score_hint = r.at("score_hint").get<int>();
      out.emplace(r.at("text").get<std::string>(), fx);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("mock fixtures: ") + e.what());
  }
  return out;
}

}  // namespace entropy_triage
