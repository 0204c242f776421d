#pragma once

#include <optional>
#include <string>
#include <vector>

#include "entropy_triage/clustering.hpp"
#include "entropy_triage/dataset.hpp"
#include "entropy_triage/evaluation.hpp"
#include "entropy_triage/gateway/gateway.hpp"
#include "entropy_triage/gateway/parallel.hpp"
#include "entropy_triage/prompting.hpp"

namespace entropy_triage {

struct ResponseAnalysis {
  ResponseRecord record;
  SampleBatch samples;
  std::optional<Clustering> clustering;  // empty when no sample was valid
  std::size_t judge_calls = 0;
  std::size_t failed_pairs = 0;
};

struct CorpusAnalysis {
  std::vector<ResponseAnalysis> responses;  // corpus order
  std::vector<ScoredResponse> scored;       // responses with at least one valid sample
  std::size_t flagged_records = 0;          // responses with K_effective < K
  std::size_t records_without_samples = 0;
  std::size_t failed_judge_pairs = 0;
};

/// Sample -> judge -> cluster for every record. Backend work fans out over
/// `workers` threads; results are stored by position so output order never
/// depends on completion order.
inline CorpusAnalysis analyze_corpus(const Corpus& corpus, Gateway& gateway,
                                     const SamplingParams& params, std::size_t workers = 4) {
  params.validate();
  const std::size_t n = corpus.records.size();
  const std::size_t k = params.k_samples;

  std::vector<RenderedPrompt> prompts;
  prompts.reserve(n);
  for (const auto& r : corpus.records) {
    prompts.push_back(render_grading_prompt(corpus.spec_of(r), r.text));
  }

  std::vector<std::optional<std::variant<GenerationResult, InvalidSample>>> outcomes(n * k);
  parallel_for(n * k, workers, [&](std::size_t task) {
    const auto& r = corpus.records[task / k];
    outcomes[task] =
        gateway.generate_sample(prompts[task / k], corpus.spec_of(r), params, r.response_id, task % k);
  });

  CorpusAnalysis out;
  out.responses.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& a = out.responses[i];
    a.record = corpus.records[i];
    for (std::size_t s = 0; s < k; ++s) {
      auto& o = *outcomes[i * k + s];
      if (auto* ok = std::get_if<GenerationResult>(&o)) {
        a.samples.valid.push_back(std::move(*ok));
      } else {
        a.samples.invalid.push_back(std::get<InvalidSample>(std::move(o)));
      }
    }
  }

  const auto judge = gateway.judge(params.model_id);
  parallel_for(n, workers, [&](std::size_t i) {
    auto& a = out.responses[i];
    if (a.samples.valid.empty()) return;
    std::vector<std::string> rationales;
    for (const auto& g : a.samples.valid) rationales.push_back(g.rationale);
    const auto matrix = build_matrix(rationales, judge);
    a.judge_calls = matrix.judge_calls;
    a.failed_pairs = matrix.failed_pairs.size();
    a.clustering = cluster(matrix);
  });

  for (const auto& a : out.responses) {
    if (!a.samples.invalid.empty()) ++out.flagged_records;
    out.failed_judge_pairs += a.failed_pairs;
    if (!a.clustering) {
      ++out.records_without_samples;
      continue;
    }
    std::vector<int> scores;
    for (const auto& g : a.samples.valid) scores.push_back(g.implied_score);
    out.scored.push_back(
        make_scored_response(a.record, corpus.spec_of(a.record), *a.clustering, std::move(scores)));
  }
  return out;
}

}  // namespace entropy_triage
