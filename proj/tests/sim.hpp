#pragma once

// Synthetic corpus -> mock backend -> scored responses, all in memory.

#include <chrono>

#include "entropy_triage/gateway/mock_backend.hpp"
#include "entropy_triage/pipeline.hpp"
#include "entropy_triage/synth.hpp"

namespace sim {

struct Run {
  entropy_triage::SynthOutput synth;
  entropy_triage::CorpusAnalysis analysis;
};

inline Run run_synthetic(const entropy_triage::SynthConfig& cfg, std::size_t workers = 4) {
  using namespace entropy_triage;
  Run out{synth_corpus(cfg), {}};
  MockFixtures fx(out.synth.fixtures.begin(), out.synth.fixtures.end());
  MockBackend mock(cfg.seed, std::move(fx));
  Cache cache;
  Gateway gateway(mock, cache, RetryPolicy{1, std::chrono::milliseconds(0)});
  out.analysis = analyze_corpus(out.synth.corpus, gateway, SamplingParams{}, workers);
  return out;
}

}  // namespace sim
