#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entropy_triage/dataset.hpp"
#include "entropy_triage/detail/rng.hpp"
#include "entropy_triage/error.hpp"
#include "entropy_triage/gateway/mock_backend.hpp"
#include "entropy_triage/stats/special_functions.hpp"

namespace entropy_triage {

/// Synthetic experiment plan. Defaults mirror the ten-set ASAP-SAS layout:
/// sets 1, 2, 10 Science; 3, 4 ELA; 5, 6 Biology; 7, 8, 9 English; sets 5
/// and 6 carry no source material.
struct SynthConfig {
  std::size_t n = 500;
  double coupling = 0.8;
  std::uint64_t seed = 1;
  /// Low / Medium / High disagreement proportions.
  std::array<double, 3> band_proportions = {0.573, 0.404, 0.023};
  std::map<int, Subject> subject_plan = {
      {1, Subject::Science}, {2, Subject::Science},  {3, Subject::ELA},
      {4, Subject::ELA},     {5, Subject::Biology},  {6, Subject::Biology},
      {7, Subject::English}, {8, Subject::English},  {9, Subject::English},
      {10, Subject::Science}};
  /// set_id -> source-dependent flag; sets not listed default to true.
  std::map<int, bool> source_dep_plan = {{5, false}, {6, false}};
  /// set_id -> (score_min, score_max); sets not listed use 0-2.
  std::map<int, std::pair<int, int>> score_ranges = {
      {1, {0, 3}}, {2, {0, 3}}, {5, {0, 3}}, {6, {0, 3}}};
  /// Optional per-subject coupling overriding `coupling`.
  std::map<Subject, double> subject_coupling;
};

struct SynthOutput {
  Corpus corpus;
  std::vector<std::pair<std::string, MockFixture>> fixtures;  // in record order

  std::string corpus_tsv() const { return serialize_corpus_tsv(corpus); }
  std::string metadata_json() const { return serialize_metadata(metadata_of(corpus)); }
  std::string fixtures_json(std::uint64_t seed) const {
    return fixtures_to_json(seed, fixtures).dump(2) + "\n";
  }
};

namespace detail {

inline EssaySetSpec synthetic_set(int set_id, Subject subject, bool source_dependent,
                                  std::pair<int, int> range) {
  EssaySetSpec s;
  s.set_id = set_id;
  s.subject = subject;
  s.source_dependent = source_dependent;
  s.score_min = range.first;
  s.score_max = range.second;
  s.domain_label = subject == Subject::Science || subject == Subject::Biology
                       ? "STEM"
                       : "Language Arts";
  s.topic = "Synthetic topic " + std::to_string(set_id);
  s.grade_level = "10";
  s.task_prompt = "Explain your answer to synthetic question " + std::to_string(set_id) + ".";
  s.rubric_text = "Score " + std::to_string(range.second) +
                  ": complete and accurate. Lower scores: partial or missing key elements.";
  if (source_dependent) {
    const auto kind = subject == Subject::Science ? ContextKind::ExperimentalSetup
                                                  : ContextKind::ReadingPassage;
    s.context_blocks.push_back({kind, "Synthetic source material for set " +
                                          std::to_string(set_id) + "."});
  }
  return s;
}

/// Integer score gaps d in [0, width] whose normalized value d/width lies in `band`.
inline std::vector<int> gaps_in_band(int width, Band band) {
  std::vector<int> out;
  for (int d = 0; d <= width; ++d) {
    if (band_of(static_cast<double>(d) / width) == band) out.push_back(d);
  }
  return out;
}

// Largest-remainder allocation; ties go to the lower band.
inline std::array<std::size_t, 3> band_counts(std::size_t n, const std::array<double, 3>& p) {
  std::array<std::size_t, 3> c{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (int b = 0; b < 3; ++b) {
    const double exact = static_cast<double>(n) * p[b];
    c[b] = static_cast<std::size_t>(std::floor(exact));
    rem[b] = exact - static_cast<double>(c[b]);
    assigned += c[b];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++c[order[i % 3]];
  return c;
}

inline constexpr std::array<std::string_view, 20> kWords = {
    "the",   "plant", "grew", "because", "water", "light", "reaction", "author",
    "shows", "that",  "cell", "protein", "story", "reader", "acid",     "sample",
    "trial", "more",  "less", "result"};

}  // namespace detail

/// Generates a corpus with planted disagreement and mock diversity.
///
/// Each record's delta is drawn within its assigned band (band counts per set
/// are exact proportional allocations). Diversity is Phi(c z + sqrt(1-c^2) e)
/// with z the standardized delta and e standard normal, so c = 1 makes
/// diversity a monotone function of delta and c = 0 makes it independent.
inline SynthOutput synth_corpus(const SynthConfig& cfg) {
  if (cfg.n == 0) throw ConfigError("synthetic corpus size must be positive");
  if (!(cfg.coupling >= 0.0 && cfg.coupling <= 1.0)) {
    throw ConfigError("coupling must lie in [0, 1]");
  }
  double psum = 0.0;
  for (double p : cfg.band_proportions) {
    if (!(p >= 0.0)) throw ConfigError("band proportions must be non-negative");
    psum += p;
  }
  if (std::fabs(psum - 1.0) > 1e-9) throw ConfigError("band proportions must sum to 1");
  if (cfg.subject_plan.empty()) throw ConfigError("subject plan is empty");
  for (const auto& [set_id, flag] : cfg.source_dep_plan) {
    if (!cfg.subject_plan.contains(set_id)) {
      throw ConfigError("source dependency plan names unknown set " + std::to_string(set_id));
    }
  }
  for (const auto& [subject, c] : cfg.subject_coupling) {
    if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("subject coupling must lie in [0, 1]");
  }

  SynthOutput out;
  for (const auto& [set_id, subject] : cfg.subject_plan) {
    const auto sd_it = cfg.source_dep_plan.find(set_id);
    const bool sd = sd_it == cfg.source_dep_plan.end() ? true : sd_it->second;
    const auto r_it = cfg.score_ranges.find(set_id);
    const auto range = r_it == cfg.score_ranges.end() ? std::pair{0, 2} : r_it->second;
    auto spec = detail::synthetic_set(set_id, subject, sd, range);
    validate(spec);
    out.corpus.sets.emplace(set_id, std::move(spec));
  }

  detail::Rng rng(detail::mix(cfg.seed, 0x5e7c0a9ULL));
  const std::size_t n_sets = out.corpus.sets.size();
  std::int64_t next_id = 1;
  std::size_t set_pos = 0;
  for (const auto& [set_id, spec] : out.corpus.sets) {
    const std::size_t quota = cfg.n / n_sets + (set_pos < cfg.n % n_sets ? 1 : 0);
    ++set_pos;
    const auto counts = detail::band_counts(quota, cfg.band_proportions);
    const int width = spec.score_max - spec.score_min;
    std::vector<Band> plan;
    for (int b = 0; b < 3; ++b) {
      if (counts[b] > 0 && detail::gaps_in_band(width, kAllBands[b]).empty()) {
        throw ConfigError("set " + std::to_string(set_id) + " score range cannot realize band " +
                          to_string(kAllBands[b]));
      }
      plan.insert(plan.end(), counts[b], kAllBands[b]);
    }
    rng.shuffle(plan);
    for (Band band : plan) {
      const auto gaps = detail::gaps_in_band(width, band);
      const int gap = gaps[rng.below(gaps.size())];
      int lo = spec.score_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(width - gap + 1)));
      int s1 = lo, s2 = lo + gap;
      if (rng.below(2) == 1) std::swap(s1, s2);

      std::string text = "r" + std::to_string(next_id);
      const auto words = 8 + rng.below(33);
      for (std::uint64_t w = 0; w < words; ++w) {
        text += ' ';
        text += detail::kWords[rng.below(detail::kWords.size())];
      }
      out.corpus.records.push_back(make_record(next_id, spec, std::move(text), s1, s2));
      ++next_id;
    }
  }

  double mean = 0.0;
  for (const auto& r : out.corpus.records) mean += r.delta;
  mean /= static_cast<double>(out.corpus.records.size());
  double var = 0.0;
  for (const auto& r : out.corpus.records) var += (r.delta - mean) * (r.delta - mean);
  const double sd = std::sqrt(var / static_cast<double>(out.corpus.records.size()));

  for (const auto& r : out.corpus.records) {
    const auto& spec = out.corpus.sets.at(r.set_id);
    const auto sc = cfg.subject_coupling.find(spec.subject);
    const double c = sc == cfg.subject_coupling.end() ? cfg.coupling : sc->second;
    const double z = sd > 0.0 ? (r.delta - mean) / sd : 0.0;
    const double latent = c * z + std::sqrt(std::max(0.0, 1.0 - c * c)) * rng.normal();
    MockFixture fx;
    fx.response_id = r.response_id;
    fx.diversity = stats::normal_cdf(latent);
    // Half-up rounding of the two raters' mean.
    fx.score_hint = (r.raw_score_1 + r.raw_score_2 + 1) / 2;
    out.fixtures.emplace_back(r.text, fx);
  }
  return out;
}

}  // namespace entropy_triage
