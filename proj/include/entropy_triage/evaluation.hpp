#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entropy_triage/clustering.hpp"
#include "entropy_triage/dataset.hpp"
#include "entropy_triage/error.hpp"
#include "entropy_triage/stats.hpp"

namespace entropy_triage {

/// One response with its semantic entropy joined to the human scores.
struct ScoredResponse {
  std::int64_t response_id = 0;
  double entropy = 0.0;
  double delta = 0.0;
  Band band = Band::Low;
  Subject subject = Subject::Science;
  bool source_dependent = false;
  int set_id = 0;
  std::size_t k_effective = 0;
  double mean_norm_llm_score = 0.0;
  std::size_t token_count = 0;

  double mean_human_norm_score = 0.0;
  int raw_score_1 = 0;
  int raw_score_2 = 0;
  std::vector<int> llm_scores;  // valid implied scores, raw scale
};

inline ScoredResponse make_scored_response(const ResponseRecord& record, const EssaySetSpec& spec,
                                           const Clustering& clustering,
                                           std::vector<int> llm_scores) {
  if (llm_scores.size() != clustering.k_effective()) {
    throw StructuralError("response " + std::to_string(record.response_id) +
                          ": sample count does not match clustering size");
  }
  ScoredResponse s;
  s.response_id = record.response_id;
  s.entropy = clustering.entropy;
  s.delta = record.delta;
  s.band = record.band;
  s.subject = spec.subject;
  s.source_dependent = spec.source_dependent;
  s.set_id = spec.set_id;
  s.k_effective = clustering.k_effective();
  s.token_count = record.token_count;
  s.mean_human_norm_score = record.mean_norm_score();
  s.raw_score_1 = record.raw_score_1;
  s.raw_score_2 = record.raw_score_2;
  double acc = 0.0;
  for (int v : llm_scores) acc += normalize_score(v, spec);
  s.mean_norm_llm_score = acc / static_cast<double>(llm_scores.size());
  s.llm_scores = std::move(llm_scores);
  return s;
}

/// A statistic that may be unavailable on a given corpus (degenerate input,
/// too few groups); `note` then says why.
template <typename T>
struct Reported {
  std::optional<T> value;
  std::string note;

  static Reported unavailable(std::string why) { return {std::nullopt, std::move(why)}; }
};

template <typename Fn>
auto try_report(const std::string& label, Fn&& fn) -> Reported<decltype(fn())> {
  try {
    return {fn(), ""};
  } catch (const Error& e) {
    return Reported<decltype(fn())>::unavailable(label + " unavailable: " + e.what());
  }
}

// --- RQ1 ------------------------------------------------------------------------

struct GroupSummary {
  std::optional<double> mean_entropy;
  std::size_t n = 0;
};

struct SetAccuracy {
  int set_id = 0;
  std::size_t n = 0;
  double accuracy_score1 = 0.0;
  double accuracy_score2 = 0.0;
  std::size_t excluded = 0;
};

struct Rq1Report {
  std::size_t n = 0;
  double auc_threshold = 0.4;
  Reported<stats::TestResult> pearson;
  Reported<stats::TestResult> spearman;
  Reported<stats::TestResult> partial_correlation;
  std::map<Band, GroupSummary> band_means;
  Reported<stats::TestResult> anova;
  Reported<double> auc;
  GroupSummary perfect_agreement;
  GroupSummary any_disagreement;
  Reported<double> perfect_vs_any_delta_gap;
  std::vector<SetAccuracy> per_set_accuracy;
  SetAccuracy overall_accuracy;
  Reported<double> brier;
};

namespace detail {

inline GroupSummary summarize(const std::vector<double>& v) {
  GroupSummary g;
  g.n = v.size();
  if (!v.empty()) g.mean_entropy = stats::mean(v);
  return g;
}

/// Accuracy of the rounded mean model score against each human rater.
inline SetAccuracy accuracy_over(const std::vector<const ScoredResponse*>& rs,
                                 const std::map<int, EssaySetSpec>& specs, int set_id = 0) {
  SetAccuracy a;
  a.set_id = set_id;
  std::size_t m1 = 0, m2 = 0;
  for (const auto* r : rs) {
    if (r->llm_scores.empty()) {
      ++a.excluded;
      continue;
    }
    const auto rounded = stats::rounded_mean_score(r->llm_scores, specs.at(r->set_id));
    ++a.n;
    if (rounded == r->raw_score_1) ++m1;
    if (rounded == r->raw_score_2) ++m2;
  }
  if (a.n > 0) {
    a.accuracy_score1 = static_cast<double>(m1) / static_cast<double>(a.n);
    a.accuracy_score2 = static_cast<double>(m2) / static_cast<double>(a.n);
  }
  return a;
}

inline std::vector<double> entropies(const std::vector<const ScoredResponse*>& rs) {
  std::vector<double> v;
  for (const auto* r : rs) v.push_back(r->entropy);
  return v;
}

inline std::vector<double> deltas(const std::vector<const ScoredResponse*>& rs) {
  std::vector<double> v;
  for (const auto* r : rs) v.push_back(r->delta);
  return v;
}

inline std::vector<const ScoredResponse*> all_of(const std::vector<ScoredResponse>& rs) {
  std::vector<const ScoredResponse*> v;
  for (const auto& r : rs) v.push_back(&r);
  return v;
}

}  // namespace detail

/// Global alignment of entropy with human disagreement. `specs` supplies the
/// rubric ranges used for score rounding.
inline Rq1Report run_rq1(const std::vector<ScoredResponse>& responses,
                         const std::map<int, EssaySetSpec>& specs, double auc_threshold = 0.4) {
  if (responses.size() < 3) throw StructuralError("RQ1 needs at least 3 scored responses");
  Rq1Report rep;
  rep.n = responses.size();
  rep.auc_threshold = auc_threshold;

  const auto all = detail::all_of(responses);
  const auto h = detail::entropies(all);
  const auto d = detail::deltas(all);

  auto correlation_note = [&](const std::string& label, auto fn) {
    auto r = try_report(label, fn);
    if (!r.value && stats::detail::is_constant(h)) r.note = label + " unavailable: constant entropy";
    return r;
  };
  rep.pearson = correlation_note("correlation", [&] { return stats::pearson(h, d); });
  rep.spearman = correlation_note("rank correlation", [&] { return stats::spearman(h, d); });
  rep.partial_correlation = correlation_note("partial correlation", [&] {
    std::vector<double> length, mean_score;
    for (const auto& r : responses) {
      length.push_back(static_cast<double>(r.token_count));
      mean_score.push_back(r.mean_human_norm_score);
    }
    return stats::partial_correlation(h, d, {length, mean_score});
  });

  std::map<Band, std::vector<double>> by_band;
  for (auto b : kAllBands) by_band[b];
  for (const auto& r : responses) by_band[r.band].push_back(r.entropy);
  std::vector<std::vector<double>> anova_groups;
  for (const auto& [b, v] : by_band) {
    rep.band_means[b] = detail::summarize(v);
    if (!v.empty()) anova_groups.push_back(v);
  }
  if (anova_groups.size() < 2) {
    rep.anova = Reported<stats::TestResult>::unavailable(
        "ANOVA unavailable: responses fall in a single disagreement band");
  } else {
    rep.anova = try_report("ANOVA", [&] { return stats::anova_oneway(anova_groups); });
  }

  std::vector<int> labels;
  for (const auto& r : responses) labels.push_back(r.delta > auc_threshold ? 1 : 0);
  rep.auc = try_report("AUC", [&] { return stats::roc_auc(h, labels); });

  std::vector<double> perfect, any;
  for (const auto& r : responses) (r.delta == 0.0 ? perfect : any).push_back(r.entropy);
  rep.perfect_agreement = detail::summarize(perfect);
  rep.any_disagreement = detail::summarize(any);
  if (perfect.empty() || any.empty()) {
    rep.perfect_vs_any_delta_gap =
        Reported<double>::unavailable("gap unavailable: one agreement subset is empty");
  } else {
    rep.perfect_vs_any_delta_gap = {*rep.any_disagreement.mean_entropy -
                                        *rep.perfect_agreement.mean_entropy,
                                    ""};
  }

  std::map<int, std::vector<const ScoredResponse*>> by_set;
  for (const auto& r : responses) by_set[r.set_id].push_back(&r);
  for (const auto& [set_id, rs] : by_set) {
    rep.per_set_accuracy.push_back(detail::accuracy_over(rs, specs, set_id));
  }
  rep.overall_accuracy = detail::accuracy_over(all, specs);

  rep.brier = try_report("Brier score", [&] {
    std::vector<double> p;
    for (const auto& r : responses) {
      p.push_back(r.k_effective > 1
                      ? std::clamp(r.entropy / std::log(static_cast<double>(r.k_effective)), 0.0,
                                   1.0)
                      : 0.0);
    }
    return stats::brier(p, labels);
  });
  return rep;
}

// --- RQ2 ------------------------------------------------------------------------

struct SubjectSummary {
  Subject subject = Subject::Science;
  std::size_t n = 0;
  double mean_entropy = 0.0;
  Reported<stats::TestResult> pearson;
  Reported<stats::TestResult> spearman;
  double accuracy_score1 = 0.0;
  double accuracy_score2 = 0.0;
};

struct Rq2Report {
  std::vector<SubjectSummary> per_subject;
  std::vector<std::string> warnings;
  Reported<stats::TestResult> kruskal_wallis;
};

/// Per-subject alignment plus a Kruskal-Wallis test of per-response entropy
/// grouped by subject. Subjects with fewer than 3 responses are left out.
inline Rq2Report run_rq2(const std::vector<ScoredResponse>& responses,
                         const std::map<int, EssaySetSpec>& specs) {
  Rq2Report rep;
  std::map<Subject, std::vector<const ScoredResponse*>> by_subject;
  for (const auto& r : responses) by_subject[r.subject].push_back(&r);

  std::vector<std::vector<double>> groups;
  for (const auto& [subject, rs] : by_subject) {
    if (rs.size() < 3) {
      rep.warnings.push_back("subject " + to_string(subject) + " excluded: only " +
                             std::to_string(rs.size()) + " responses");
      continue;
    }
    SubjectSummary s;
    s.subject = subject;
    s.n = rs.size();
    const auto h = detail::entropies(rs);
    const auto d = detail::deltas(rs);
    s.mean_entropy = stats::mean(h);
    const auto label = "correlation for " + to_string(subject);
    s.pearson = try_report(label, [&] { return stats::pearson(h, d); });
    s.spearman = try_report("rank " + label, [&] { return stats::spearman(h, d); });
    const auto acc = detail::accuracy_over(rs, specs);
    s.accuracy_score1 = acc.accuracy_score1;
    s.accuracy_score2 = acc.accuracy_score2;
    rep.per_subject.push_back(std::move(s));
    groups.push_back(h);
  }
  if (groups.size() < 2) {
    rep.kruskal_wallis = Reported<stats::TestResult>::unavailable(
        "Kruskal-Wallis unavailable: fewer than two subjects with enough responses");
  } else {
    rep.kruskal_wallis = try_report("Kruskal-Wallis", [&] { return stats::kruskal_wallis(groups); });
  }
  return rep;
}

// --- RQ3 ------------------------------------------------------------------------

struct OlsSummary {
  double source_dependent_coefficient = 0.0;
  double standard_error = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::size_t residual_df = 0;
  std::vector<std::string> columns;
  std::vector<double> coefficients;
  std::vector<std::string> dropped_columns;
};

struct Rq3Report {
  GroupSummary source_dependent;
  GroupSummary non_source_dependent;
  double mean_difference = 0.0;  // source-dependent minus non-source-dependent
  stats::TestResult mann_whitney;
  Reported<stats::TestResult> pearson_source_dependent;
  Reported<stats::TestResult> pearson_non_source_dependent;
  Reported<OlsSummary> ols;
};

/// Entropy regressed on [1, source_dependent, subject indicators]. The first
/// present subject is the reference level; an indicator that would make the
/// design singular (e.g. a subject whose sets share one source flag) is dropped
/// and listed.
inline OlsSummary fit_source_dependency_ols(const std::vector<ScoredResponse>& responses) {
  const std::size_t n = responses.size();
  stats::Design design;
  design.add("intercept", std::vector<double>(n, 1.0));
  std::vector<double> sd, y;
  for (const auto& r : responses) {
    sd.push_back(r.source_dependent ? 1.0 : 0.0);
    y.push_back(r.entropy);
  }
  design.add("source_dependent", sd);

  std::map<Subject, std::size_t> present;
  for (const auto& r : responses) ++present[r.subject];
  OlsSummary out;
  bool reference = true;
  for (const auto& [subject, count] : present) {
    if (reference) {
      reference = false;
      continue;
    }
    std::vector<double> col;
    for (const auto& r : responses) col.push_back(r.subject == subject ? 1.0 : 0.0);
    auto trial = design;
    trial.add("subject_" + to_string(subject), col);
    try {
      stats::detail::HouseholderQr probe(trial);
      design = std::move(trial);
    } catch (const SingularityError&) {
      out.dropped_columns.push_back("subject_" + to_string(subject));
    }
  }
  const auto fit = stats::ols(design, y);
  out.source_dependent_coefficient = fit.coefficients[1];
  out.standard_error = fit.standard_errors[1];
  out.t_statistic = fit.t_statistics[1];
  out.p_value = fit.p_values[1];
  out.residual_df = fit.residual_df;
  out.columns = fit.names;
  out.coefficients = fit.coefficients;
  return out;
}

inline Rq3Report run_rq3(const std::vector<ScoredResponse>& responses) {
  std::vector<const ScoredResponse*> dep, indep;
  for (const auto& r : responses) (r.source_dependent ? dep : indep).push_back(&r);
  if (dep.empty() || indep.empty()) {
    throw StructuralError("RQ3 needs both source-dependent and non-source-dependent responses");
  }
  Rq3Report rep;
  const auto h_dep = detail::entropies(dep);
  const auto h_ind = detail::entropies(indep);
  rep.source_dependent = detail::summarize(h_dep);
  rep.non_source_dependent = detail::summarize(h_ind);
  rep.mean_difference = *rep.source_dependent.mean_entropy - *rep.non_source_dependent.mean_entropy;
  rep.mann_whitney = stats::mann_whitney_u(h_dep, h_ind);
  rep.pearson_source_dependent = try_report(
      "source-dependent correlation", [&] { return stats::pearson(h_dep, detail::deltas(dep)); });
  rep.pearson_non_source_dependent =
      try_report("non-source-dependent correlation",
                 [&] { return stats::pearson(h_ind, detail::deltas(indep)); });
  rep.ols = try_report("regression", [&] { return fit_source_dependency_ols(responses); });
  return rep;
}

// --- triage ---------------------------------------------------------------------

enum class Quadrant { HighH_HighD, HighH_LowD, LowH_HighD, LowH_LowD };

inline constexpr std::array<Quadrant, 4> kAllQuadrants = {
    Quadrant::HighH_HighD, Quadrant::HighH_LowD, Quadrant::LowH_HighD, Quadrant::LowH_LowD};

inline std::string to_string(Quadrant q) {
  switch (q) {
    case Quadrant::HighH_HighD: return "HighH_HighD";
    case Quadrant::HighH_LowD: return "HighH_LowD";
    case Quadrant::LowH_HighD: return "LowH_HighD";
    case Quadrant::LowH_LowD: return "LowH_LowD";
  }
  return "?";
}

inline std::string quadrant_label(Quadrant q) {
  switch (q) {
    case Quadrant::HighH_HighD: return "mandatory review";
    case Quadrant::HighH_LowD: return "rubric underspecification";
    case Quadrant::LowH_HighD: return "model overconfidence or grader inconsistency";
    case Quadrant::LowH_LowD: return "safe automation";
  }
  return "?";
}

/// Recommended handling for each quadrant.
inline std::string quadrant_action(Quadrant q) {
  switch (q) {
    case Quadrant::HighH_HighD: return "Flag for mandatory human review";
    case Quadrant::HighH_LowD: return "Review rubric for underspecification";
    case Quadrant::LowH_HighD: return "Check for model overconfidence or grader inconsistency";
    case Quadrant::LowH_LowD: return "Safe candidates for full automation";
  }
  return "?";
}

inline Quadrant classify(double entropy, double delta, double h_threshold, double d_threshold) {
  const bool high_h = entropy > h_threshold;
  const bool high_d = delta > d_threshold;
  if (high_h) return high_d ? Quadrant::HighH_HighD : Quadrant::HighH_LowD;
  return high_d ? Quadrant::LowH_HighD : Quadrant::LowH_LowD;
}

struct TriageEntry {
  std::int64_t response_id = 0;
  double entropy = 0.0;
  double delta = 0.0;
  Quadrant quadrant = Quadrant::LowH_LowD;
};

struct TriageReport {
  double h_threshold = 0.5;
  double d_threshold = 0.4;
  std::vector<TriageEntry> entries;
  std::map<Quadrant, std::size_t> counts;
};

inline TriageReport triage(const std::vector<ScoredResponse>& responses, double h_threshold = 0.5,
                           double d_threshold = 0.4) {
  if (!(h_threshold >= 0.0) || !(d_threshold >= 0.0)) {
    throw ConfigError("triage thresholds must be non-negative");
  }
  TriageReport rep;
  rep.h_threshold = h_threshold;
  rep.d_threshold = d_threshold;
  for (auto q : kAllQuadrants) rep.counts[q] = 0;
  for (const auto& r : responses) {
    const auto q = classify(r.entropy, r.delta, h_threshold, d_threshold);
    rep.entries.push_back({r.response_id, r.entropy, r.delta, q});
    ++rep.counts[q];
  }
  return rep;
}

// --- full report ----------------------------------------------------------------

inline constexpr int kReportSchemaVersion = 1;

struct EvaluationOptions {
  double auc_threshold = 0.4;
  double h_threshold = 0.5;
  double d_threshold = 0.4;
};

struct EvaluationReport {
  std::size_t n = 0;
  Rq1Report rq1;
  Rq2Report rq2;
  Reported<Rq3Report> rq3;
  TriageReport triage;
};

inline EvaluationReport evaluate(const std::vector<ScoredResponse>& responses,
                                 const std::map<int, EssaySetSpec>& specs,
                                 const EvaluationOptions& opt = {}) {
  EvaluationReport rep;
  rep.n = responses.size();
  rep.rq1 = run_rq1(responses, specs, opt.auc_threshold);
  rep.rq2 = run_rq2(responses, specs);
  rep.rq3 = try_report("RQ3", [&] { return run_rq3(responses); });
  rep.triage = triage(responses, opt.h_threshold, opt.d_threshold);
  return rep;
}

}  // namespace entropy_triage
