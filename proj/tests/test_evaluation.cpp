#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "entropy_triage/evaluation.hpp"
#include "entropy_triage/report.hpp"
#include "fixtures.hpp"
#include "sim.hpp"

using namespace entropy_triage;

namespace {

ScoredResponse scored(std::int64_t id, double h, double d, Subject subject = Subject::Science,
                      bool source_dependent = true, int set_id = 1) {
  ScoredResponse s;
  s.response_id = id;
  s.entropy = h;
  s.delta = d;
  s.band = band_of(d);
  s.subject = subject;
  s.source_dependent = source_dependent;
  s.set_id = set_id;
  s.k_effective = 6;
  s.token_count = 10 + static_cast<std::size_t>(id % 7);
  s.mean_human_norm_score = 0.5 + 0.01 * static_cast<double>(id % 5);
  s.raw_score_1 = 1;
  s.raw_score_2 = 1;
  s.llm_scores = {1, 1, 1};
  return s;
}

std::map<int, EssaySetSpec> specs_for(std::initializer_list<int> ids) {
  std::map<int, EssaySetSpec> m;
  for (int id : ids) m.emplace(id, fixtures::make_spec(id, 0, 3));
  return m;
}

}  // namespace

// --- RQ1 ------------------------------------------------------------------------

TEST(Rq1, PartitionsAndBasicFields) {
  std::vector<ScoredResponse> rs;
  std::mt19937_64 gen(1);
  const double deltas[] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 0.5, 0.2, 1.0};
  for (int i = 0; i < 60; ++i) {
    const double d = deltas[gen() % 6];
    rs.push_back(scored(i, d + 0.1 * static_cast<double>(gen() % 5), d));
  }
  const auto rep = run_rq1(rs, specs_for({1}));
  std::size_t band_total = 0;
  for (auto b : kAllBands) band_total += rep.band_means.at(b).n;
  EXPECT_EQ(band_total, rs.size());
  EXPECT_EQ(rep.perfect_agreement.n + rep.any_disagreement.n, rs.size());
  ASSERT_TRUE(rep.pearson.value && rep.anova.value && rep.auc.value && rep.brier.value);
  EXPECT_GT(rep.pearson.value->statistic, 0.5);
  EXPECT_EQ(rep.anova.value->df, (std::vector<double>{2, 57}));
  ASSERT_TRUE(rep.perfect_vs_any_delta_gap.value);
  EXPECT_NEAR(*rep.perfect_vs_any_delta_gap.value,
              *rep.any_disagreement.mean_entropy - *rep.perfect_agreement.mean_entropy, 1e-15);
}

TEST(Rq1, BrierUsesNormalizedEntropy) {
  std::vector<ScoredResponse> rs = {scored(1, std::log(6.0), 0.6), scored(2, 0.0, 0.0),
                                    scored(3, 0.5 * std::log(6.0), 0.0)};
  const auto rep = run_rq1(rs, specs_for({1}), 0.4);
  // p = 1, 0, 0.5 against labels 1, 0, 0.
  ASSERT_TRUE(rep.brier.value);
  EXPECT_NEAR(*rep.brier.value, 0.25 / 3.0, 1e-15);
  EXPECT_NEAR(*rep.auc.value, 1.0, 1e-15);
}

TEST(Rq1, ConstantEntropyMakesCorrelationUnavailable) {
  std::vector<ScoredResponse> rs = {scored(1, 0.0, 0.0), scored(2, 0.0, 0.5), scored(3, 0.0, 1.0)};
  const auto rep = run_rq1(rs, specs_for({1}));
  EXPECT_FALSE(rep.pearson.value.has_value());
  EXPECT_EQ(rep.pearson.note, "correlation unavailable: constant entropy");
  EXPECT_FALSE(rep.spearman.value.has_value());
}

TEST(Rq1, SingleBandMarksAnovaUnavailable) {
  std::vector<ScoredResponse> rs = {scored(1, 0.1, 0.0), scored(2, 0.7, 0.1), scored(3, 1.2, 0.2),
                                    scored(4, 0.3, 0.05)};
  const auto rep = run_rq1(rs, specs_for({1}));
  EXPECT_FALSE(rep.anova.value.has_value());
  EXPECT_NE(rep.anova.note.find("single disagreement band"), std::string::npos);
  EXPECT_TRUE(rep.pearson.value.has_value());
  EXPECT_EQ(run_rq1(rs, specs_for({1})).band_means.at(Band::Low).n, 4u);
  EXPECT_THROW(run_rq1({scored(1, 0, 0), scored(2, 1, 1)}, specs_for({1})), StructuralError);
}

TEST(Rq1, PerSetAccuracy) {
  auto a = scored(1, 0.1, 0.0, Subject::Science, true, 1);
  a.raw_score_1 = 2;
  a.raw_score_2 = 1;
  a.llm_scores = {1, 2};  // rounds to 2
  auto b = scored(2, 0.2, 0.0, Subject::Science, true, 1);
  b.raw_score_1 = 1;
  b.raw_score_2 = 1;
  b.llm_scores = {0, 1, 1, 1, 1, 1};  // rounds to 1
  auto c = scored(3, 0.3, 0.5, Subject::Science, true, 2);
  c.raw_score_1 = 3;
  c.raw_score_2 = 0;
  c.llm_scores = {3};
  const auto rep = run_rq1({a, b, c}, specs_for({1, 2}));
  ASSERT_EQ(rep.per_set_accuracy.size(), 2u);
  EXPECT_EQ(rep.per_set_accuracy[0].set_id, 1);
  EXPECT_DOUBLE_EQ(rep.per_set_accuracy[0].accuracy_score1, 1.0);
  EXPECT_DOUBLE_EQ(rep.per_set_accuracy[0].accuracy_score2, 0.5);
  EXPECT_DOUBLE_EQ(rep.per_set_accuracy[1].accuracy_score1, 1.0);
  EXPECT_DOUBLE_EQ(rep.per_set_accuracy[1].accuracy_score2, 0.0);
}

TEST(Rq1, FullCouplingGivesIncreasingBandMeans) {
  SynthConfig cfg;
  cfg.n = 400;
  cfg.coupling = 1.0;
  cfg.seed = 3;
  const auto run = sim::run_synthetic(cfg);
  const auto rep = run_rq1(run.analysis.scored, run.synth.corpus.sets);
  const double lo = *rep.band_means.at(Band::Low).mean_entropy;
  const double mid = *rep.band_means.at(Band::Medium).mean_entropy;
  const double hi = *rep.band_means.at(Band::High).mean_entropy;
  EXPECT_LT(lo, mid);
  EXPECT_LT(mid, hi);
}

TEST(Rq1, ZeroCouplingGivesNoCorrelation) {
  SynthConfig cfg;
  cfg.n = 2000;
  cfg.coupling = 0.0;
  cfg.seed = 1;
  const auto run = sim::run_synthetic(cfg);
  const auto rep = run_rq1(run.analysis.scored, run.synth.corpus.sets);
  ASSERT_TRUE(rep.pearson.value);
  EXPECT_LT(std::fabs(rep.pearson.value->statistic), 0.1);
}

// --- RQ2 ------------------------------------------------------------------------

TEST(Rq2, DuplicatedSubjectGivesZeroKruskalWallis) {
  std::vector<ScoredResponse> rs;
  for (int i = 0; i < 20; ++i) {
    const double h = 0.1 * (i % 7), d = (i % 3) / 2.0;
    rs.push_back(scored(i, h, d, Subject::Science));
    rs.push_back(scored(100 + i, h, d, Subject::English));
  }
  const auto rep = run_rq2(rs, specs_for({1}));
  ASSERT_TRUE(rep.kruskal_wallis.value);
  EXPECT_NEAR(rep.kruskal_wallis.value->statistic, 0.0, 1e-12);
  // H is zero up to rounding and the chi-square tail is steep near zero.
  EXPECT_GT(rep.kruskal_wallis.value->p_value, 1.0 - 1e-6);
}

TEST(Rq2, DegenerateSubjectIsolatedAndSmallSubjectExcluded) {
  std::vector<ScoredResponse> rs;
  for (int i = 0; i < 10; ++i) {
    rs.push_back(scored(i, 0.0, (i % 3) / 2.0, Subject::ELA));               // constant entropy
    rs.push_back(scored(50 + i, 0.1 * i, (i % 3) / 2.0, Subject::Biology));  // fine
  }
  rs.push_back(scored(99, 0.3, 0.0, Subject::English));
  rs.push_back(scored(98, 0.4, 0.5, Subject::English));
  const auto rep = run_rq2(rs, specs_for({1}));
  ASSERT_EQ(rep.per_subject.size(), 2u);
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("English"), std::string::npos);
  for (const auto& s : rep.per_subject) {
    if (s.subject == Subject::ELA) {
      EXPECT_FALSE(s.pearson.value.has_value());
      EXPECT_NE(s.pearson.note.find("unavailable"), std::string::npos);
    } else {
      EXPECT_TRUE(s.pearson.value.has_value());
    }
  }
  EXPECT_TRUE(rep.kruskal_wallis.value.has_value());
}

TEST(Rq2, PlantedSubjectCouplingOrdering) {
  SynthConfig cfg;
  cfg.n = 1200;
  cfg.seed = 8;
  cfg.subject_plan = {{1, Subject::Science}, {2, Subject::Science}, {3, Subject::English},
                      {4, Subject::English}};
  cfg.source_dep_plan = {};
  cfg.score_ranges = {{1, {0, 3}}, {2, {0, 3}}, {3, {0, 3}}, {4, {0, 3}}};
  cfg.subject_coupling = {{Subject::Science, 0.8}, {Subject::English, 0.0}};
  const auto run = sim::run_synthetic(cfg);
  const auto rep = run_rq2(run.analysis.scored, run.synth.corpus.sets);
  ASSERT_EQ(rep.per_subject.size(), 2u);
  const auto& sci = rep.per_subject[0];
  const auto& eng = rep.per_subject[1];
  ASSERT_EQ(sci.subject, Subject::Science);
  ASSERT_TRUE(sci.pearson.value && eng.pearson.value);
  EXPECT_GT(sci.pearson.value->statistic, eng.pearson.value->statistic + 0.3);
}

TEST(Rq2, InvariantToReordering) {
  std::vector<ScoredResponse> rs;
  std::mt19937_64 gen(2);
  for (int i = 0; i < 60; ++i) {
    rs.push_back(scored(i, 0.01 * static_cast<double>(gen() % 100), (gen() % 4) / 3.0,
                        i % 2 ? Subject::ELA : Subject::Science));
  }
  auto shuffled = rs;
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  const auto a = run_rq2(rs, specs_for({1})), b = run_rq2(shuffled, specs_for({1}));
  ASSERT_EQ(a.per_subject.size(), b.per_subject.size());
  for (std::size_t i = 0; i < a.per_subject.size(); ++i) {
    EXPECT_NEAR(a.per_subject[i].pearson.value->statistic, b.per_subject[i].pearson.value->statistic,
                1e-12);
  }
}

// --- RQ3 ------------------------------------------------------------------------

TEST(Rq3, IdenticalGroups) {
  std::vector<ScoredResponse> rs;
  for (int i = 0; i < 30; ++i) {
    const double h = 0.1 * (i % 10), d = (i % 3) / 2.0;
    rs.push_back(scored(i, h, d, Subject::Science, true));
    rs.push_back(scored(100 + i, h, d, Subject::Science, false));
  }
  const auto rep = run_rq3(rs);
  EXPECT_EQ(rep.mean_difference, 0.0);
  EXPECT_NEAR(rep.mann_whitney.p_value, 1.0, 1e-12);
}

TEST(Rq3, PlantedShiftRecovered) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<ScoredResponse> rs;
  for (int i = 0; i < 2000; ++i) {
    const bool sd = i % 2 == 0;
    const double h = std::max(0.0, 0.6 + noise(gen) + (sd ? 0.3 : 0.0));
    rs.push_back(scored(i, h, (i % 4) / 3.0, Subject::Science, sd));
  }
  const auto rep = run_rq3(rs);
  EXPECT_EQ(rep.source_dependent.n, 1000u);
  EXPECT_NEAR(rep.mean_difference, 0.3, 0.05);
  EXPECT_LT(rep.mann_whitney.p_value, 1e-10);
}

TEST(Rq3, OlsRecoversCoefficientWithOrthogonalSubjects) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> noise(0.0, 0.2);
  const std::map<Subject, double> effect = {{Subject::Science, 0.0}, {Subject::ELA, 0.4},
                                            {Subject::Biology, -0.2}, {Subject::English, 0.1}};
  std::vector<ScoredResponse> rs;
  int id = 0;
  for (const auto& [subject, e] : effect) {
    for (int rep = 0; rep < 100; ++rep) {
      for (bool sd : {true, false}) {
        rs.push_back(scored(id++, 0.5 + e + (sd ? 0.25 : 0.0) + noise(gen), 0.0, subject, sd));
      }
    }
  }
  const auto rep = run_rq3(rs);
  ASSERT_TRUE(rep.ols.value);
  const auto& o = *rep.ols.value;
  EXPECT_TRUE(o.dropped_columns.empty());
  EXPECT_EQ(o.columns.size(), 5u);
  EXPECT_LT(std::fabs(o.source_dependent_coefficient - 0.25), 2.0 * o.standard_error);
  EXPECT_EQ(o.residual_df, rs.size() - 5);
}

TEST(Rq3, CollinearSubjectIndicatorDropped) {
  std::vector<ScoredResponse> rs;
  for (int i = 0; i < 40; ++i) {
    const bool bio = i % 2 == 0;  // Biology is exactly the non-source-dependent group
    rs.push_back(scored(i, 0.02 * i, 0.0, bio ? Subject::Biology : (i % 4 == 1 ? Subject::Science : Subject::ELA),
                        !bio));
  }
  const auto o = fit_source_dependency_ols(rs);
  EXPECT_EQ(o.dropped_columns.size(), 1u);
  EXPECT_TRUE(std::isfinite(o.standard_error));
}

TEST(Rq3, EmptyGroupIsStructuralError) {
  std::vector<ScoredResponse> rs = {scored(1, 0.1, 0.0, Subject::Science, true),
                                    scored(2, 0.2, 0.5, Subject::Science, true)};
  EXPECT_THROW(run_rq3(rs), StructuralError);
}

// --- triage ---------------------------------------------------------------------

TEST(Triage, CornerQuadrantActions) {
  EXPECT_EQ(classify(0.9, 0.6, 0.5, 0.4), Quadrant::HighH_HighD);
  EXPECT_EQ(quadrant_action(classify(0.9, 0.6, 0.5, 0.4)), "Flag for mandatory human review");
  EXPECT_EQ(quadrant_label(classify(0.9, 0.6, 0.5, 0.4)), "mandatory review");
  EXPECT_EQ(classify(0.0, 0.0, 0.5, 0.4), Quadrant::LowH_LowD);
  EXPECT_EQ(quadrant_action(Quadrant::LowH_LowD), "Safe candidates for full automation");
  EXPECT_EQ(quadrant_label(Quadrant::LowH_LowD), "safe automation");
}

TEST(Triage, FourElementFixtureCoversEachQuadrantOnce) {
  const std::vector<ScoredResponse> rs = {scored(1, 0.9, 0.6), scored(2, 0.9, 0.1),
                                          scored(3, 0.1, 0.6), scored(4, 0.1, 0.1)};
  const auto t = triage(rs, 0.5, 0.4);
  ASSERT_EQ(t.entries.size(), 4u);
  EXPECT_EQ(t.entries[0].quadrant, Quadrant::HighH_HighD);
  EXPECT_EQ(t.entries[1].quadrant, Quadrant::HighH_LowD);
  EXPECT_EQ(t.entries[2].quadrant, Quadrant::LowH_HighD);
  EXPECT_EQ(t.entries[3].quadrant, Quadrant::LowH_LowD);
  for (auto q : kAllQuadrants) EXPECT_EQ(t.counts.at(q), 1u);
  EXPECT_EQ(quadrant_label(Quadrant::HighH_LowD), "rubric underspecification");
  EXPECT_EQ(quadrant_label(Quadrant::LowH_HighD), "model overconfidence or grader inconsistency");
  EXPECT_THROW(triage(rs, -1.0, 0.4), ConfigError);
}

TEST(Triage, ThresholdsAreStrictAndOnlyMoveBoundaryPoints) {
  EXPECT_EQ(classify(0.5, 0.4, 0.5, 0.4), Quadrant::LowH_LowD);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 1000; ++i) {
    const double h = 2 * u(gen), d = u(gen), th = 2 * u(gen), td = u(gen);
    const auto q = classify(h, d, th, td);
    const bool hi_h = q == Quadrant::HighH_HighD || q == Quadrant::HighH_LowD;
    const bool hi_d = q == Quadrant::HighH_HighD || q == Quadrant::LowH_HighD;
    EXPECT_EQ(hi_h, h > th);
    EXPECT_EQ(hi_d, d > td);
  }
}

// --- full report and serialization ----------------------------------------------

TEST(Report, JsonAndCsvTables) {
  SynthConfig cfg;
  cfg.n = 120;
  cfg.seed = 6;
  const auto run = sim::run_synthetic(cfg);
  const auto rep = evaluate(run.analysis.scored, run.synth.corpus.sets);
  const auto j = to_json(rep);
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["n"], 120);
  std::size_t total = 0;
  for (const auto& [q, c] : j["triage"]["counts"].items()) total += c.get<std::size_t>();
  EXPECT_EQ(total, 120u);
  EXPECT_EQ(j.dump(), to_json(evaluate(run.analysis.scored, run.synth.corpus.sets)).dump());

  const auto tables = render_csv_tables(j);
  for (auto name : {"report_rq1.csv", "report_rq2.csv", "report_rq3.csv", "report_triage.csv",
                    "report_triage_counts.csv"}) {
    ASSERT_TRUE(tables.contains(name)) << name;
  }
  const auto& tri = tables.at("report_triage.csv");
  EXPECT_EQ(std::count(tri.begin(), tri.end(), '\n'), 121);
  EXPECT_EQ(tables.at("report_rq1.csv").rfind("metric,value\n", 0), 0u);
  EXPECT_NE(tables.at("report_rq1.csv").find("pearson.statistic,"), std::string::npos);
  EXPECT_THROW(render_csv_tables(Json::object()), ParseError);
}

TEST(Report, UnavailableStatisticsSerializeAsNullWithNote) {
  std::vector<ScoredResponse> rs = {scored(1, 0.0, 0.0), scored(2, 0.0, 0.5), scored(3, 0.0, 1.0)};
  const auto j = to_json(run_rq1(rs, specs_for({1})));
  EXPECT_EQ(j["pearson"], (Json{{"unavailable", "correlation unavailable: constant entropy"}}));
}
