#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entropy_triage/evaluation.hpp"

// JSON and CSV renderings of an EvaluationReport. Reports carry no volatile
// fields so identical inputs give byte-identical files.

namespace entropy_triage {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json real(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline Json test_json(const stats::TestResult& t) {
  Json j;
  j["statistic"] = real(t.statistic);
  j["p_value"] = real(t.p_value);
  j["effect_size"] = t.effect_size ? real(*t.effect_size) : Json(nullptr);
  j["n"] = t.n;
  Json df = Json::array();
  for (double v : t.df) df.push_back(real(v));
  j["df"] = df;
  return j;
}

template <typename T, typename F>
Json reported_json(const Reported<T>& r, F&& render) {
  if (r.value) return render(*r.value);
  return Json{{"unavailable", r.note}};
}

inline Json reported_test(const Reported<stats::TestResult>& r) {
  return reported_json(r, test_json);
}

inline Json reported_real(const Reported<double>& r) {
  return reported_json(r, [](double v) { return real(v); });
}

inline Json group_json(const GroupSummary& g) {
  return Json{{"mean_entropy", g.mean_entropy ? real(*g.mean_entropy) : Json(nullptr)},
              {"n", g.n}};
}

inline Json accuracy_json(const SetAccuracy& a) {
  Json j;
  if (a.set_id != 0) j["set_id"] = a.set_id;
  j["n"] = a.n;
  j["accuracy_score1"] = real(a.accuracy_score1);
  j["accuracy_score2"] = real(a.accuracy_score2);
  j["excluded"] = a.excluded;
  return j;
}

}  // namespace detail

inline Json to_json(const Rq1Report& r) {
  Json j;
  j["n"] = r.n;
  j["pearson"] = detail::reported_test(r.pearson);
  j["spearman"] = detail::reported_test(r.spearman);
  j["partial_correlation"] = detail::reported_test(r.partial_correlation);
  Json bands;
  for (const auto& [b, g] : r.band_means) bands[to_string(b)] = detail::group_json(g);
  j["band_means"] = bands;
  j["anova"] = detail::reported_test(r.anova);
  j["auc_threshold"] = r.auc_threshold;
  j["auc_at_threshold"] = detail::reported_real(r.auc);
  j["perfect_agreement"] = detail::group_json(r.perfect_agreement);
  j["any_disagreement"] = detail::group_json(r.any_disagreement);
  j["perfect_vs_any_delta_gap"] = detail::reported_real(r.perfect_vs_any_delta_gap);
  Json per_set = Json::array();
  for (const auto& a : r.per_set_accuracy) per_set.push_back(detail::accuracy_json(a));
  j["per_set_accuracy"] = per_set;
  j["overall_accuracy"] = detail::accuracy_json(r.overall_accuracy);
  j["brier"] = detail::reported_real(r.brier);
  return j;
}

inline Json to_json(const Rq2Report& r) {
  Json j;
  Json subjects = Json::array();
  for (const auto& s : r.per_subject) {
    subjects.push_back(Json{{"subject", to_string(s.subject)},
                            {"n", s.n},
                            {"mean_entropy", detail::real(s.mean_entropy)},
                            {"pearson", detail::reported_test(s.pearson)},
                            {"spearman", detail::reported_test(s.spearman)},
                            {"accuracy_score1", detail::real(s.accuracy_score1)},
                            {"accuracy_score2", detail::real(s.accuracy_score2)}});
  }
  j["per_subject"] = subjects;
  j["kruskal_wallis_across_subjects"] = detail::reported_test(r.kruskal_wallis);
  j["warnings"] = r.warnings;
  return j;
}

inline Json to_json(const OlsSummary& o) {
  Json coefs;
  for (std::size_t i = 0; i < o.columns.size(); ++i) coefs[o.columns[i]] = detail::real(o.coefficients[i]);
  return Json{{"source_dependent_coefficient", detail::real(o.source_dependent_coefficient)},
              {"standard_error", detail::real(o.standard_error)},
              {"t_statistic", detail::real(o.t_statistic)},
              {"p_value", detail::real(o.p_value)},
              {"residual_df", o.residual_df},
              {"coefficients", coefs},
              {"dropped_columns", o.dropped_columns}};
}

inline Json to_json(const Rq3Report& r) {
  Json j;
  j["group_means"] = Json{{"source_dependent", detail::group_json(r.source_dependent)},
                          {"non_source_dependent", detail::group_json(r.non_source_dependent)}};
  j["mean_difference"] = detail::real(r.mean_difference);
  j["mann_whitney"] = detail::test_json(r.mann_whitney);
  j["per_group_pearson"] =
      Json{{"source_dependent", detail::reported_test(r.pearson_source_dependent)},
           {"non_source_dependent", detail::reported_test(r.pearson_non_source_dependent)}};
  j["ols_with_subject_indicators"] =
      detail::reported_json(r.ols, [](const OlsSummary& o) { return to_json(o); });
  return j;
}

inline Json to_json(const TriageReport& t) {
  Json j;
  j["h_threshold"] = t.h_threshold;
  j["d_threshold"] = t.d_threshold;
  Json counts;
  for (const auto& [q, c] : t.counts) counts[to_string(q)] = c;
  j["counts"] = counts;
  Json entries = Json::array();
  for (const auto& e : t.entries) {
    entries.push_back(Json{{"response_id", e.response_id},
                           {"entropy", detail::real(e.entropy)},
                           {"delta", detail::real(e.delta)},
                           {"quadrant", to_string(e.quadrant)},
                           {"label", quadrant_label(e.quadrant)},
                           {"action", quadrant_action(e.quadrant)}});
  }
  j["responses"] = entries;
  return j;
}

inline Json to_json(const EvaluationReport& r) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["n"] = r.n;
  j["rq1"] = to_json(r.rq1);
  j["rq2"] = to_json(r.rq2);
  j["rq3"] = detail::reported_json(r.rq3, [](const Rq3Report& x) { return to_json(x); });
  j["triage"] = to_json(r.triage);
  return j;
}

// --- CSV --------------------------------------------------------------------

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_value(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return csv_field(v.get<std::string>());
  return csv_field(v.dump());
}

/// Array elements are addressed by their identifying field when they have one.
inline std::string element_name(const Json& e, std::size_t index) {
  for (const char* key : {"set_id", "subject", "response_id"}) {
    if (e.is_object() && e.contains(key)) {
      const auto& v = e[key];
      return std::string(key) + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  return std::to_string(index);
}

inline void flatten(const Json& j, const std::string& prefix,
                    std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
    }
  } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      flatten(j[i], prefix + "[" + element_name(j[i], i) + "]", rows);
    }
  } else if (j.is_array()) {
    std::string joined;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) joined += ";";
      joined += j[i].is_string() ? j[i].get<std::string>() : j[i].dump();
    }
    rows.emplace_back(prefix, csv_field(joined));
  } else {
    rows.emplace_back(prefix, csv_value(j));
  }
}

inline std::string metric_table(const Json& section) {
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(section, "", rows);
  std::string out = "metric,value\n";
  for (const auto& [k, v] : rows) out += csv_field(k) + "," + v + "\n";
  return out;
}

}  // namespace detail

/// Renders the CSV tables (file name -> content) from a report JSON document.
inline std::map<std::string, std::string> render_csv_tables(const Json& report) {
  std::map<std::string, std::string> files;
  for (const char* section : {"rq1", "rq2", "rq3"}) {
    if (!report.contains(section)) throw ParseError(std::string("report lacks section ") + section);
    files[std::string("report_") + section + ".csv"] = detail::metric_table(report[section]);
  }
  const auto& tri = report.at("triage");
  std::string rows = "response_id,entropy,delta,quadrant,label\n";
  for (const auto& e : tri.at("responses")) {
    rows += detail::csv_value(e.at("response_id")) + "," + detail::csv_value(e.at("entropy")) +
            "," + detail::csv_value(e.at("delta")) + "," + detail::csv_value(e.at("quadrant")) +
            "," + detail::csv_value(e.at("label")) + "\n";
  }
  files["report_triage.csv"] = rows;
  std::string counts = "quadrant,label,count\n";
  for (auto q : kAllQuadrants) {
    const auto name = to_string(q);
    counts += name + "," + detail::csv_field(quadrant_label(q)) + "," +
              tri.at("counts").at(name).dump() + "\n";
  }
  files["report_triage_counts.csv"] = counts;
  return files;
}

}  // namespace entropy_triage
