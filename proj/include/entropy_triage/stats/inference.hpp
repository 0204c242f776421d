#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entropy_triage/dataset.hpp"
#include "entropy_triage/error.hpp"
#include "entropy_triage/stats/least_squares.hpp"
#include "entropy_triage/stats/special_functions.hpp"

namespace entropy_triage::stats {

/// Carrier for every reported statistic.
struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<double> effect_size;
  std::vector<std::size_t> n;
  std::vector<double> df;
};

// --- helpers -----------------------------------------------------------------

inline double mean(std::span<const double> x) {
  if (x.empty()) throw DegenerateInputError("mean of empty vector");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Average (mid) ranks, 1-based; tied values share the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

/// Sum over tie groups of (t^3 - t).
inline double tie_term(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    acc += t * t * t - t;
    i = j + 1;
  }
  return acc;
}

namespace detail {

inline bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

inline void require_paired(std::span<const double> x, std::span<const double> y,
                           std::size_t min_n) {
  if (x.size() != y.size()) throw DomainError("paired vectors differ in length");
  if (x.size() < min_n) {
    throw DegenerateInputError("need at least " + std::to_string(min_n) + " paired observations");
  }
}

/// Product-moment r with a t-test on `df` degrees of freedom.
inline TestResult correlation_test(std::span<const double> x, std::span<const double> y,
                                   double df) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DegenerateInputError("constant input vector");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  TestResult res;
  res.statistic = r;
  res.n = {x.size()};
  res.df = {df};
  if (!(df > 0.0)) {
    throw DegenerateInputError("no residual degrees of freedom for the correlation test");
  }
  if (1.0 - r * r <= 0.0) {
    res.p_value = 0.0;
  } else {
    const double t = r * std::sqrt(df / (1.0 - r * r));
    res.p_value = student_t_two_sided(t, df);
  }
  return res;
}

}  // namespace detail

// --- correlations ------------------------------------------------------------

inline TestResult pearson(std::span<const double> x, std::span<const double> y) {
  detail::require_paired(x, y, 3);
  if (detail::is_constant(x) || detail::is_constant(y)) {
    throw DegenerateInputError("constant input vector");
  }
  return detail::correlation_test(x, y, static_cast<double>(x.size()) - 2.0);
}

inline TestResult spearman(std::span<const double> x, std::span<const double> y) {
  detail::require_paired(x, y, 3);
  if (detail::is_constant(x) || detail::is_constant(y)) {
    throw DegenerateInputError("constant ranks");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return detail::correlation_test(rx, ry, static_cast<double>(x.size()) - 2.0);
}

/// Correlation of x and y after regressing both on [1, covariates...].
/// The t-test uses n - 2 - (number of covariates) degrees of freedom.
inline TestResult partial_correlation(std::span<const double> x, std::span<const double> y,
                                      const std::vector<std::vector<double>>& covariates) {
  if (covariates.empty()) return pearson(x, y);
  detail::require_paired(x, y, 3);
  Design design;
  design.add("intercept", std::vector<double>(x.size(), 1.0));
  for (std::size_t c = 0; c < covariates.size(); ++c) {
    if (covariates[c].size() != x.size()) throw DomainError("covariate length mismatch");
    design.add("covariate_" + std::to_string(c), covariates[c]);
  }
  const auto rx = ols_residuals(design, x);
  const auto ry = ols_residuals(design, y);

  auto centered_ss = [](std::span<const double> v) {
    const double m = mean(v);
    double s = 0.0;
    for (double e : v) s += (e - m) * (e - m);
    return s;
  };
  auto sum_sq = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
  };
  // Residuals that vanish up to rounding mean the covariates explain the
  // variable completely.
  if (sum_sq(rx) <= 1e-20 * std::max(centered_ss(x), 1e-300) || sum_sq(rx) == 0.0 ||
      sum_sq(ry) <= 1e-20 * std::max(centered_ss(y), 1e-300) || sum_sq(ry) == 0.0) {
    throw DegenerateInputError("a variable is fully explained by the covariates");
  }
  const double df =
      static_cast<double>(x.size()) - 2.0 - static_cast<double>(covariates.size());
  auto res = detail::correlation_test(rx, ry, df);
  return res;
}

// --- group comparisons --------------------------------------------------------

inline TestResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw DegenerateInputError("ANOVA needs at least two groups");
  std::size_t n = 0;
  double total = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw DegenerateInputError("every ANOVA group needs at least 2 values");
    n += g.size();
    for (double v : g) total += v;
  }
  const double grand = total / static_cast<double>(n);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ssw += (v - m) * (v - m);
  }
  const double k = static_cast<double>(groups.size());
  const double df1 = k - 1.0;
  const double df2 = static_cast<double>(n) - k;
  TestResult res;
  for (const auto& g : groups) res.n.push_back(g.size());
  res.df = {df1, df2};
  if (ssw == 0.0) {
    res.statistic = ssb == 0.0 ? 0.0 : INFINITY;
    res.p_value = ssb == 0.0 ? 1.0 : 0.0;
  } else {
    res.statistic = (ssb / df1) / (ssw / df2);
    res.p_value = f_upper_tail(res.statistic, df1, df2);
  }
  res.effect_size = (ssb + ssw) > 0.0 ? ssb / (ssb + ssw) : 0.0;  // eta squared
  return res;
}

/// Kruskal-Wallis H with tie correction; effect size eta^2 = (H - k + 1)/(n - k).
inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw DegenerateInputError("Kruskal-Wallis needs at least two groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw DegenerateInputError("Kruskal-Wallis group is empty");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const double n = static_cast<double>(pooled.size());
  if (pooled.size() < 5) throw DegenerateInputError("Kruskal-Wallis needs n >= 5");
  if (detail::is_constant(pooled)) throw DegenerateInputError("all values identical");

  const auto ranks = average_ranks(pooled);
  double sum_term = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r += ranks[offset + i];
    offset += g.size();
    sum_term += r * r / static_cast<double>(g.size());
  }
  double h = 12.0 / (n * (n + 1.0)) * sum_term - 3.0 * (n + 1.0);
  const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
  h /= correction;
  h = std::max(h, 0.0);

  const double k = static_cast<double>(groups.size());
  TestResult res;
  res.statistic = h;
  res.p_value = chi_squared_upper_tail(h, k - 1.0);
  res.effect_size = (h - k + 1.0) / (n - k);
  for (const auto& g : groups) res.n.push_back(g.size());
  res.df = {k - 1.0};
  return res;
}

namespace detail {

/// Null distribution of U for sample sizes (m, n) without ties, as counts
/// indexed by U. Built from the q-binomial recurrence
/// [N, k] = [N-1, k-1] + q^k [N-1, k], which only ever adds.
inline std::vector<double> mann_whitney_null_counts(std::size_t m, std::size_t n) {
  const std::size_t total = m + n;
  // row[k] is the polynomial [N, k]_q for the current N.
  std::vector<std::vector<double>> row(m + 1);
  row[0] = {1.0};
  for (std::size_t big_n = 1; big_n <= total; ++big_n) {
    const std::size_t kmax = std::min(m, big_n);
    for (std::size_t k = kmax; k >= 1; --k) {
      const auto& prev_km1 = row[k - 1];
      const auto& prev_k = row[k];
      std::vector<double> next(std::max(prev_km1.size(), prev_k.empty() ? 0 : prev_k.size() + k),
                               0.0);
      for (std::size_t i = 0; i < prev_km1.size(); ++i) next[i] += prev_km1[i];
      for (std::size_t i = 0; i < prev_k.size(); ++i) next[i + k] += prev_k[i];
      row[k] = std::move(next);
    }
  }
  return row[m];
}

}  // namespace detail

/// Mann-Whitney U for sample `a` against `b` (statistic = pairs with a > b,
/// ties count 1/2). Exact null distribution when min(n1, n2) <= 8 and there
/// are no ties; otherwise the tie-corrected normal approximation with
/// continuity correction. Two-sided. Effect size is U / (n1 n2).
inline TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DegenerateInputError("Mann-Whitney needs two non-empty samples");
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);
  double r1 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r1 += ranks[i];
  const double u = r1 - n1 * (n1 + 1.0) / 2.0;

  TestResult res;
  res.statistic = u;
  res.n = {a.size(), b.size()};
  res.effect_size = u / (n1 * n2);

  const double ties = tie_term(pooled);
  if (std::min(a.size(), b.size()) <= 8 && ties == 0.0) {
    const auto counts = detail::mann_whitney_null_counts(a.size(), b.size());
    const auto ui = static_cast<std::size_t>(std::llround(u));
    double total = 0.0, lower = 0.0, upper = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      total += counts[i];
      if (i <= ui) lower += counts[i];
      if (i >= ui) upper += counts[i];
    }
    res.p_value = clamp_probability(2.0 * std::min(lower, upper) / total);
    return res;
  }

  const double n = n1 + n2;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (var <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  const double z = std::max(std::fabs(u - mu) - 0.5, 0.0) / std::sqrt(var);
  res.p_value = normal_two_sided(z);
  return res;
}

// --- classification / calibration ---------------------------------------------

/// P(score of a random positive > score of a random negative), ties 1/2.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DomainError("labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DegenerateInputError("ROC AUC needs both classes present");
  const auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    if (labels[i] == 1) rank_sum += ranks[i];
  const double np = static_cast<double>(pos);
  const double nn = static_cast<double>(neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double brier(std::span<const double> probabilities, std::span<const int> outcomes) {
  if (probabilities.size() != outcomes.size()) {
    throw DomainError("probabilities and outcomes differ in length");
  }
  if (probabilities.empty()) throw DegenerateInputError("Brier score of empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0, 1]");
    if (outcomes[i] != 0 && outcomes[i] != 1) throw DomainError("outcomes must be 0 or 1");
    const double d = p - outcomes[i];
    s += d * d;
  }
  return s / static_cast<double>(probabilities.size());
}

// --- score agreement ----------------------------------------------------------

/// Mean of the samples rounded to the nearest integer (halves away from
/// zero), then clamped to the rubric range. Integer arithmetic only.
inline int rounded_mean_score(std::span<const int> samples, const EssaySetSpec& spec) {
  if (samples.empty()) throw DegenerateInputError("no samples to average");
  std::int64_t sum = 0;
  for (int s : samples) sum += s;
  const auto k = static_cast<std::int64_t>(samples.size());
  const std::int64_t mag = (2 * (sum < 0 ? -sum : sum) + k) / (2 * k);
  const auto rounded = static_cast<int>(sum < 0 ? -mag : mag);
  return std::clamp(rounded, spec.score_min, spec.score_max);
}

struct AccuracyResult {
  double accuracy = 0.0;
  std::size_t matched = 0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // responses with no valid samples
};

inline AccuracyResult exact_match_accuracy(const std::vector<std::vector<int>>& llm_scores,
                                           std::span<const int> human,
                                           const EssaySetSpec& spec) {
  if (llm_scores.size() != human.size()) {
    throw DomainError("per-response samples and human scores differ in length");
  }
  AccuracyResult res;
  for (std::size_t i = 0; i < human.size(); ++i) {
    if (llm_scores[i].empty()) {
      ++res.excluded;
      continue;
    }
    ++res.used;
    if (rounded_mean_score(llm_scores[i], spec) == human[i]) ++res.matched;
  }
  if (res.used == 0) throw DegenerateInputError("no responses with valid samples");
  res.accuracy = static_cast<double>(res.matched) / static_cast<double>(res.used);
  return res;
}

}  // namespace entropy_triage::stats
