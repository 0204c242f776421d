#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "entropy_triage/stats.hpp"
#include "fixtures.hpp"

using namespace entropy_triage;
using namespace entropy_triage::stats;

namespace {

using Vec = std::vector<double>;

// Reference values below were computed once with mpmath at 40 digits (special
// functions) or scipy/statsmodels (tests), then frozen.
struct BetaPoint { double a, b, x, expected; };
struct GammaPoint { double a, x, p; };

// Pair counting: number of (i, j) with a_i > b_j, ties 1/2.
double brute_u(const Vec& a, const Vec& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

double brute_auc(const Vec& s, const std::vector<int>& l) {
  Vec pos, neg;
  for (std::size_t i = 0; i < s.size(); ++i) (l[i] ? pos : neg).push_back(s[i]);
  return brute_u(pos, neg) / static_cast<double>(pos.size() * neg.size());
}

double simple_pearson(const Vec& x, const Vec& y) {
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

// --- special functions -----------------------------------------------------

TEST(SpecialFunctions, IncompleteBetaReferencePoints) {
  const BetaPoint pts[] = {
      {0.5, 0.5, 0.3, 0.36901011956554538},  {2, 3, 0.4, 0.5248},
      {10, 10, 0.5, 0.5},                     {1, 1, 0.37, 0.37},
      {5, 0.5, 0.9, 0.31664291502001231},    {0.5, 5, 0.01, 0.2428418908984375},
      {50, 40, 0.6, 0.80115341797448862},    {2.5, 7.5, 0.2, 0.40123869824719163}};
  for (const auto& p : pts) {
    EXPECT_NEAR(incomplete_beta(p.a, p.b, p.x), p.expected, 1e-12)
        << "I_" << p.x << "(" << p.a << ", " << p.b << ")";
  }
  EXPECT_EQ(incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1.0), 1.0);
  EXPECT_THROW(incomplete_beta(0, 1, 0.5), DomainError);
  EXPECT_THROW(incomplete_beta(1, 1, 1.5), DomainError);
}

TEST(SpecialFunctions, IncompleteGammaReferencePoints) {
  const GammaPoint pts[] = {{0.5, 0.5, 0.6826894921370859},   {1, 2, 0.86466471676338731},
                            {3, 2.5, 0.45618688411667048},    {10, 12, 0.75760783832948765},
                            {2.5, 0.1, 0.00088613878881244261}, {20, 35, 0.99767549339215791}};
  for (const auto& p : pts) {
    EXPECT_NEAR(gamma_p(p.a, p.x), p.p, 1e-12) << "P(" << p.a << ", " << p.x << ")";
    EXPECT_NEAR(gamma_q(p.a, p.x), 1.0 - p.p, 1e-12);
  }
  EXPECT_NEAR(gamma_q(20, 35), 0.0023245066078420914, 1e-15);
}

TEST(SpecialFunctions, DistributionTails) {
  EXPECT_NEAR(chi_squared_cdf(3.841, 1), 0.95, 1e-4);
  EXPECT_NEAR(chi_squared_cdf(3.841, 1), 0.9499863162360433, 1e-12);
  EXPECT_NEAR(chi_squared_upper_tail(7.2, 2), std::exp(-3.6), 1e-14);
  EXPECT_NEAR(student_t_two_sided(2.0, 10), 0.073388034770740375, 1e-12);
  EXPECT_NEAR(student_t_two_sided(3.0, 3), 0.057668885622437309, 1e-12);
  EXPECT_NEAR(student_t_two_sided(0.5, 1), 0.70483276469913349, 1e-12);
  EXPECT_NEAR(student_t_two_sided(1.96, 1e6), 0.049996067582829364, 1e-10);
  EXPECT_NEAR(f_upper_tail(54, 1, 4), 0.0018262606682599832, 1e-14);
  EXPECT_NEAR(f_upper_tail(3.5, 2, 20), 0.04973502207609711, 1e-12);
  EXPECT_NEAR(normal_two_sided(1.959963984540054), 0.05, 1e-12);
  EXPECT_EQ(f_upper_tail(0.0, 2, 3), 1.0);
  EXPECT_EQ(student_t_two_sided(0.0, 5), 1.0);
}

TEST(SpecialFunctions, BetaSymmetryAndMonotonicity) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> ab(0.2, 40.0), u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const double a = ab(gen), b = ab(gen), x = u(gen);
    EXPECT_NEAR(incomplete_beta(a, b, x) + incomplete_beta(b, a, 1.0 - x), 1.0, 1e-10);
    const double lo = incomplete_beta(a, b, x * 0.9), hi = incomplete_beta(a, b, x);
    EXPECT_LE(lo, hi + 1e-14);
  }
}

// --- correlations ----------------------------------------------------------

TEST(Pearson, Examples) {
  const Vec x = {1, 2, 3, 4, 5};
  EXPECT_NEAR(pearson(x, x).statistic, 1.0, 1e-15);
  EXPECT_NEAR(pearson(Vec{1, 2, 3}, Vec{3, 2, 1}).statistic, -1.0, 1e-15);
  // Hand evaluation: Sxy = 10, Sxx = 10, Syy = 14.8.
  const auto r = pearson(x, Vec{2, 1, 4, 3, 6});
  EXPECT_NEAR(r.statistic, 10.0 / std::sqrt(148.0), 1e-12);
  EXPECT_NEAR(r.statistic, 0.82199493652678644, 1e-12);
  EXPECT_NEAR(r.p_value, 0.08770664700806553, 1e-10);
  EXPECT_EQ(r.n, std::vector<std::size_t>{5});
}

TEST(Pearson, DegenerateInputs) {
  EXPECT_THROW(pearson(Vec{1, 1, 1}, Vec{1, 2, 3}), DegenerateInputError);
  EXPECT_THROW(pearson(Vec{1, 2}, Vec{1, 2}), DegenerateInputError);
  EXPECT_ANY_THROW(pearson(Vec{1, 2, 3}, Vec{1, 2}));
}

TEST(Pearson, SymmetricAndAffineInvariant) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    Vec x(30), y(30);
    for (int i = 0; i < 30; ++i) {
      x[i] = nd(gen);
      y[i] = 0.5 * x[i] + nd(gen);
    }
    const double r = pearson(x, y).statistic;
    EXPECT_NEAR(pearson(y, x).statistic, r, 1e-12);
    Vec x2 = x;
    for (auto& v : x2) v = 3.0 * v - 7.0;
    EXPECT_NEAR(pearson(x2, y).statistic, r, 1e-12);
    EXPECT_NEAR(r, simple_pearson(x, y), 1e-12);
    const double p = pearson(x, y).p_value;
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

TEST(Spearman, Examples) {
  EXPECT_NEAR(spearman(Vec{1, 2, 3}, Vec{1, 3, 2}).statistic, 0.5, 1e-15);
  const Vec x = {0.3, 1.2, -4, 8, 2.5};
  Vec ex;
  for (double v : x) ex.push_back(std::exp(v));
  EXPECT_NEAR(spearman(x, ex).statistic, 1.0, 1e-15);
  EXPECT_THROW(spearman(Vec{1, 2, 3}, Vec{4, 4, 4}), DegenerateInputError);
}

TEST(Spearman, AverageRanksForTies) {
  EXPECT_EQ(average_ranks(Vec{10, 20, 20, 5}), (Vec{2, 3.5, 3.5, 1}));
  // scipy.stats.spearmanr([1,2,2,3],[1,3,2,4]) = 0.9486832980505138
  EXPECT_NEAR(spearman(Vec{1, 2, 2, 3}, Vec{1, 3, 2, 4}).statistic, 0.9486832980505138, 1e-12);
}

TEST(PartialCorrelation, NoCovariatesEqualsPearson) {
  const Vec x = {1, 2, 3, 4, 5, 6}, y = {2, 1, 4, 3, 7, 5};
  const auto a = partial_correlation(x, y, {});
  const auto b = pearson(x, y);
  EXPECT_EQ(a.statistic, b.statistic);
  EXPECT_EQ(a.p_value, b.p_value);
}

TEST(PartialCorrelation, MatchesNormalEquationsOracle) {
  const Vec x = {1, 2, 3, 4, 5, 6}, y = {2, 1, 4, 3, 7, 5}, z = {1, 1, 2, 3, 5, 8};
  // Oracle: solve the 2x2 normal equations for [1, z] by Cramer's rule.
  auto residual = [&](const Vec& v) {
    double n = 6, sz = 0, szz = 0, sv = 0, szv = 0;
    for (int i = 0; i < 6; ++i) {
      sz += z[i];
      szz += z[i] * z[i];
      sv += v[i];
      szv += z[i] * v[i];
    }
    const double det = n * szz - sz * sz;
    const double b0 = (sv * szz - sz * szv) / det;
    const double b1 = (n * szv - sz * sv) / det;
    Vec r(6);
    for (int i = 0; i < 6; ++i) r[i] = v[i] - b0 - b1 * z[i];
    return r;
  };
  const double oracle = simple_pearson(residual(x), residual(y));
  const auto res = partial_correlation(x, y, {z});
  EXPECT_NEAR(res.statistic, oracle, 1e-12);
  EXPECT_NEAR(res.statistic, 0.4387836828460583, 1e-12);
  EXPECT_NEAR(res.p_value, 0.4598074526189137, 1e-10);
  EXPECT_EQ(res.df, std::vector<double>{3.0});
  // The partial-correlation test and the OLS coefficient test are the same test.
  Design d;
  d.add("intercept", Vec(6, 1.0));
  d.add("x", x);
  d.add("z", z);
  EXPECT_NEAR(ols(d, y).p_values[1], res.p_value, 1e-10);
}

TEST(PartialCorrelation, FullyExplainedAndSingular) {
  const Vec x = {1, 2, 3, 4, 5, 6}, y = {2, 1, 4, 3, 7, 5};
  EXPECT_THROW(partial_correlation(x, y, {y}), DegenerateInputError);
  EXPECT_THROW(partial_correlation(x, y, {Vec{1, 2, 1, 2, 1, 2}, Vec{2, 4, 2, 4, 2, 4}}),
               SingularityError);
}

// --- least squares -----------------------------------------------------------

TEST(Ols, MatchesStatsmodelsReference) {
  Design d;
  d.add("intercept", Vec(6, 1.0));
  d.add("x", {1, 2, 3, 4, 5, 6});
  d.add("z", {1, 1, 2, 3, 5, 8});
  const auto fit = ols(d, Vec{2, 1, 4, 3, 7, 5});
  const Vec coef = {0.375, 1.0, -0.0625}, se = {1.97973752, 1.18236564, 0.80951042},
            p = {0.86185547, 0.45980745, 0.94331966};
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(fit.coefficients[j], coef[j], 1e-12);
    EXPECT_NEAR(fit.standard_errors[j], se[j], 1e-8);
    EXPECT_NEAR(fit.p_values[j], p[j], 1e-8);
  }
  EXPECT_EQ(fit.residual_df, 3u);
}

TEST(Ols, RankDeficientDesignThrows) {
  Design d;
  d.add("intercept", Vec(4, 1.0));
  d.add("a", {1, 0, 1, 0});
  d.add("b", {0, 1, 0, 1});
  EXPECT_THROW(ols(d, Vec{1, 2, 3, 4}), SingularityError);
}

// --- group tests -------------------------------------------------------------

TEST(Anova, Examples) {
  const auto same = anova_oneway({{1, 2, 3}, {1, 2, 3}});
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  const auto r = anova_oneway({{1, 2, 3}, {7, 8, 9}});
  EXPECT_NEAR(r.statistic, 54.0, 1e-12);
  EXPECT_NEAR(r.p_value, 0.0018262606682599832, 1e-12);
  EXPECT_EQ(r.df, (std::vector<double>{1, 4}));
  EXPECT_THROW(anova_oneway({{1, 2}, {3}}), DegenerateInputError);
  EXPECT_THROW(anova_oneway({{1, 2}}), DegenerateInputError);
}

TEST(Anova, PlantedMeansAreSeparated) {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> nd(0.0, 0.1);
  std::vector<Vec> g(3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 50; ++i) g[k].push_back(k + nd(gen));
  EXPECT_LT(anova_oneway(g).p_value, 1e-10);
}

TEST(Anova, TwoGroupsFEqualsPooledTSquared) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    Vec a(5 + t % 7), b(4 + t % 5);
    for (auto& v : a) v = nd(gen);
    for (auto& v : b) v = nd(gen) + 0.5;
    const double ma = mean(a), mb = mean(b);
    double ss = 0;
    for (double v : a) ss += (v - ma) * (v - ma);
    for (double v : b) ss += (v - mb) * (v - mb);
    const double na = a.size(), nb = b.size();
    const double sp2 = ss / (na + nb - 2);
    const double tstat = (ma - mb) / std::sqrt(sp2 * (1 / na + 1 / nb));
    const auto f = anova_oneway({a, b});
    EXPECT_NEAR(f.statistic, tstat * tstat, 1e-9 * std::max(1.0, f.statistic));
    EXPECT_NEAR(f.p_value, student_t_two_sided(tstat, na + nb - 2), 1e-10);
  }
}

TEST(KruskalWallis, Examples) {
  EXPECT_NEAR(kruskal_wallis({{1, 2, 3}, {1, 2, 3}}).statistic, 0.0, 1e-12);
  const auto r = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  EXPECT_NEAR(r.statistic, 7.2, 1e-12);
  ASSERT_TRUE(r.effect_size.has_value());
  EXPECT_NEAR(*r.effect_size, (7.2 - 2.0) / 6.0, 1e-12);
  EXPECT_NEAR(*r.effect_size, 0.8667, 1e-4);
  EXPECT_NEAR(r.p_value, 0.02732372244729252, 1e-12);
  EXPECT_THROW(kruskal_wallis({{2, 2, 2}, {2, 2}}), DegenerateInputError);
}

TEST(KruskalWallis, TieCorrectionMatchesScipy) {
  // scipy.stats.kruskal([1,2,2,3],[2,3,3,4],[4,4,5]) -> H=6.786858974358972, p=0.03359327142821076
  const auto r = kruskal_wallis({{1, 2, 2, 3}, {2, 3, 3, 4}, {4, 4, 5}});
  EXPECT_NEAR(r.statistic, 6.786858974358972, 1e-12);
  EXPECT_NEAR(r.p_value, 0.03359327142821076, 1e-12);
}

TEST(MannWhitney, Examples) {
  EXPECT_EQ(mann_whitney_u(Vec{1, 2, 3}, Vec{4, 5, 6}).statistic, 0.0);
  EXPECT_EQ(mann_whitney_u(Vec{4, 5, 6}, Vec{1, 2, 3}).statistic, 9.0);
  EXPECT_EQ(mann_whitney_u(Vec{1, 3}, Vec{2}).statistic, 1.0);
  EXPECT_NEAR(mann_whitney_u(Vec{1, 2, 3}, Vec{4, 5, 6}).p_value, 0.1, 1e-12);
  EXPECT_NEAR(mann_whitney_u(Vec{1, 3}, Vec{2}).p_value, 1.0, 1e-12);
  const auto same = mann_whitney_u(Vec{1, 2, 3, 4}, Vec{1, 2, 3, 4});
  EXPECT_NEAR(same.p_value, 1.0, 1e-12);
  EXPECT_THROW(mann_whitney_u(Vec{}, Vec{1}), DegenerateInputError);
}

TEST(MannWhitney, MatchesScipyInEachMode) {
  // exact (min size 8, no ties)
  EXPECT_NEAR(mann_whitney_u(Vec{1.5, 2.5, 3.5, 9, 10, 11, 12, 13},
                             Vec{4, 5, 6, 7, 8, 14, 15, 16, 17, 18})
                  .p_value,
              0.20307143836555602, 1e-12);
  // normal approximation with continuity correction (both sizes > 8)
  const auto big = mann_whitney_u(Vec{1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                                  Vec{2.5, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20});
  EXPECT_EQ(big.statistic, 8.0);
  EXPECT_NEAR(big.p_value, 0.001058748516937273, 1e-12);
  // ties force the tie-corrected approximation
  const auto tied = mann_whitney_u(Vec{1, 2, 2, 3, 3, 3}, Vec{2, 3, 4, 4, 5});
  EXPECT_EQ(tied.statistic, 5.5);
  EXPECT_NEAR(tied.p_value, 0.08871369199677616, 1e-12);
}

TEST(MannWhitney, ExactNullMatchesEnumeration) {
  for (std::size_t m = 1; m <= 5; ++m) {
    for (std::size_t n = 1; n <= 5; ++n) {
      // Enumerate every m-subset of {0..m+n-1} as the ranks of sample a.
      std::vector<double> counts(m * n + 1, 0.0);
      for (unsigned mask = 0; mask < (1u << (m + n)); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != m) continue;
        std::size_t u = 0;
        for (std::size_t i = 0; i < m + n; ++i)
          for (std::size_t j = 0; j < m + n; ++j)
            if ((mask >> i & 1u) && !(mask >> j & 1u) && i > j) ++u;
        counts[u] += 1.0;
      }
      EXPECT_EQ(stats::detail::mann_whitney_null_counts(m, n), counts) << m << "x" << n;
    }
  }
}

TEST(MannWhitney, StatisticEqualsPairCount) {
  std::mt19937_64 gen(13);
  std::uniform_int_distribution<int> small(0, 6);
  for (int t = 0; t < 200; ++t) {
    Vec a(1 + t % 9), b(1 + t % 11);
    for (auto& v : a) v = small(gen);
    for (auto& v : b) v = small(gen);
    const auto r = mann_whitney_u(a, b);
    EXPECT_DOUBLE_EQ(r.statistic, brute_u(a, b));
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
}

// --- classification and calibration -------------------------------------------

TEST(RocAuc, Examples) {
  EXPECT_EQ(roc_auc(Vec{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(roc_auc(Vec{0.5, 0.5, 0.5, 0.5}, std::vector<int>{0, 1, 0, 1}), 0.5);
  EXPECT_NEAR(roc_auc(Vec{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75, 1e-15);
  EXPECT_THROW(roc_auc(Vec{0.1, 0.2}, std::vector<int>{1, 1}), DegenerateInputError);
}

TEST(RocAuc, ComplementAndMannWhitneyCrossCheck) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 4 + t % 40;
    Vec s(n);
    std::vector<int> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = u(gen);
      l[i] = static_cast<int>(i % 2 == 0 || u(gen) < 0.3);
    }
    l[1] = 0;
    Vec neg_s = s, pos, neg;
    for (auto& v : neg_s) v = -v;
    for (std::size_t i = 0; i < n; ++i) (l[i] ? pos : neg).push_back(s[i]);
    const double auc = roc_auc(s, l);
    EXPECT_NEAR(auc + roc_auc(neg_s, l), 1.0, 1e-12);
    const double u_stat = mann_whitney_u(pos, neg).statistic;
    EXPECT_EQ(auc, u_stat / static_cast<double>(pos.size() * neg.size()));
    EXPECT_NEAR(auc, brute_auc(s, l), 1e-12);
  }
}

TEST(Brier, Examples) {
  EXPECT_EQ(brier(Vec{1, 0, 1}, std::vector<int>{1, 0, 1}), 0.0);
  EXPECT_EQ(brier(Vec{0.5, 0.5}, std::vector<int>{1, 0}), 0.25);
  EXPECT_NEAR(brier(Vec{0.8, 0.3}, std::vector<int>{1, 0}), 0.065, 1e-15);
  EXPECT_THROW(brier(Vec{1.2}, std::vector<int>{1}), DomainError);
  EXPECT_THROW(brier(Vec{-0.1}, std::vector<int>{1}), DomainError);
}

TEST(ExactMatch, RoundingAndAccuracy) {
  const auto spec = fixtures::make_spec(1, 0, 3);
  EXPECT_EQ(rounded_mean_score(std::vector<int>{1, 2}, spec), 2);
  EXPECT_EQ(rounded_mean_score(std::vector<int>{0, 1, 1, 1, 1, 1}, spec), 1);
  EXPECT_EQ(rounded_mean_score(std::vector<int>{0, 1}, spec), 1);
  EXPECT_EQ(rounded_mean_score(std::vector<int>{2, 2, 2}, spec), 2);
  const auto acc = exact_match_accuracy({{2, 2, 2}, {1, 2}, {0, 1, 1, 1, 1, 1}, {3, 3}, {}},
                                        std::vector<int>{2, 2, 1, 0, 1}, spec);
  EXPECT_EQ(acc.used, 4u);
  EXPECT_EQ(acc.matched, 3u);
  EXPECT_EQ(acc.excluded, 1u);
  EXPECT_DOUBLE_EQ(acc.accuracy, 0.75);
}
