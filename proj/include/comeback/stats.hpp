#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace comeback::stats {

enum class Method { WelchT, MWU, KS, LogRank };
std::string_view to_string(Method m);

struct TestResult {
  Method method = Method::WelchT;
  double statistic = 0.0;
  double p_value = 1.0;
  std::optional<double> effect;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool exact = false;        // MWU: p from the exact permutation distribution
  std::optional<double> df;  // Welch: Satterthwaite degrees of freedom
};

// Two-sided Welch t-test; effect is Cohen's d.
TestResult welch_t(std::span<const double> x, std::span<const double> y);

// Two-sided Mann-Whitney U. statistic is U for x (pairs x > y, ties 0.5);
// effect is Cliff's delta. Exact when n1 + n2 <= exact_threshold and there
// are no ties; otherwise normal approximation with tie and continuity
// corrections.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          std::size_t exact_threshold = 12);

// Exact two-sided p for U with sample sizes (n1, n2) and no ties.
double mann_whitney_exact_p(double u, std::size_t n1, std::size_t n2);

// Two-sample Kolmogorov-Smirnov; effect is D.
TestResult ks_test(std::span<const double> x, std::span<const double> y);
double ks_statistic(std::span<const double> x, std::span<const double> y);
// Survival function of the Kolmogorov distribution.
double kolmogorov_q(double lambda);

struct EffectSizes {
  std::optional<double> cohens_d;
  double cliffs_delta = 0.0;
};

EffectSizes effect_sizes(std::span<const double> x, std::span<const double> y);
std::optional<double> cohens_d(std::span<const double> x, std::span<const double> y);
double cliffs_delta(std::span<const double> x, std::span<const double> y);

struct BootstrapCI {
  double mean_diff = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_resamples = 0;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  bool contains_point_estimate = true;
};

// Percentile interval for mean(x) - mean(y). Resamples are drawn in fixed
// shards with derived seeds, so the result does not depend on `threads`.
BootstrapCI bootstrap_mean_diff_ci(std::span<const double> x, std::span<const double> y,
                                   std::size_t n_resamples = 10000,
                                   double confidence = 0.95, std::uint64_t seed = 0,
                                   unsigned threads = 1);

// Midranks (1-based), ties share the average rank.
std::vector<double> midranks(std::span<const double> values);
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);
std::optional<double> partial_spearman(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> z);

struct BHResult {
  std::vector<bool> rejected;
  std::vector<double> adjusted;
};

BHResult benjamini_hochberg(std::span<const double> p_values, double alpha = 0.05);

struct SurvivalCurve {
  std::vector<double> times;       // distinct observed times, ascending
  std::vector<double> survival;    // S(t) just after each time
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> events;
  std::vector<std::size_t> censored;

  // Step-function value at t (1 before the first time).
  double at(double t) const;
};

SurvivalCurve kaplan_meier(std::span<const double> durations,
                           const std::vector<bool>& event_flags);

struct SurvivalSample {
  std::vector<double> durations;
  std::vector<bool> events;
};

// One-degree-of-freedom log-rank test. effect holds observed minus expected
// events in group A (negative: A survives longer than expected).
TestResult log_rank(const SurvivalSample& group_a, const SurvivalSample& group_b);

double mean(std::span<const double> x);
double sample_variance(std::span<const double> x);
// Type-7 (linear interpolation) quantile of a sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace comeback::stats
