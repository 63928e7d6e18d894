#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "comeback/errors.hpp"
#include "comeback/stats.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace comeback;
using namespace comeback::stats;

namespace {

std::vector<double> vec(const nlohmann::json& j) { return j.get<std::vector<double>>(); }
std::vector<bool> flags(const nlohmann::json& j) {
  std::vector<bool> out;
  for (const auto& v : j) out.push_back(v.get<int>() != 0);
  return out;
}

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

// Two-sided p by enumerating every split of the ranks 1..n1+n2.
double brute_exact_p(double u, std::size_t n1, std::size_t n2) {
  const std::size_t n = n1 + n2;
  double lower = 0.0, upper = 0.0, total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != n1) continue;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) rank_sum += static_cast<double>(i + 1);
    }
    const double ui = rank_sum - static_cast<double>(n1 * (n1 + 1)) / 2.0;
    total += 1.0;
    if (ui <= u) lower += 1.0;
    if (ui >= u) upper += 1.0;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

double sup_scan(const std::vector<double>& x, const std::vector<double>& y) {
  double d = 0.0;
  std::vector<double> points = x;
  points.insert(points.end(), y.begin(), y.end());
  for (double v : points) {
    const double fx = static_cast<double>(std::count_if(x.begin(), x.end(), [&](double a) { return a <= v; })) /
                      static_cast<double>(x.size());
    const double fy = static_cast<double>(std::count_if(y.begin(), y.end(), [&](double a) { return a <= v; })) /
                      static_cast<double>(y.size());
    d = std::max(d, std::abs(fx - fy));
  }
  return d;
}

double pair_delta(const std::vector<double>& x, const std::vector<double>& y) {
  long long more = 0, less = 0;
  for (double a : x) {
    for (double b : y) {
      more += a > b;
      less += a < b;
    }
  }
  return static_cast<double>(more - less) / static_cast<double>(x.size() * y.size());
}

std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> integer_sample(std::mt19937_64& rng, std::size_t n, int hi) {
  std::uniform_int_distribution<int> d(0, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("Welch t against the reference fixture") {
    for (const auto& c : testing::fixtures()["welch"]) {
      const auto r = welch_t(vec(c["x"]), vec(c["y"]));
      CHECK(close(r.statistic, c["t"].get<double>(), 1e-9));
      CHECK(std::abs(r.p_value - c["p"].get<double>()) <= 1e-9);
      CHECK(close(r.df.value(), c["df"].get<double>(), 1e-9));
    }
  }

  TEST_CASE("Welch t edge cases") {
    const std::vector<double> x{1.0, 2.0, 3.5, 4.0};
    const auto same = welch_t(x, x);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    CHECK_THROWS_AS(welch_t(std::vector<double>{0, 0, 0, 0}, std::vector<double>{1, 1, 1, 1}), NumericError);
    CHECK_THROWS_AS(welch_t(std::vector<double>{1}, x), ParameterError);
  }

  TEST_CASE("Mann-Whitney examples") {
    const auto r = mann_whitney_u(std::vector<double>{1, 2}, std::vector<double>{3, 4});
    CHECK(r.statistic == 0.0);
    CHECK(r.exact);
    CHECK(r.p_value == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const auto tie = mann_whitney_u(std::vector<double>{5}, std::vector<double>{5});
    CHECK(tie.statistic == 0.5);
    CHECK(tie.effect.value() == 0.0);
  }

  TEST_CASE("Mann-Whitney exact p equals permutation enumeration") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
      std::uniform_int_distribution<int> size(1, 6);
      const std::size_t n1 = static_cast<std::size_t>(size(rng)), n2 = static_cast<std::size_t>(size(rng));
      auto pool = testing::uniform_sample(rng, n1 + n2, -5.0, 5.0);
      const std::vector<double> x(pool.begin(), pool.begin() + static_cast<long>(n1));
      const std::vector<double> y(pool.begin() + static_cast<long>(n1), pool.end());
      const auto r = mann_whitney_u(x, y);
      REQUIRE(r.exact);
      CHECK(std::abs(r.p_value - brute_exact_p(r.statistic, n1, n2)) <= 1e-15);
    }
  }

  TEST_CASE("Mann-Whitney normal approximation against the reference fixture") {
    for (const auto& c : testing::fixtures()["mann_whitney_asymptotic"]) {
      const auto r = mann_whitney_u(vec(c["x"]), vec(c["y"]));
      CHECK_FALSE(r.exact);
      CHECK(r.statistic == c["u"].get<double>());
      CHECK(std::abs(r.p_value - c["p"].get<double>()) <= 1e-9);
    }
  }

  TEST_CASE("Kolmogorov-Smirnov") {
    CHECK(ks_statistic(std::vector<double>{1, 2, 2, 3}, std::vector<double>{2, 3, 1, 2}) == 0.0);
    CHECK(ks_statistic(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
      std::uniform_int_distribution<std::size_t> size(1, 25);
      const auto x = integer_sample(rng, size(rng), 15);
      const auto y = integer_sample(rng, size(rng), 15);
      CHECK(ks_statistic(x, y) == sup_scan(x, y));
    }
    for (const auto& c : testing::fixtures()["ks"]) {
      const auto r = ks_test(vec(c["x"]), vec(c["y"]));
      CHECK(std::abs(r.statistic - c["d"].get<double>()) <= 1e-15);
      CHECK(std::abs(r.p_value - c["p"].get<double>()) <= 1e-9);
    }
    CHECK(kolmogorov_q(0.0) == 1.0);
    CHECK(kolmogorov_q(10.0) < 1e-80);
  }

  TEST_CASE("effect sizes") {
    CHECK(cliffs_delta(std::vector<double>{3, 4}, std::vector<double>{1, 2}) == 1.0);
    const std::vector<double> x{1, 3, 2, 5};
    CHECK(cliffs_delta(x, x) == 0.0);
    CHECK(cohens_d(x, x).value() == 0.0);
    CHECK_FALSE(cohens_d(std::vector<double>{1, 1}, std::vector<double>{1, 1}).has_value());
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
      std::uniform_int_distribution<std::size_t> size(1, 30);
      const auto a = integer_sample(rng, size(rng), 10);
      const auto b = integer_sample(rng, size(rng), 10);
      CHECK(cliffs_delta(a, b) == pair_delta(a, b));
    }
  }

  TEST_CASE("bootstrap interval") {
    const auto fixed = bootstrap_mean_diff_ci(std::vector<double>{5, 5, 5}, std::vector<double>{2, 2, 2});
    CHECK(fixed.mean_diff == 3.0);
    CHECK(fixed.lo == 3.0);
    CHECK(fixed.hi == 3.0);
    const auto zero = bootstrap_mean_diff_ci(std::vector<double>{4, 4}, std::vector<double>{4, 4});
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi == 0.0);
    CHECK_THROWS_AS(bootstrap_mean_diff_ci(std::vector<double>{1}, std::vector<double>{2}, 0), ParameterError);
    CHECK_THROWS_AS(bootstrap_mean_diff_ci(std::vector<double>{1}, std::vector<double>{2}, 10, 1.0), ParameterError);
  }

  TEST_CASE("bootstrap interval excludes zero under a known shift") {
    int excluded = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> n01(0.0, 1.0);
      std::vector<double> y(200), x(200);
      for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = n01(rng);
        x[i] = y[i] + 1.0;
      }
      const auto ci = bootstrap_mean_diff_ci(x, y, 10000, 0.95, seed);
      if (ci.lo > 0.0 || ci.hi < 0.0) ++excluded;
    }
    CHECK(excluded >= 99);
  }

  TEST_CASE("bootstrap does not depend on the thread count") {
    std::mt19937_64 rng(9);
    const auto x = testing::uniform_sample(rng, 150, 0.0, 2.0);
    const auto y = testing::uniform_sample(rng, 120, 0.0, 1.5);
    const auto a = bootstrap_mean_diff_ci(x, y, 5000, 0.9, 42, 1);
    const auto b = bootstrap_mean_diff_ci(x, y, 5000, 0.9, 42, 8);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
  }

  TEST_CASE("Spearman correlation") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(spearman(x, std::vector<double>{2, 4, 8, 16, 32}).value() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(spearman(x, std::vector<double>{9, 7, 5, 1, 0}).value() == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ParameterError);
    CHECK_FALSE(spearman(x, std::vector<double>{3, 3, 3, 3, 3}).has_value());

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const auto a = integer_sample(rng, 20, 8);
      const auto b = integer_sample(rng, 20, 8);
      const auto got = spearman(a, b);
      if (!got) continue;
      CHECK(std::abs(*got - oracle_pearson(oracle_ranks(a), oracle_ranks(b))) <= 1e-12);
    }
    for (const auto& c : testing::fixtures()["spearman"]) {
      CHECK(std::abs(spearman(vec(c["x"]), vec(c["y"])).value() - c["rho"].get<double>()) <= 1e-12);
      CHECK(std::abs(partial_spearman(vec(c["x"]), vec(c["y"]), vec(c["z"])).value() -
                     c["partial"].get<double>()) <= 1e-6);
    }
  }

  TEST_CASE("partial Spearman reduces to Spearman for an unrelated control") {
    const std::vector<double> z{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<std::vector<double>> orthogonal;
    std::vector<double> perm = z;
    do {
      if (std::abs(spearman(perm, z).value()) < 1e-12) orthogonal.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    REQUIRE(orthogonal.size() >= 2);
    const auto& x = orthogonal.front();
    const auto y = *std::find_if(orthogonal.begin(), orthogonal.end(),
                                 [&](const auto& c) { return std::abs(spearman(x, c).value()) > 0.1; });
    CHECK(partial_spearman(x, y, z).value() == doctest::Approx(spearman(x, y).value()).epsilon(1e-12));
    CHECK_FALSE(partial_spearman(x, y, y).has_value());
  }

  TEST_CASE("Benjamini-Hochberg") {
    const auto all = benjamini_hochberg(std::vector<double>{0.01, 0.02, 0.03});
    CHECK(all.rejected == std::vector<bool>{true, true, true});
    CHECK(all.adjusted[0] == doctest::Approx(0.03));
    const auto none = benjamini_hochberg(std::vector<double>{0.9, 0.8});
    CHECK(none.rejected == std::vector<bool>{false, false});
    const auto zeros = benjamini_hochberg(std::vector<double>{0.0, 0.0, 0.0});
    CHECK(zeros.rejected == std::vector<bool>{true, true, true});
    CHECK(zeros.adjusted == std::vector<double>{0.0, 0.0, 0.0});
    CHECK_THROWS_AS(benjamini_hochberg(std::vector<double>{1.5}), ParameterError);

    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
      auto p = testing::uniform_sample(rng, 12, 0.0, 0.2);
      const auto r = benjamini_hochberg(p);
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(r.adjusted[i] >= p[i]);
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (p[i] <= p[j]) CHECK(r.adjusted[i] <= r.adjusted[j]);
        }
        CHECK(r.rejected[i] == (r.adjusted[i] <= 0.05));
      }
    }
  }

  TEST_CASE("Kaplan-Meier product limit") {
    const auto three = kaplan_meier(std::vector<double>{1, 2, 3}, {true, true, true});
    CHECK(std::abs(three.survival[0] - 2.0 / 3.0) <= 1e-12);
    CHECK(std::abs(three.survival[1] - 1.0 / 3.0) <= 1e-12);
    CHECK(three.survival[2] == 0.0);

    const auto censored = kaplan_meier(std::vector<double>{1, 2, 3}, {false, false, false});
    for (double s : censored.survival) CHECK(s == 1.0);

    // 6-MP arm of the Freireich leukemia trial.
    const std::vector<double> t{6, 6, 6, 6, 7, 9, 10, 10, 11, 13, 16, 17, 19, 20, 22, 23, 25, 32, 32, 34, 35};
    const std::vector<bool> e{true, true, true, false, true, false, true, false, false, true, true,
                              false, false, false, true, true, false, false, false, false, false};
    const auto km = kaplan_meier(t, e);
    double s = 18.0 / 21.0;
    CHECK(std::abs(km.at(6) - s) <= 1e-12);
    s *= 16.0 / 17.0;
    CHECK(std::abs(km.at(7) - s) <= 1e-12);
    s *= 14.0 / 15.0;
    CHECK(std::abs(km.at(10) - s) <= 1e-12);
    s *= 11.0 / 12.0;
    CHECK(std::abs(km.at(13) - s) <= 1e-12);
    s *= 10.0 / 11.0;
    CHECK(std::abs(km.at(16) - s) <= 1e-12);
    s *= 6.0 / 7.0;
    CHECK(std::abs(km.at(22) - s) <= 1e-12);
    s *= 5.0 / 6.0;
    CHECK(std::abs(km.at(23) - s) <= 1e-12);
    CHECK(std::abs(km.at(35) - s) <= 1e-12);
    CHECK(km.at(5.9) == 1.0);

    CHECK_THROWS_AS(kaplan_meier(std::vector<double>{0.0}, {true}), ParameterError);
    CHECK_THROWS_AS(kaplan_meier(std::vector<double>{1.0}, {true, false}), ParameterError);
  }

  TEST_CASE("survival against the reference fixture") {
    for (const auto& c : testing::fixtures()["survival"]) {
      const SurvivalSample a{vec(c["durations_a"]), flags(c["events_a"])};
      const SurvivalSample b{vec(c["durations_b"]), flags(c["events_b"])};
      const auto r = log_rank(a, b);
      CHECK(std::abs(r.statistic - c["chi2"].get<double>()) <= 1e-6);
      CHECK(std::abs(r.p_value - c["p"].get<double>()) <= 1e-6);
      const auto km = kaplan_meier(a.durations, a.events);
      const auto times = vec(c["km_times_a"]);
      const auto surv = vec(c["km_survival_a"]);
      for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(km.at(times[i]) - surv[i]) <= 1e-12);
    }
  }

  TEST_CASE("log-rank edge cases") {
    const SurvivalSample g{{1, 2, 3, 4}, {true, false, true, true}};
    const auto same = log_rank(g, g);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);

    SurvivalSample early, late;
    for (int i = 1; i <= 20; ++i) {
      early.durations.push_back(i);
      early.events.push_back(true);
      late.durations.push_back(20 + i);
      late.events.push_back(true);
    }
    const auto sep = log_rank(early, late);
    CHECK(sep.p_value < 0.01);
    CHECK(sep.effect.value() > 0.0);
    CHECK_THROWS_AS(log_rank(SurvivalSample{}, g), ParameterError);
  }

  TEST_CASE("quantiles and moments") {
    const std::vector<double> s{1, 2, 3, 4};
    CHECK(quantile_sorted(s, 0.5) == 2.5);
    CHECK(quantile_sorted(s, 0.0) == 1.0);
    CHECK(quantile_sorted(s, 1.0) == 4.0);
    CHECK(mean(s) == 2.5);
    CHECK(sample_variance(s) == doctest::Approx(5.0 / 3.0));
    CHECK(midranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
  }
}
