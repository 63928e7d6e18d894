#include "comeback/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "comeback/errors.hpp"
#include "comeback/parallel.hpp"

namespace comeback::stats {

namespace {

constexpr std::size_t kBootstrapShard = 256;

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

void require_non_empty(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ParameterError("samples must be non-empty");
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::WelchT: return "welch_t";
    case Method::MWU: return "mann_whitney_u";
    case Method::KS: return "ks";
    case Method::LogRank: return "log_rank";
  }
  return "";
}

double mean(std::span<const double> x) {
  if (x.empty()) throw ParameterError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw ParameterError("variance needs at least two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ParameterError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

TestResult welch_t(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) {
    throw ParameterError("Welch t-test needs at least two values per sample");
  }
  TestResult r;
  r.method = Method::WelchT;
  r.n1 = x.size();
  r.n2 = y.size();
  const double mx = mean(x), my = mean(y);
  const double vx = sample_variance(x) / static_cast<double>(x.size());
  const double vy = sample_variance(y) / static_cast<double>(y.size());
  const double se2 = vx + vy;
  r.effect = cohens_d(x, y);
  if (se2 == 0.0) {
    if (mx == my) {
      r.statistic = 0.0;
      r.p_value = 1.0;
      return r;
    }
    throw NumericError("Welch t-test with zero variance in both samples");
  }
  r.statistic = (mx - my) / std::sqrt(se2);
  const double df = se2 * se2 /
                    (vx * vx / static_cast<double>(x.size() - 1) +
                     vy * vy / static_cast<double>(y.size() - 1));
  r.df = df;
  const boost::math::students_t dist(df);
  r.p_value = clamp01(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))));
  return r;
}

double mann_whitney_exact_p(double u, std::size_t n1, std::size_t n2) {
  if (n1 == 0 || n2 == 0) throw ParameterError("exact U needs non-empty samples");
  const std::size_t max_u = n1 * n2;
  // counts[m][n] holds the frequency of each U over arrangements of m x's
  // and n y's; built up with N(u; m, n) = N(u - n; m - 1, n) + N(u; m, n - 1).
  std::vector<std::vector<std::vector<double>>> counts(
      n1 + 1, std::vector<std::vector<double>>(n2 + 1));
  for (std::size_t m = 0; m <= n1; ++m) {
    for (std::size_t n = 0; n <= n2; ++n) {
      auto& cell = counts[m][n];
      cell.assign(m * n + 1, 0.0);
      if (m == 0 || n == 0) {
        cell[0] = 1.0;
        continue;
      }
      const auto& drop_x = counts[m - 1][n];
      const auto& drop_y = counts[m][n - 1];
      for (std::size_t k = 0; k < drop_x.size(); ++k) cell[k + n] += drop_x[k];
      for (std::size_t k = 0; k < drop_y.size(); ++k) cell[k] += drop_y[k];
    }
  }
  const auto& dist = counts[n1][n2];
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  const auto k = static_cast<std::size_t>(std::llround(std::clamp(u, 0.0, static_cast<double>(max_u))));
  double lower = 0.0, upper = 0.0;
  for (std::size_t i = 0; i <= max_u; ++i) {
    if (i <= k) lower += dist[i];
    if (i >= k) upper += dist[i];
  }
  return clamp01(2.0 * std::min(lower, upper) / total);
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          std::size_t exact_threshold) {
  require_non_empty(x, y);
  TestResult r;
  r.method = Method::MWU;
  r.n1 = x.size();
  r.n2 = y.size();
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  const double rank_sum_x = std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(x.size()), 0.0);
  r.statistic = rank_sum_x - n1 * (n1 + 1.0) / 2.0;
  r.effect = cliffs_delta(x, y);

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (t > 1.0) ties = true;
    tie_term += t * t * t - t;
    i = j;
  }

  if (!ties && x.size() + y.size() <= exact_threshold) {
    r.exact = true;
    r.p_value = mann_whitney_exact_p(r.statistic, x.size(), y.size());
    return r;
  }
  const double n = n1 + n2;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(r.statistic - mu) - 0.5) / std::sqrt(var);
  r.p_value = clamp01(std::erfc(z / std::numbers::sqrt2));
  return r;
}

double ks_statistic(std::span<const double> x, std::span<const double> y) {
  require_non_empty(x, y);
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  return d;
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    // Jacobi-transformed series converges fast for small lambda.
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * pi * pi / (8.0 * lambda * lambda));
      sum += term;
      if (term < 1e-18) break;
    }
    return clamp01(1.0 - std::sqrt(2.0 * pi) / lambda * sum);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return clamp01(2.0 * sum);
}

TestResult ks_test(std::span<const double> x, std::span<const double> y) {
  TestResult r;
  r.method = Method::KS;
  r.n1 = x.size();
  r.n2 = y.size();
  r.statistic = ks_statistic(x, y);
  r.effect = r.statistic;
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
  const double en = std::sqrt(n1 * n2 / (n1 + n2));
  r.p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * r.statistic);
  return r;
}

std::optional<double> cohens_d(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) return std::nullopt;
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
  const double pooled =
      std::sqrt(((n1 - 1.0) * sample_variance(x) + (n2 - 1.0) * sample_variance(y)) /
                (n1 + n2 - 2.0));
  const double diff = mean(x) - mean(y);
  if (pooled == 0.0) return std::nullopt;
  return diff / pooled;
}

double cliffs_delta(std::span<const double> x, std::span<const double> y) {
  require_non_empty(x, y);
  std::vector<double> sorted_y(y.begin(), y.end());
  std::sort(sorted_y.begin(), sorted_y.end());
  double greater = 0.0, less = 0.0;
  for (double v : x) {
    less += static_cast<double>(sorted_y.end() - std::upper_bound(sorted_y.begin(), sorted_y.end(), v));
    greater += static_cast<double>(std::lower_bound(sorted_y.begin(), sorted_y.end(), v) - sorted_y.begin());
  }
  return (greater - less) / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

EffectSizes effect_sizes(std::span<const double> x, std::span<const double> y) {
  return {cohens_d(x, y), cliffs_delta(x, y)};
}

BootstrapCI bootstrap_mean_diff_ci(std::span<const double> x, std::span<const double> y,
                                   std::size_t n_resamples, double confidence,
                                   std::uint64_t seed, unsigned threads) {
  require_non_empty(x, y);
  if (n_resamples == 0) throw ParameterError("bootstrap needs at least one resample");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ParameterError("confidence must lie in (0, 1)");
  }
  BootstrapCI ci;
  ci.mean_diff = mean(x) - mean(y);
  ci.n_resamples = n_resamples;
  ci.confidence = confidence;
  ci.seed = seed;

  std::vector<double> diffs(n_resamples);
  const std::size_t shards = (n_resamples + kBootstrapShard - 1) / kBootstrapShard;
  parallel_for(shards, threads, [&](std::size_t shard) {
    std::mt19937_64 rng(derive_seed(seed, shard));
    std::uniform_int_distribution<std::size_t> pick_x(0, x.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_y(0, y.size() - 1);
    const std::size_t lo = shard * kBootstrapShard;
    const std::size_t hi = std::min(n_resamples, lo + kBootstrapShard);
    for (std::size_t r = lo; r < hi; ++r) {
      double sx = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) sx += x[pick_x(rng)];
      for (std::size_t i = 0; i < y.size(); ++i) sy += y[pick_y(rng)];
      diffs[r] = sx / static_cast<double>(x.size()) - sy / static_cast<double>(y.size());
    }
  });
  std::sort(diffs.begin(), diffs.end());
  const double tail = (1.0 - confidence) / 2.0;
  ci.lo = quantile_sorted(diffs, tail);
  ci.hi = quantile_sorted(diffs, 1.0 - tail);
  ci.contains_point_estimate = ci.lo <= ci.mean_diff && ci.mean_diff <= ci.hi;
  return ci;
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ParameterError("correlation inputs differ in length");
  if (x.size() < 2) return std::nullopt;
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ParameterError("correlation inputs differ in length");
  if (x.size() < 3) throw ParameterError("Spearman correlation needs at least three pairs");
  const auto rx = midranks(x), ry = midranks(y);
  return pearson(rx, ry);
}

std::optional<double> partial_spearman(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> z) {
  if (x.size() != z.size()) throw ParameterError("correlation inputs differ in length");
  const auto rxy = spearman(x, y), rxz = spearman(x, z), ryz = spearman(y, z);
  if (!rxy || !rxz || !ryz) return std::nullopt;
  const double denom = (1.0 - *rxz * *rxz) * (1.0 - *ryz * *ryz);
  if (!(denom > 1e-15)) return std::nullopt;
  return std::clamp((*rxy - *rxz * *ryz) / std::sqrt(denom), -1.0, 1.0);
}

BHResult benjamini_hochberg(std::span<const double> p_values, double alpha) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p-values must lie in [0, 1]");
  }
  BHResult out;
  out.rejected.assign(m, false);
  out.adjusted.assign(m, 1.0);
  if (m == 0) return out;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  const double md = static_cast<double>(m);
  std::size_t k_star = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    if (p_values[order[k - 1]] <= static_cast<double>(k) * alpha / md) k_star = k;
  }
  for (std::size_t k = 1; k <= k_star; ++k) out.rejected[order[k - 1]] = true;
  double running = 1.0;
  for (std::size_t k = m; k >= 1; --k) {
    running = std::min(running, p_values[order[k - 1]] * (md / static_cast<double>(k)));
    out.adjusted[order[k - 1]] = running;
  }
  return out;
}

double SurvivalCurve::at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

SurvivalCurve kaplan_meier(std::span<const double> durations,
                           const std::vector<bool>& event_flags) {
  if (durations.size() != event_flags.size()) {
    throw ParameterError("durations and event flags differ in length");
  }
  for (double d : durations) {
    if (!(d > 0.0)) throw ParameterError("durations must be positive");
  }
  std::vector<std::size_t> order(durations.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return durations[a] < durations[b]; });
  SurvivalCurve curve;
  std::size_t at_risk = durations.size();
  double s = 1.0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = durations[order[i]];
    std::size_t events = 0, censored = 0, j = i;
    while (j < order.size() && durations[order[j]] == t) {
      if (event_flags[order[j]]) {
        ++events;
      } else {
        ++censored;
      }
      ++j;
    }
    s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
    curve.times.push_back(t);
    curve.survival.push_back(s);
    curve.at_risk.push_back(at_risk);
    curve.events.push_back(events);
    curve.censored.push_back(censored);
    at_risk -= events + censored;
    i = j;
  }
  return curve;
}

TestResult log_rank(const SurvivalSample& a, const SurvivalSample& b) {
  if (a.durations.empty() || b.durations.empty()) {
    throw ParameterError("log-rank needs two non-empty groups");
  }
  if (a.durations.size() != a.events.size() || b.durations.size() != b.events.size()) {
    throw ParameterError("durations and event flags differ in length");
  }
  struct Obs {
    double t;
    bool event;
    bool in_a;
  };
  std::vector<Obs> obs;
  for (std::size_t i = 0; i < a.durations.size(); ++i) obs.push_back({a.durations[i], a.events[i], true});
  for (std::size_t i = 0; i < b.durations.size(); ++i) obs.push_back({b.durations[i], b.events[i], false});
  std::sort(obs.begin(), obs.end(), [](const Obs& l, const Obs& r) { return l.t < r.t; });

  double n_a = static_cast<double>(a.durations.size());
  double n_b = static_cast<double>(b.durations.size());
  double observed = 0.0, expected = 0.0, variance = 0.0;
  for (std::size_t i = 0; i < obs.size();) {
    std::size_t j = i;
    double d_a = 0.0, d_b = 0.0, c_a = 0.0, c_b = 0.0;
    while (j < obs.size() && obs[j].t == obs[i].t) {
      if (obs[j].event) {
        (obs[j].in_a ? d_a : d_b) += 1.0;
      } else {
        (obs[j].in_a ? c_a : c_b) += 1.0;
      }
      ++j;
    }
    const double d = d_a + d_b;
    const double n = n_a + n_b;
    if (d > 0.0) {
      observed += d_a;
      expected += d * n_a / n;
      if (n > 1.0) variance += d * (n_a / n) * (n_b / n) * (n - d) / (n - 1.0);
    }
    n_a -= d_a + c_a;
    n_b -= d_b + c_b;
    i = j;
  }
  TestResult r;
  r.method = Method::LogRank;
  r.n1 = a.durations.size();
  r.n2 = b.durations.size();
  r.effect = observed - expected;
  if (!(variance > 0.0)) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.statistic = (observed - expected) * (observed - expected) / variance;
  const boost::math::chi_squared dist(1.0);
  r.p_value = clamp01(boost::math::cdf(boost::math::complement(dist, r.statistic)));
  return r;
}

}  // namespace comeback::stats
