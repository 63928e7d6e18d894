#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "comeback/errors.hpp"
#include "comeback/predict.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace comeback;
using namespace comeback::predict;

namespace {

FeatureRow row(std::string id, CohortLabel label, int P, int h, std::optional<double> B, int ACC,
               std::optional<double> XCC, std::optional<double> H) {
  FeatureRow r;
  r.author_id = std::move(id);
  r.label = label;
  r.P = P;
  r.h = h;
  r.B = B;
  r.ACC = ACC;
  r.XCC = XCC;
  r.H_g = H;
  return r;
}

// Two Gaussian classes, separated along the first column only.
Dataset gaussian_dataset(std::size_t n_per_class, std::size_t d, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Dataset data;
  data.X = Matrix(2 * n_per_class, d);
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const int label = i < n_per_class ? 0 : 1;
    data.y.push_back(label);
    data.author_ids.push_back("a" + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) data.X(i, j) = n01(rng) + (j == 0 ? shift * label : 0.0);
  }
  for (std::size_t j = 0; j < d; ++j) data.columns.push_back(kAllFeatures[j]);
  return data;
}

Matrix matrix_from(const nlohmann::json& rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

CVOptions small_cv() {
  CVOptions o;
  o.folds = 5;
  o.seed = 7;
  o.forest.n_trees = 30;
  o.forest.max_depth = 6;
  o.shap_background = 10;
  o.shap_instances_per_fold = 5;
  return o;
}

}  // namespace

TEST_SUITE("predict") {
  TEST_CASE("feature assembly") {
    const std::vector<FeatureRow> rows{
        row("c1", CohortLabel::Comeback, 5, 2, 0.5, 2, 0.4, 0.9),
        row("c2", CohortLabel::Comeback, 6, 3, 0.6, 3, 0.5, 1.0),
        row("d1", CohortLabel::Dropout, 4, 1, 0.2, 1, 0.1, std::nullopt),
        row("d2", CohortLabel::Dropout, 3, 2, 0.1, 1, 0.2, 0.0),
        row("d3", CohortLabel::Dropout, 2, 1, 0.3, 1, 0.2, 0.5),
        row("a1", CohortLabel::Active, 9, 4, 0.3, 2, 0.3, 0.2),
    };
    const auto base = assemble_features(std::span(rows).first(4), FeatureSet::Baseline);
    CHECK(base.X.rows == 4);
    CHECK(base.X.cols == 2);
    CHECK(base.y == std::vector<int>{1, 1, 0, 0});
    CHECK(base.X(0, 0) == 5.0);
    CHECK(base.X(0, 1) == 2.0);

    const auto bridge = assemble_features(rows, FeatureSet::BridgingEntropy);
    CHECK(bridge.dropped_missing == 1);
    CHECK(bridge.dropped_other_label == 1);
    CHECK(std::find(bridge.author_ids.begin(), bridge.author_ids.end(), "d1") == bridge.author_ids.end());
    CHECK(bridge.columns == std::vector<Feature>{Feature::XCC, Feature::B, Feature::ACC, Feature::H_g});

    CHECK_THROWS_AS(assemble_features(std::span(rows).first(3), FeatureSet::BridgingEntropy), DataError);
    CHECK(parse_feature_set(to_string(FeatureSet::Baseline)) == FeatureSet::Baseline);
    CHECK(parse_feature_set(to_string(FeatureSet::BridgingEntropy)) == FeatureSet::BridgingEntropy);
  }

  TEST_CASE("standardized training columns have zero mean and unit deviation") {
    const auto data = gaussian_dataset(40, 3, 2.0, 1);
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < data.X.rows; i += 2) train.push_back(i);
    const auto s = Standardizer::fit(data.X, train);
    const auto z = s.apply(data.X.select_rows(train));
    for (std::size_t j = 0; j < z.cols; ++j) {
      double m = 0.0, ss = 0.0;
      for (std::size_t i = 0; i < z.rows; ++i) m += z(i, j);
      m /= static_cast<double>(z.rows);
      for (std::size_t i = 0; i < z.rows; ++i) ss += (z(i, j) - m) * (z(i, j) - m);
      CHECK(std::abs(m) <= 1e-9);
      CHECK(std::abs(std::sqrt(ss / static_cast<double>(z.rows)) - 1.0) <= 1e-9);
    }
    Matrix constant(4, 1, 3.0);
    const std::vector<std::size_t> all{0, 1, 2, 3};
    CHECK(Standardizer::fit(constant, all).scale[0] == 1.0);
  }

  TEST_CASE("stratified folds") {
    std::vector<int> even(20, 0);
    std::fill(even.begin(), even.begin() + 10, 1);
    const auto f = stratified_folds(even, 5, 3);
    for (int k = 0; k < 5; ++k) {
      int pos = 0, neg = 0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == k) (even[i] == 1 ? pos : neg)++;
      }
      CHECK(pos == 2);
      CHECK(neg == 2);
    }
    CHECK(stratified_folds(even, 5, 3) == f);

    std::vector<int> odd(21, 0);
    std::fill(odd.begin(), odd.begin() + 11, 1);
    const auto g = stratified_folds(odd, 5, 4);
    std::vector<int> sizes(5, 0), pos(5, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ++sizes[g[i]];
      if (odd[i] == 1) ++pos[g[i]];
    }
    for (int k = 0; k < 5; ++k) {
      CHECK((pos[k] == 2 || pos[k] == 3));
      CHECK((sizes[k] == 4 || sizes[k] == 5));
    }
    CHECK_THROWS_AS(stratified_folds(std::vector<int>{1, 1, 0}, 2, 0), DataError);
    CHECK_THROWS_AS(stratified_folds(even, 1, 0), ParameterError);
  }

  TEST_CASE("logistic regression direction and intercept") {
    Matrix X(20, 1);
    std::vector<int> y(20);
    for (std::size_t i = 0; i < 20; ++i) {
      X(i, 0) = static_cast<double>(i) - 9.5;
      y[i] = i >= 10 ? 1 : 0;
    }
    const auto m = train_logistic(X, y);
    CHECK(m.w[0] > 0.0);
    CHECK(m.converged);

    Matrix C(30, 2, 0.0);
    std::vector<int> yc(30, 0);
    std::fill(yc.begin(), yc.begin() + 10, 1);
    LogisticOptions plain;
    plain.class_weights = std::make_pair(1.0, 1.0);
    const auto mc = train_logistic(C, yc, plain);
    CHECK(std::abs(mc.w[0]) < 1e-9);
    CHECK(std::abs(mc.w[1]) < 1e-9);
    CHECK(mc.b == doctest::Approx(std::log(10.0 / 20.0)).epsilon(1e-8));
    const auto balanced = train_logistic(C, yc);
    CHECK(std::abs(balanced.b) < 1e-8);
  }

  TEST_CASE("logistic gradient matches central differences and loss never increases") {
    const auto data = gaussian_dataset(50, 3, 1.0, 2);
    const auto [w0, w1] = balanced_class_weights(data.y);
    std::vector<double> sw;
    for (int v : data.y) sw.push_back(v == 1 ? w1 : w0);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      auto params = testing::uniform_sample(rng, 4, -1.5, 1.5);
      std::vector<double> grad(4);
      logistic_objective(data.X, data.y, sw, 0.7, params, grad);
      for (std::size_t j = 0; j < params.size(); ++j) {
        const double h = 1e-5;
        auto up = params, down = params;
        up[j] += h;
        down[j] -= h;
        std::vector<double> scratch(4);
        const double fd = (logistic_objective(data.X, data.y, sw, 0.7, up, scratch) -
                           logistic_objective(data.X, data.y, sw, 0.7, down, scratch)) /
                          (2.0 * h);
        CHECK(std::abs(fd - grad[j]) <= 1e-5 * std::max(1.0, std::abs(grad[j])));
      }
    }

    LogisticOptions o;
    o.l2_strength = 0.7;
    const auto m = train_logistic(data.X, data.y, o);
    for (std::size_t i = 1; i < m.loss_history.size(); ++i) CHECK(m.loss_history[i] <= m.loss_history[i - 1]);
    std::vector<double> params = m.w;
    params.push_back(m.b);
    std::vector<double> grad(4), scratch(4);
    logistic_objective(data.X, data.y, sw, 0.7, params, grad);
    for (std::size_t j = 0; j < params.size(); ++j) {
      auto up = params, down = params;
      up[j] += 1e-5;
      down[j] -= 1e-5;
      const double fd = (logistic_objective(data.X, data.y, sw, 0.7, up, scratch) -
                         logistic_objective(data.X, data.y, sw, 0.7, down, scratch)) /
                        2e-5;
      CHECK(std::abs(grad[j]) < 1e-6);
      CHECK(std::abs(fd - grad[j]) < 1e-5);
    }
  }

  TEST_CASE("logistic regression agrees with the reference fixture") {
    for (const auto& c : testing::fixtures()["logistic"]) {
      LogisticOptions o;
      o.l2_strength = c["l2"].get<double>();
      const auto m = train_logistic(matrix_from(c["X"]), c["y"].get<std::vector<int>>(), o);
      const auto w = c["w"].get<std::vector<double>>();
      for (std::size_t j = 0; j < w.size(); ++j) CHECK(m.w[j] == doctest::Approx(w[j]).epsilon(1e-5));
      CHECK(m.b == doctest::Approx(c["b"].get<double>()).epsilon(1e-5));
    }
  }

  TEST_CASE("random forest") {
    Matrix pure(10, 2);
    for (std::size_t i = 0; i < 10; ++i) {
      pure(i, 0) = static_cast<double>(i);
      pure(i, 1) = static_cast<double>(i * i);
    }
    ForestOptions few;
    few.n_trees = 10;
    const auto only = train_random_forest(pure, std::vector<int>(10, 1), few);
    CHECK(only.predict_proba(std::vector<double>{100.0, -3.0}) == 1.0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix X(400, 2);
    std::vector<int> y(400);
    for (std::size_t i = 0; i < 400; ++i) {
      X(i, 0) = u(rng);
      X(i, 1) = u(rng);
      y[i] = (X(i, 0) > 0) != (X(i, 1) > 0) ? 1 : 0;
    }
    ForestOptions o;
    o.n_trees = 100;
    o.seed = 3;
    const auto forest = train_random_forest(X, y, o);
    int correct = 0;
    for (std::size_t i = 0; i < 400; ++i) correct += (forest.predict_proba(X.row(i)) >= 0.5) == (y[i] == 1);
    CHECK(correct >= 380);

    CHECK(train_random_forest(X, y, o) == forest);
    ForestOptions threaded = o;
    threaded.threads = 8;
    CHECK(train_random_forest(X, y, threaded) == forest);

    o.n_trees = 0;
    CHECK_THROWS_AS(train_random_forest(X, y, o), ParameterError);
    o.n_trees = 5;
    o.mtry = 3;
    CHECK_THROWS_AS(train_random_forest(X, y, o), ParameterError);
  }

  TEST_CASE("Platt calibration") {
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
      s.push_back(i < 10 ? -10.0 : 10.0);
      y.push_back(i < 10 ? 0 : 1);
    }
    const auto p = platt_calibrate(s, y);
    CHECK(p(10.0) > 0.9);
    CHECK(p(-10.0) < 0.1);
    double prev = 0.0;
    for (double x = -20.0; x <= 20.0; x += 0.5) {
      const double v = p(x);
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      CHECK(v >= prev);
      prev = v;
    }

    std::vector<double> flat(40, 0.3);
    std::vector<int> labels(40, 0);
    std::fill(labels.begin(), labels.begin() + 10, 1);
    const auto q = platt_calibrate(flat, labels);
    CHECK(q(0.3) == doctest::Approx(11.0 / 12.0 * 10.0 / 40.0 + 1.0 / 32.0 * 30.0 / 40.0).epsilon(1e-6));
    CHECK(std::abs(q(0.3) - 0.25) < 0.01);
    CHECK_THROWS_AS(platt_calibrate(flat, std::vector<int>(40, 0)), DataError);
  }

  TEST_CASE("classifier evaluation") {
    const std::vector<int> y{0, 1, 1, 0, 1};
    const std::vector<double> perfect{0, 1, 1, 0, 1};
    const auto r = evaluate_classifier(perfect, y);
    CHECK(r.accuracy == 1.0);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
    CHECK(r.roc_auc == 1.0);
    const auto c = evaluate_classifier(std::vector<double>(5, 0.5), y);
    CHECK(c.roc_auc == 0.5);

    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> coin(0, 1), grade(0, 20);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> s(60);
      std::vector<int> l(60);
      for (std::size_t i = 0; i < 60; ++i) {
        l[i] = coin(rng);
        s[i] = grade(rng) / 20.0;
      }
      l[0] = 0;
      l[1] = 1;
      const auto roc = roc_curve(s, l);
      CHECK(std::abs(trapezoid_auc(roc) - rank_auc(s, l)) <= 1e-12);
      CHECK(roc.back().first == 1.0);
      CHECK(roc.back().second == 1.0);
    }
  }

  TEST_CASE("Shapley linear closed form and dummy axiom") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 25; ++trial) {
      const std::size_t d = 1 + static_cast<std::size_t>(trial % 6);
      const auto w = testing::uniform_sample(rng, d, -2.0, 2.0);
      const double b = 0.3;
      Matrix bg(7, d);
      for (auto& v : bg.data) v = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      const auto x = testing::uniform_sample(rng, d, -1.0, 1.0);
      const ModelFn f = [&](std::span<const double> z) {
        double s = b;
        for (std::size_t j = 0; j < d; ++j) s += w[j] * z[j];
        return s;
      };
      const auto r = shapley_attributions(f, x, bg);
      for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < bg.rows; ++i) mean += bg(i, j);
        mean /= static_cast<double>(bg.rows);
        CHECK(std::abs(r.phi[j] - w[j] * (x[j] - mean)) <= 1e-12);
      }
    }

    Matrix bg(5, 3);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 3; ++j) bg(i, j) = static_cast<double>(i + j);
    }
    const ModelFn ignores_last = [](std::span<const double> z) { return z[0] * z[1] + std::sin(z[0]); };
    const auto r = shapley_attributions(ignores_last, std::vector<double>{2.0, -1.0, 9.0}, bg);
    CHECK(r.phi[2] == 0.0);

    const ModelFn symmetric = [](std::span<const double> z) { return z[0] * z[1] + z[2]; };
    Matrix sym_bg(1, 3, 0.0);
    const auto s = shapley_attributions(symmetric, std::vector<double>{2.0, 2.0, 1.0}, sym_bg);
    CHECK(std::abs(s.phi[0] - s.phi[1]) <= 1e-12);

    CHECK_THROWS_AS(shapley_attributions(symmetric, std::vector<double>(11, 0.0), Matrix(1, 11)), ParameterError);
    CHECK_THROWS_AS(shapley_attributions(symmetric, std::vector<double>(3, 0.0), Matrix(0, 3)), ParameterError);
  }

  TEST_CASE("Shapley efficiency on a random forest") {
    const auto data = gaussian_dataset(60, 4, 1.5, 14);
    ForestOptions o;
    o.n_trees = 40;
    const auto forest = train_random_forest(data.X, data.y, o);
    const ModelFn f = [&](std::span<const double> z) { return forest.predict_proba(z); };
    const Matrix bg = data.X.select_rows(std::vector<std::size_t>{0, 10, 20, 70, 80, 90, 100});
    for (std::size_t i = 0; i < data.X.rows; i += 13) {
      const auto r = shapley_attributions(f, data.X.row(i), bg);
      const double total = std::accumulate(r.phi.begin(), r.phi.end(), 0.0);
      CHECK(std::abs(total + r.base_value - r.prediction) <= 1e-9);
    }
  }

  TEST_CASE("test-fold rows never reach training artifacts") {
    const auto clean = gaussian_dataset(40, 3, 1.0, 15);
    const auto folds = stratified_folds(clean.y, 5, 1);
    for (ModelKind kind : {ModelKind::Logistic, ModelKind::RandomForest}) {
      for (int fold = 0; fold < 5; ++fold) {
        auto poisoned = clean;
        for (std::size_t i = 0; i < folds.size(); ++i) {
          if (folds[i] != fold) continue;
          for (std::size_t j = 0; j < poisoned.X.cols; ++j) poisoned.X(i, j) = 1e12;
          poisoned.y[i] = 1 - poisoned.y[i];
        }
        const auto a = train_fold(clean, folds, fold, kind, small_cv());
        const auto b = train_fold(poisoned, folds, fold, kind, small_cv());
        CHECK(a == b);
        for (std::size_t i : a.fit_rows) CHECK(folds[i] != fold);
        for (std::size_t i : a.calibration_rows) CHECK(folds[i] != fold);
      }
    }
  }

  TEST_CASE("cross-validation is thread-count invariant and shares folds across feature sets") {
    std::vector<FeatureRow> rows;
    std::mt19937_64 rng(16);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int i = 0; i < 80; ++i) {
      const bool cb = i % 2 == 0;
      rows.push_back(row("a" + std::to_string(100 + i), cb ? CohortLabel::Comeback : CohortLabel::Dropout,
                         8 + i % 5, 3 + i % 3, (cb ? 0.45 : 0.25) + 0.05 * n01(rng), cb ? 3 : 2,
                         (cb ? 0.45 : 0.25) + 0.05 * n01(rng), (cb ? 0.9 : 0.3) + 0.2 * n01(rng)));
    }
    auto opts = small_cv();
    const auto one = ablation_run(rows, opts);
    opts.threads = 8;
    const auto eight = ablation_run(rows, opts);
    REQUIRE(one.baseline.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) {
      CHECK(one.bridging[m].oof_probability == eight.bridging[m].oof_probability);
      CHECK(one.bridging[m].mean_abs_shap == eight.bridging[m].mean_abs_shap);
      CHECK(one.baseline[m].oof_probability == eight.baseline[m].oof_probability);
    }
    CHECK(one.folds == stratified_folds(one.labels, 5, opts.seed));
    CHECK(one.bridging[1].pooled.roc_auc > 0.9);
    CHECK(one.bridging[1].pooled.roc_auc - one.baseline[1].pooled.roc_auc >= 0.2);
    CHECK(one.bridging[0].mean_abs_shap.size() == 4);
    CHECK(parse_model_kind("lr") == ModelKind::Logistic);
    CHECK_THROWS_AS(parse_model_kind("svm"), ParameterError);
  }
}
