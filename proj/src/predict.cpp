#include "comeback/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "comeback/errors.hpp"
#include "comeback/parallel.hpp"
#include "comeback/stats.hpp"

namespace comeback::predict {

namespace {

double log1p_exp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Solves the symmetric positive definite system H x = g in place (Cholesky).
bool cholesky_solve(std::vector<double> h, std::vector<double>& g, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = h[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= h[j * n + k] * h[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    h[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = h[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= h[i * n + k] * h[j * n + k];
      h[i * n + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = g[i];
    for (std::size_t k = 0; k < i; ++k) s -= h[i * n + k] * g[k];
    g[i] = s / h[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = g[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= h[k * n + i] * g[k];
    g[i] = s / h[i * n + i];
  }
  return true;
}

std::vector<double> sample_weights(std::span<const int> y,
                                   const std::optional<std::pair<double, double>>& cw) {
  const auto [w0, w1] = cw ? *cw : balanced_class_weights(y);
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = y[i] == 1 ? w1 : w0;
  return w;
}

void require_both_classes(std::span<const int> labels, const char* what) {
  const bool pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!pos || !neg) throw DataError(std::string(what) + " needs both classes present");
}

}  // namespace

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
  Matrix out(idx.size(), cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(data.begin() + static_cast<long>(idx[i] * cols), cols,
                out.data.begin() + static_cast<long>(i * cols));
  }
  return out;
}

std::string_view to_string(FeatureSet set) {
  return set == FeatureSet::Baseline ? "baseline" : "bridging";
}

FeatureSet parse_feature_set(std::string_view name) {
  if (name == "baseline") return FeatureSet::Baseline;
  if (name == "bridging" || name == "bridging_entropy") return FeatureSet::BridgingEntropy;
  throw ParameterError("unknown feature set '" + std::string(name) + "'");
}

std::vector<Feature> feature_columns(FeatureSet set) {
  if (set == FeatureSet::Baseline) return {Feature::P, Feature::h};
  return {Feature::XCC, Feature::B, Feature::ACC, Feature::H_g};
}

Dataset assemble_features(std::span<const FeatureRow> rows, std::span<const Feature> columns) {
  Dataset d;
  d.columns.assign(columns.begin(), columns.end());
  std::vector<double> values;
  for (const auto& row : rows) {
    if (row.label == CohortLabel::Active) {
      ++d.dropped_other_label;
      continue;
    }
    std::vector<double> v;
    v.reserve(columns.size());
    for (Feature f : columns) {
      auto x = feature_value(row, f);
      if (!x) break;
      v.push_back(*x);
    }
    if (v.size() != columns.size()) {
      ++d.dropped_missing;
      continue;
    }
    values.insert(values.end(), v.begin(), v.end());
    d.y.push_back(row.label == CohortLabel::Comeback ? 1 : 0);
    d.author_ids.push_back(row.author_id);
  }
  d.X.rows = d.y.size();
  d.X.cols = columns.size();
  d.X.data = std::move(values);
  const auto pos = static_cast<std::size_t>(std::count(d.y.begin(), d.y.end(), 1));
  if (pos < 2 || d.y.size() - pos < 2) {
    throw DataError("need at least two Comeback and two Dropout rows with complete features");
  }
  return d;
}

Dataset assemble_features(std::span<const FeatureRow> rows, FeatureSet set) {
  const auto cols = feature_columns(set);
  return assemble_features(rows, cols);
}

Standardizer Standardizer::fit(const Matrix& X, std::span<const std::size_t> rows) {
  Standardizer s;
  s.mean.assign(X.cols, 0.0);
  s.scale.assign(X.cols, 1.0);
  if (rows.empty()) return s;
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < X.cols; ++j) {
    double m = 0.0;
    for (std::size_t i : rows) m += X(i, j);
    m /= n;
    double ss = 0.0;
    for (std::size_t i : rows) ss += (X(i, j) - m) * (X(i, j) - m);
    const double sd = std::sqrt(ss / n);
    s.mean[j] = m;
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply_row(std::span<const double> in, std::span<double> out) const {
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
}

Matrix Standardizer::apply(const Matrix& X) const {
  Matrix out(X.rows, X.cols);
  for (std::size_t i = 0; i < X.rows; ++i) apply_row(X.row(i), out.row(i));
  return out;
}

std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("need at least two folds");
  std::vector<int> folds(labels.size(), -1);
  std::mt19937_64 rng(seed);
  std::size_t offset = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    if (idx.size() < static_cast<std::size_t>(k)) {
      throw DataError("class " + std::to_string(cls) + " has fewer rows than folds");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    // The second class continues the deal where the first one stopped.
    const auto kk = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < idx.size(); ++i) folds[idx[i]] = static_cast<int>((offset + i) % kk);
    offset = (offset + idx.size()) % kk;
  }
  return folds;
}

std::pair<double, double> balanced_class_weights(std::span<const int> labels) {
  const double n = static_cast<double>(labels.size());
  const double n1 = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double n0 = n - n1;
  if (n0 == 0.0 || n1 == 0.0) return {1.0, 1.0};
  return {n / (2.0 * n0), n / (2.0 * n1)};
}

double LogisticModel::decision(std::span<const double> x) const {
  double z = b;
  for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[j];
  return z;
}

double LogisticModel::predict_proba(std::span<const double> x) const { return sigmoid(decision(x)); }

double logistic_objective(const Matrix& X, std::span<const int> y,
                          std::span<const double> sample_weight, double l2,
                          std::span<const double> params, std::span<double> grad) {
  const std::size_t d = X.cols;
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto xi = X.row(i);
    double z = params[d];
    for (std::size_t j = 0; j < d; ++j) z += params[j] * xi[j];
    const double s = sample_weight[i];
    loss += s * (log1p_exp(z) - (y[i] == 1 ? z : 0.0));
    const double r = s * (sigmoid(z) - (y[i] == 1 ? 1.0 : 0.0));
    for (std::size_t j = 0; j < d; ++j) grad[j] += r * xi[j];
    grad[d] += r;
  }
  for (std::size_t j = 0; j < d; ++j) {
    loss += 0.5 * l2 * params[j] * params[j];
    grad[j] += l2 * params[j];
  }
  return loss;
}

LogisticModel train_logistic(const Matrix& X, std::span<const int> y,
                             const LogisticOptions& options) {
  if (X.rows != y.size()) throw ParameterError("design matrix and labels differ in length");
  if (X.rows == 0) throw DataError("logistic regression on an empty training set");
  if (options.l2_strength < 0.0) throw ParameterError("l2 strength must be >= 0");
  const std::size_t d = X.cols, p = d + 1;
  const auto sw = sample_weights(y, options.class_weights);

  std::vector<double> theta(p, 0.0), grad(p), trial(p), trial_grad(p);
  double loss = logistic_objective(X, y, sw, options.l2_strength, theta, grad);
  LogisticModel model;
  model.loss_history.push_back(loss);

  auto norm = [](const std::vector<double>& g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return std::sqrt(s);
  };

  for (int iter = 0; iter < options.max_iter; ++iter) {
    if (norm(grad) <= options.tol) {
      model.converged = true;
      break;
    }
    std::vector<double> hess(p * p, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
      const auto xi = X.row(i);
      double z = theta[d];
      for (std::size_t j = 0; j < d; ++j) z += theta[j] * xi[j];
      const double q = sigmoid(z);
      const double c = sw[i] * q * (1.0 - q);
      for (std::size_t a = 0; a < p; ++a) {
        const double xa = a < d ? xi[a] : 1.0;
        for (std::size_t b = 0; b <= a; ++b) {
          const double xb = b < d ? xi[b] : 1.0;
          hess[a * p + b] += c * xa * xb;
        }
      }
    }
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < a; ++b) hess[b * p + a] = hess[a * p + b];
      if (a < d) hess[a * p + a] += options.l2_strength;
      hess[a * p + a] += 1e-10;
    }
    std::vector<double> step = grad;
    if (!cholesky_solve(hess, step, p)) step = grad;  // fall back to gradient direction

    double directional = 0.0;
    for (std::size_t j = 0; j < p; ++j) directional += grad[j] * step[j];
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-12) {
      for (std::size_t j = 0; j < p; ++j) trial[j] = theta[j] - t * step[j];
      const double trial_loss =
          logistic_objective(X, y, sw, options.l2_strength, trial, trial_grad);
      if (trial_loss <= loss - 1e-4 * t * directional || trial_loss < loss) {
        theta = trial;
        grad = trial_grad;
        loss = trial_loss;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    model.iterations = iter + 1;
    if (!accepted) {
      // No further decrease representable: treat as converged at this point.
      model.converged = norm(grad) <= std::max(options.tol, 1e-6);
      break;
    }
    model.loss_history.push_back(loss);
  }
  if (!model.converged && norm(grad) <= options.tol) model.converged = true;
  model.gradient_norm = norm(grad);
  model.w.assign(theta.begin(), theta.begin() + static_cast<long>(d));
  model.b = theta[d];
  return model;
}

double PlattScaler::operator()(double score) const { return sigmoid(-(A * score + B)); }

PlattScaler platt_calibrate(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ParameterError("scores and labels differ in length");
  require_both_classes(labels, "Platt calibration");
  const double prior1 = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double prior0 = static_cast<double>(labels.size()) - prior1;
  const double hi_target = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo_target = 1.0 / (prior0 + 2.0);
  std::vector<double> t(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i] == 1 ? hi_target : lo_target;

  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double fab = scores[i] * a + b;
      f += fab >= 0.0 ? t[i] * fab + std::log1p(std::exp(-fab))
                      : (t[i] - 1.0) * fab + std::log1p(std::exp(fab));
    }
    return f;
  };

  double A = 0.0, B = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = objective(A, B);
  constexpr double sigma = 1e-12, eps = 1e-5, min_step = 1e-10;
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double fab = scores[i] * A + B;
      const double p = sigmoid(-fab);  // P(y = 1)
      const double q = 1.0 - p;
      const double d2 = p * q;
      h11 += scores[i] * scores[i] * d2;
      h22 += d2;
      h21 += scores[i] * d2;
      const double d1 = t[i] - p;
      g1 += scores[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < eps && std::abs(g2) < eps) break;
    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;
    double step = 1.0;
    while (step >= min_step) {
      const double na = A + step * dA, nb = B + step * dB;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        A = na;
        B = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < min_step) break;
  }
  return {A, B};
}

std::vector<std::pair<double, double>> roc_curve(std::span<const double> scores,
                                                 std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ParameterError("scores and labels differ in length");
  require_both_classes(labels, "ROC");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = static_cast<double>(labels.size()) - pos;
  std::vector<std::pair<double, double>> roc{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tp : fp) += 1.0;
      ++j;
    }
    roc.emplace_back(fp / neg, tp / pos);
    i = j;
  }
  return roc;
}

double trapezoid_auc(std::span<const std::pair<double, double>> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].first - roc[i - 1].first) * (roc[i].second + roc[i - 1].second) / 2.0;
  }
  return area;
}

double rank_auc(std::span<const double> scores, std::span<const int> labels) {
  require_both_classes(labels, "rank AUC");
  const auto ranks = stats::midranks(scores);
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos += 1.0;
      rank_sum += ranks[i];
    }
  }
  const double neg = static_cast<double>(labels.size()) - pos;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

EvalReport evaluate_classifier(std::span<const double> probabilities,
                               std::span<const int> labels, double threshold) {
  if (probabilities.empty()) throw DataError("cannot evaluate an empty prediction set");
  if (probabilities.size() != labels.size()) {
    throw ParameterError("probabilities and labels differ in length");
  }
  require_both_classes(labels, "classifier evaluation");
  EvalReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    if (predicted && labels[i] == 1) ++r.tp;
    if (predicted && labels[i] == 0) ++r.fp;
    if (!predicted && labels[i] == 0) ++r.tn;
    if (!predicted && labels[i] == 1) ++r.fn;
  }
  const double n = static_cast<double>(labels.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.roc_points = roc_curve(probabilities, labels);
  r.roc_auc = trapezoid_auc(r.roc_points);
  return r;
}

ShapleyResult shapley_attributions(const ModelFn& model, std::span<const double> instance,
                                   const Matrix& background) {
  const std::size_t d = instance.size();
  if (d > 10) throw ParameterError("exact Shapley enumeration supports at most 10 features");
  if (background.rows == 0) throw ParameterError("Shapley background sample is empty");
  if (background.cols != d) throw ParameterError("background width differs from instance");

  const std::size_t coalitions = std::size_t{1} << d;
  std::vector<double> value(coalitions, 0.0);
  std::vector<double> z(d);
  for (std::size_t mask = 0; mask < coalitions; ++mask) {
    double sum = 0.0;
    for (std::size_t r = 0; r < background.rows; ++r) {
      const auto bg = background.row(r);
      for (std::size_t j = 0; j < d; ++j) z[j] = (mask >> j) & 1U ? instance[j] : bg[j];
      sum += model(z);
    }
    value[mask] = sum / static_cast<double>(background.rows);
  }
  // weight[s] = s! (d - s - 1)! / d!
  std::vector<double> weight(d, 0.0);
  for (std::size_t s = 0; s < d; ++s) {
    double w = 1.0 / static_cast<double>(d);
    // 1 / (d * C(d-1, s))
    double binom = 1.0;
    for (std::size_t k = 1; k <= s; ++k) binom = binom * static_cast<double>(d - 1 - s + k) / static_cast<double>(k);
    weight[s] = w / binom;
  }
  ShapleyResult out;
  out.phi.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t mask = 0; mask < coalitions; ++mask) {
      if (mask & bit) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      out.phi[i] += weight[s] * (value[mask | bit] - value[mask]);
    }
  }
  out.base_value = value[0];
  out.prediction = model(std::vector<double>(instance.begin(), instance.end()));
  return out;
}

std::string_view to_string(ModelKind kind) { return kind == ModelKind::Logistic ? "lr" : "rf"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "lr" || name == "logistic") return ModelKind::Logistic;
  if (name == "rf" || name == "random_forest") return ModelKind::RandomForest;
  throw ParameterError("unknown model '" + std::string(name) + "' (expected lr|rf)");
}

double FoldArtifacts::raw_score(std::span<const double> standardized) const {
  if (logistic) return logistic->decision(standardized);
  return forest->predict_proba(standardized);
}

FoldArtifacts train_fold(const Dataset& data, std::span<const int> folds, int fold,
                         ModelKind kind, const CVOptions& options) {
  if (folds.size() != data.y.size()) throw ParameterError("fold assignment length mismatch");
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (folds[i] != fold) train.push_back(i);
  }
  std::vector<int> train_labels;
  for (std::size_t i : train) train_labels.push_back(data.y[i]);
  const int inner_k = std::max(2, static_cast<int>(std::lround(1.0 / options.calibration_fraction)));
  const auto inner = stratified_folds(train_labels, inner_k,
                                      derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(fold)));
  FoldArtifacts art;
  for (std::size_t k = 0; k < train.size(); ++k) {
    (inner[k] == 0 ? art.calibration_rows : art.fit_rows).push_back(train[k]);
  }
  art.standardizer = Standardizer::fit(data.X, art.fit_rows);
  const Matrix fit_x = art.standardizer.apply(data.X.select_rows(art.fit_rows));
  std::vector<int> fit_y;
  for (std::size_t i : art.fit_rows) fit_y.push_back(data.y[i]);

  if (kind == ModelKind::Logistic) {
    art.logistic = train_logistic(fit_x, fit_y, options.logistic);
  } else {
    ForestOptions fo = options.forest;
    fo.seed = derive_seed(options.forest.seed ^ options.seed, 2000 + static_cast<std::uint64_t>(fold));
    fo.threads = options.threads;
    art.forest = train_random_forest(fit_x, fit_y, fo);
  }
  std::vector<double> cal_scores;
  std::vector<int> cal_y;
  std::vector<double> z(data.X.cols);
  for (std::size_t i : art.calibration_rows) {
    art.standardizer.apply_row(data.X.row(i), z);
    cal_scores.push_back(art.raw_score(z));
    cal_y.push_back(data.y[i]);
  }
  art.calibration = platt_calibrate(cal_scores, cal_y);
  return art;
}

CVReport cross_validate(const Dataset& data, std::span<const int> folds, ModelKind kind,
                        const CVOptions& options) {
  CVReport report;
  report.model = kind;
  report.columns = data.columns;
  report.oof_probability.assign(data.y.size(), 0.0);
  const int k = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
  std::vector<double> shap_sum(data.X.cols, 0.0);
  std::size_t shap_count = 0;
  std::vector<double> z(data.X.cols);

  for (int f = 0; f < k; ++f) {
    const auto art = train_fold(data, folds, f, kind, options);
    report.calibration.push_back(art.calibration);
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (folds[i] == f) test.push_back(i);
    }
    std::vector<double> probs;
    std::vector<int> labels;
    Matrix test_x(test.size(), data.X.cols);
    for (std::size_t t = 0; t < test.size(); ++t) {
      art.standardizer.apply_row(data.X.row(test[t]), test_x.row(t));
      const double p = art.calibration(art.raw_score(test_x.row(t)));
      report.oof_probability[test[t]] = p;
      probs.push_back(p);
      labels.push_back(data.y[test[t]]);
    }
    report.per_fold.push_back(evaluate_classifier(probs, labels));

    // Global attribution on the raw model score.
    std::vector<std::size_t> bg_rows = art.fit_rows;
    std::mt19937_64 rng(derive_seed(options.seed, 3000 + static_cast<std::uint64_t>(f)));
    std::shuffle(bg_rows.begin(), bg_rows.end(), rng);
    bg_rows.resize(std::min(bg_rows.size(), options.shap_background));
    const Matrix background = art.standardizer.apply(data.X.select_rows(bg_rows));
    const ModelFn fn = [&art](std::span<const double> x) { return art.raw_score(x); };
    const std::size_t n_inst = std::min(test.size(), options.shap_instances_per_fold);
    std::vector<std::vector<double>> phis(n_inst);
    parallel_for(n_inst, options.threads, [&](std::size_t t) {
      phis[t] = shapley_attributions(fn, test_x.row(t), background).phi;
    });
    for (const auto& phi : phis) {
      for (std::size_t j = 0; j < phi.size(); ++j) shap_sum[j] += std::abs(phi[j]);
      ++shap_count;
    }
  }
  report.pooled = evaluate_classifier(report.oof_probability, data.y);
  report.mean_abs_shap.assign(data.X.cols, 0.0);
  for (std::size_t j = 0; j < shap_sum.size() && shap_count > 0; ++j) {
    report.mean_abs_shap[j] = shap_sum[j] / static_cast<double>(shap_count);
  }
  const double nf = static_cast<double>(report.per_fold.size());
  for (const auto& r : report.per_fold) {
    report.fold_mean.accuracy += r.accuracy / nf;
    report.fold_mean.precision += r.precision / nf;
    report.fold_mean.recall += r.recall / nf;
    report.fold_mean.f1 += r.f1 / nf;
    report.fold_mean.roc_auc += r.roc_auc / nf;
  }
  return report;
}

AblationReport ablation_run(std::span<const FeatureRow> rows, const CVOptions& options,
                            std::span<const ModelKind> models) {
  std::vector<ModelKind> families(models.begin(), models.end());
  if (families.empty()) families = {ModelKind::Logistic, ModelKind::RandomForest};

  std::vector<Feature> all = feature_columns(FeatureSet::Baseline);
  for (Feature f : feature_columns(FeatureSet::BridgingEntropy)) all.push_back(f);
  const Dataset full = assemble_features(rows, all);

  AblationReport report;
  report.rows = full.y.size();
  report.dropped_missing = full.dropped_missing;
  report.author_ids = full.author_ids;
  report.labels = full.y;
  report.folds = stratified_folds(full.y, options.folds, options.seed);

  auto subset = [&](FeatureSet set) {
    Dataset d;
    d.columns = feature_columns(set);
    d.y = full.y;
    d.author_ids = full.author_ids;
    d.dropped_missing = full.dropped_missing;
    d.X = Matrix(full.X.rows, d.columns.size());
    for (std::size_t j = 0; j < d.columns.size(); ++j) {
      const auto src = static_cast<std::size_t>(
          std::find(all.begin(), all.end(), d.columns[j]) - all.begin());
      for (std::size_t i = 0; i < full.X.rows; ++i) d.X(i, j) = full.X(i, src);
    }
    return d;
  };
  const Dataset base = subset(FeatureSet::Baseline);
  const Dataset bridge = subset(FeatureSet::BridgingEntropy);
  for (ModelKind kind : families) {
    auto b = cross_validate(base, report.folds, kind, options);
    b.feature_set = FeatureSet::Baseline;
    report.baseline.push_back(std::move(b));
    auto p = cross_validate(bridge, report.folds, kind, options);
    p.feature_set = FeatureSet::BridgingEntropy;
    report.bridging.push_back(std::move(p));
  }
  return report;
}

}  // namespace comeback::predict
