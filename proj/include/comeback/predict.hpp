#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "comeback/metrics.hpp"

namespace comeback::predict {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  Matrix select_rows(std::span<const std::size_t> idx) const;
};

enum class FeatureSet { Baseline, BridgingEntropy };

std::string_view to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view name);
// Baseline = {P, h}; BridgingEntropy = {XCC, B, ACC, H_g}.
std::vector<Feature> feature_columns(FeatureSet set);

struct Dataset {
  Matrix X;
  std::vector<int> y;  // Comeback = 1, Dropout = 0
  std::vector<std::string> author_ids;
  std::vector<Feature> columns;
  std::size_t dropped_missing = 0;
  std::size_t dropped_other_label = 0;
};

// Keeps Comeback/Dropout rows whose selected features are all present.
// Throws DataError when either class has fewer than two rows.
Dataset assemble_features(std::span<const FeatureRow> rows, std::span<const Feature> columns);
Dataset assemble_features(std::span<const FeatureRow> rows, FeatureSet set);

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for constant columns

  static Standardizer fit(const Matrix& X, std::span<const std::size_t> rows);
  Matrix apply(const Matrix& X) const;
  void apply_row(std::span<const double> in, std::span<double> out) const;
  bool operator==(const Standardizer&) const = default;
};

// Fold id per row. Each class is shuffled with `seed` and dealt round-robin,
// so per-fold class counts differ by at most one.
std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

// n_total / (2 n_c) for each class (index 0 = Dropout, 1 = Comeback).
std::pair<double, double> balanced_class_weights(std::span<const int> labels);

// ---------------------------------------------------------------------------
// Logistic regression

struct LogisticOptions {
  double l2_strength = 1.0;
  int max_iter = 100;
  double tol = 1e-8;
  std::optional<std::pair<double, double>> class_weights;  // default balanced
};

struct LogisticModel {
  std::vector<double> w;
  double b = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<double> loss_history;

  double decision(std::span<const double> x) const;
  double predict_proba(std::span<const double> x) const;
  bool operator==(const LogisticModel&) const = default;
};

// Weighted negative log-likelihood plus (l2/2)|w|^2 (intercept unpenalized).
// Parameters are packed as [w..., b]; returns the loss and fills `grad`.
double logistic_objective(const Matrix& X, std::span<const int> y,
                          std::span<const double> sample_weight, double l2,
                          std::span<const double> params, std::span<double> grad);

// Damped Newton with backtracking; the loss never increases between
// iterations. Reports the best iterate when max_iter is hit.
LogisticModel train_logistic(const Matrix& X, std::span<const int> y,
                             const LogisticOptions& options = {});

// ---------------------------------------------------------------------------
// Random forest

struct ForestOptions {
  int n_trees = 200;
  int max_depth = 12;
  int min_leaf = 2;
  int mtry = 0;  // 0: ceil(sqrt(d))
  std::optional<std::pair<double, double>> class_weights;  // default balanced
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // weighted class-1 fraction at this node

  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double leaf_value(std::span<const double> x) const;
  bool operator==(const DecisionTree&) const = default;
};

struct RandomForest {
  std::vector<DecisionTree> trees;

  // Fraction of trees voting class 1 (a leaf at exactly 0.5 casts half a vote).
  double predict_proba(std::span<const double> x) const;
  bool operator==(const RandomForest&) const = default;
};

// Bagged CART with weighted Gini impurity. Tree t draws from
// derive_seed(seed, t), so results don't depend on the thread count.
RandomForest train_random_forest(const Matrix& X, std::span<const int> y,
                                 const ForestOptions& options = {});

// ---------------------------------------------------------------------------
// Calibration, evaluation, explanation

struct PlattScaler {
  double A = 0.0;
  double B = 0.0;

  double operator()(double score) const;
  bool operator==(const PlattScaler&) const = default;
};

// P(y=1|s) = 1 / (1 + exp(A s + B)) fit by Newton's method on Platt's
// smoothed targets. Throws DataError unless both classes are present.
PlattScaler platt_calibrate(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double roc_auc = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::vector<std::pair<double, double>> roc_points;  // (fpr, tpr)
};

std::vector<std::pair<double, double>> roc_curve(std::span<const double> scores,
                                                 std::span<const int> labels);
double trapezoid_auc(std::span<const std::pair<double, double>> roc);
// AUC from the Mann-Whitney rank sum with midranks.
double rank_auc(std::span<const double> scores, std::span<const int> labels);

EvalReport evaluate_classifier(std::span<const double> probabilities,
                               std::span<const int> labels, double threshold = 0.5);

using ModelFn = std::function<double(std::span<const double>)>;

struct ShapleyResult {
  std::vector<double> phi;
  double base_value = 0.0;  // mean model output over the background
  double prediction = 0.0;  // model output at the instance
};

// Exact interventional Shapley values by enumerating all 2^d coalitions.
// Throws ParameterError for d > 10 or an empty background.
ShapleyResult shapley_attributions(const ModelFn& model, std::span<const double> instance,
                                   const Matrix& background);

// ---------------------------------------------------------------------------
// Cross-validation

enum class ModelKind { Logistic, RandomForest };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct CVOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double calibration_fraction = 0.2;
  LogisticOptions logistic;
  ForestOptions forest;
  std::size_t shap_background = 50;
  std::size_t shap_instances_per_fold = 40;
};

// Everything fitted from a fold's training rows.
struct FoldArtifacts {
  Standardizer standardizer;
  std::optional<LogisticModel> logistic;
  std::optional<RandomForest> forest;
  PlattScaler calibration;
  std::vector<std::size_t> fit_rows;
  std::vector<std::size_t> calibration_rows;

  double raw_score(std::span<const double> standardized) const;
  bool operator==(const FoldArtifacts&) const = default;
};

// Trains on rows with folds[i] != fold: nested stratified split into fit and
// calibration rows, standardizer and model on the fit rows, Platt on the
// model's calibration-row scores.
FoldArtifacts train_fold(const Dataset& data, std::span<const int> folds, int fold,
                         ModelKind kind, const CVOptions& options);

struct CVReport {
  ModelKind model = ModelKind::RandomForest;
  FeatureSet feature_set = FeatureSet::BridgingEntropy;
  std::vector<Feature> columns;
  EvalReport pooled;
  std::vector<EvalReport> per_fold;
  EvalReport fold_mean;  // scalar metrics averaged over folds
  std::vector<PlattScaler> calibration;
  std::vector<double> mean_abs_shap;  // per column
  std::vector<double> oof_probability;  // per dataset row
};

CVReport cross_validate(const Dataset& data, std::span<const int> folds, ModelKind kind,
                        const CVOptions& options);

struct AblationReport {
  std::size_t rows = 0;
  std::size_t dropped_missing = 0;
  std::vector<std::string> author_ids;
  std::vector<int> labels;
  std::vector<int> folds;
  std::vector<CVReport> baseline;  // one per model family
  std::vector<CVReport> bridging;
};

// Runs both feature sets with the same rows and the same fold assignment.
AblationReport ablation_run(std::span<const FeatureRow> rows, const CVOptions& options,
                            std::span<const ModelKind> models = {});

}  // namespace comeback::predict
