#include "comeback/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <climits>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "comeback/errors.hpp"
#include "comeback/parallel.hpp"
#include "comeback/tables.hpp"

namespace comeback::pipeline {

namespace {

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson test_json(const stats::TestResult& r) {
  ojson j;
  j["method"] = std::string(stats::to_string(r.method));
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["effect"] = optional_json(r.effect);
  j["n1"] = r.n1;
  j["n2"] = r.n2;
  if (r.method == stats::Method::MWU) j["exact"] = r.exact;
  if (r.df) j["df"] = *r.df;
  return j;
}

template <typename F>
ojson guarded(F&& f) {
  try {
    return f();
  } catch (const ParameterError& e) {
    return ojson{{"error", e.what()}};
  } catch (const NumericError& e) {
    return ojson{{"error", e.what()}};
  }
}

ojson curve_json(const stats::SurvivalCurve& c) {
  ojson j;
  j["times"] = c.times;
  j["survival"] = c.survival;
  j["at_risk"] = c.at_risk;
  j["events"] = c.events;
  j["censored"] = c.censored;
  return j;
}

ojson survival_block(std::span<const AuthorCareer> careers, const std::vector<std::size_t>& a,
                     const std::vector<std::size_t>& b, const char* name_a, const char* name_b) {
  ojson j;
  j["groups"] = {name_a, name_b};
  j["n"] = {a.size(), b.size()};
  if (a.empty() || b.empty()) {
    j["error"] = "a survival group is empty";
    return j;
  }
  const auto sa = survival_sample(careers, a);
  const auto sb = survival_sample(careers, b);
  j["curves"][name_a] = curve_json(stats::kaplan_meier(sa.durations, sa.events));
  j["curves"][name_b] = curve_json(stats::kaplan_meier(sb.durations, sb.events));
  j["log_rank"] = test_json(stats::log_rank(sa, sb));
  return j;
}

ojson eval_json(const predict::EvalReport& r, bool with_roc) {
  ojson j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["roc_auc"] = r.roc_auc;
  j["confusion"] = {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}};
  if (with_roc) {
    ojson pts = ojson::array();
    for (const auto& [f, t] : r.roc_points) pts.push_back({f, t});
    j["roc_points"] = std::move(pts);
  }
  return j;
}

std::string exception_kind(const std::exception& e, int& code) {
  if (dynamic_cast<const ParameterError*>(&e)) {
    code = 2;
    return "ParameterError";
  }
  if (dynamic_cast<const DataError*>(&e)) {
    code = 3;
    return "DataError";
  }
  if (dynamic_cast<const NumericError*>(&e)) {
    code = 4;
    return "NumericError";
  }
  code = 1;
  return "InternalError";
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericError("SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_file(path)); }

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

stats::SurvivalSample survival_sample(std::span<const AuthorCareer> careers,
                                      const std::vector<std::size_t>& members) {
  stats::SurvivalSample s;
  for (std::size_t i : members) {
    const auto& c = careers[i];
    s.durations.push_back(static_cast<double>(c.last_year() - c.first_year() + 1));
    s.events.push_back(c.label == CohortLabel::Dropout);
  }
  return s;
}

ojson stats_report(std::span<const FeatureRow> rows, std::span<const AuthorCareer> careers,
                   const StatsOptions& options) {
  ojson report;
  std::map<std::string, std::size_t> counts{{"Comeback", 0}, {"Dropout", 0}, {"Active", 0}};
  for (const auto& r : rows) ++counts[std::string(to_string(r.label))];
  report["n_authors"] = {{"Comeback", counts["Comeback"]},
                         {"Dropout", counts["Dropout"]},
                         {"Active", counts["Active"]}};
  report["groups"] = {"Comeback", "Dropout"};

  ojson metrics = ojson::array();
  std::vector<double> mwu_p, welch_p;
  std::vector<std::size_t> mwu_at, welch_at;
  for (std::size_t m = 0; m < kAllFeatures.size(); ++m) {
    const Feature f = kAllFeatures[m];
    std::vector<double> x, y;
    for (const auto& r : rows) {
      const auto v = feature_value(r, f);
      if (!v) continue;
      if (r.label == CohortLabel::Comeback) x.push_back(*v);
      if (r.label == CohortLabel::Dropout) y.push_back(*v);
    }
    ojson e;
    e["metric"] = std::string(feature_name(f));
    e["n_comeback"] = x.size();
    e["n_dropout"] = y.size();
    e["mean_comeback"] = x.empty() ? ojson(nullptr) : ojson(stats::mean(x));
    e["mean_dropout"] = y.empty() ? ojson(nullptr) : ojson(stats::mean(y));
    if (x.empty() || y.empty()) {
      e["error"] = "a group has no defined values";
      metrics.push_back(std::move(e));
      continue;
    }
    std::vector<double> sx = x, sy = y;
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    e["median_comeback"] = stats::quantile_sorted(sx, 0.5);
    e["median_dropout"] = stats::quantile_sorted(sy, 0.5);
    e["welch"] = guarded([&] { return test_json(stats::welch_t(x, y)); });
    e["mann_whitney"] = test_json(stats::mann_whitney_u(x, y));
    e["ks"] = test_json(stats::ks_test(x, y));
    e["cohens_d"] = optional_json(stats::cohens_d(x, y));
    e["cliffs_delta"] = stats::cliffs_delta(x, y);
    const auto ci = stats::bootstrap_mean_diff_ci(x, y, options.bootstrap_resamples, options.confidence,
                                                  derive_seed(options.seed, m), options.threads);
    e["bootstrap"] = {{"mean_diff", ci.mean_diff},         {"lo", ci.lo},
                      {"hi", ci.hi},                       {"confidence", ci.confidence},
                      {"n_resamples", ci.n_resamples},     {"seed", ci.seed},
                      {"contains_point_estimate", ci.contains_point_estimate}};
    mwu_p.push_back(e["mann_whitney"]["p_value"].get<double>());
    mwu_at.push_back(metrics.size());
    if (e["welch"].contains("p_value")) {
      welch_p.push_back(e["welch"]["p_value"].get<double>());
      welch_at.push_back(metrics.size());
    }
    metrics.push_back(std::move(e));
  }
  const auto bh_mwu = stats::benjamini_hochberg(mwu_p, options.alpha);
  for (std::size_t k = 0; k < mwu_at.size(); ++k) {
    metrics[mwu_at[k]]["mann_whitney"]["p_bh"] = bh_mwu.adjusted[k];
    metrics[mwu_at[k]]["mann_whitney"]["reject_bh"] = static_cast<bool>(bh_mwu.rejected[k]);
  }
  const auto bh_welch = stats::benjamini_hochberg(welch_p, options.alpha);
  for (std::size_t k = 0; k < welch_at.size(); ++k) {
    metrics[welch_at[k]]["welch"]["p_bh"] = bh_welch.adjusted[k];
    metrics[welch_at[k]]["welch"]["reject_bh"] = static_cast<bool>(bh_welch.rejected[k]);
  }
  report["alpha"] = options.alpha;
  report["metrics"] = std::move(metrics);

  ojson correlations = ojson::array();
  const std::vector<std::pair<Feature, Feature>> pairs{
      {Feature::B, Feature::XCC}, {Feature::B, Feature::ACC}, {Feature::B, Feature::H_g},
      {Feature::XCC, Feature::H_g}, {Feature::ACC, Feature::H_g}};
  for (const auto& [fa, fb] : pairs) {
    std::vector<double> a, b, p;
    for (const auto& r : rows) {
      if (r.label == CohortLabel::Active) continue;
      const auto va = feature_value(r, fa), vb = feature_value(r, fb);
      if (!va || !vb) continue;
      a.push_back(*va);
      b.push_back(*vb);
      p.push_back(static_cast<double>(r.P));
    }
    ojson c;
    c["x"] = std::string(feature_name(fa));
    c["y"] = std::string(feature_name(fb));
    c["n"] = a.size();
    if (a.size() >= 3) {
      c["spearman"] = optional_json(stats::spearman(a, b));
      c["partial_spearman_given_P"] = optional_json(stats::partial_spearman(a, b, p));
    } else {
      c["spearman"] = nullptr;
      c["partial_spearman_given_P"] = nullptr;
    }
    correlations.push_back(std::move(c));
  }
  report["correlations"] = std::move(correlations);

  if (!careers.empty()) {
    ojson cohort_summary = ojson::object();
    for (CohortLabel l : {CohortLabel::Comeback, CohortLabel::Dropout, CohortLabel::Active}) {
      std::vector<double> gaps, lengths;
      for (const auto& c : careers) {
        if (c.label != l) continue;
        gaps.push_back(c.max_gap);
        lengths.push_back(c.last_year() - c.first_year() + 1);
      }
      cohort_summary[std::string(to_string(l))] = {
          {"n", gaps.size()},
          {"mean_max_gap", gaps.empty() ? ojson(nullptr) : ojson(stats::mean(gaps))},
          {"mean_career_years", lengths.empty() ? ojson(nullptr) : ojson(stats::mean(lengths))}};
    }
    report["cohort_summary"] = std::move(cohort_summary);

    std::map<std::string, std::size_t> career_of;
    for (std::size_t i = 0; i < careers.size(); ++i) career_of[careers[i].author_id] = i;
    std::vector<std::size_t> cb, dropout;
    std::vector<std::pair<double, std::size_t>> by_b;
    for (const auto& r : rows) {
      auto it = career_of.find(r.author_id);
      if (it == career_of.end()) continue;
      if (r.label == CohortLabel::Comeback) cb.push_back(it->second);
      if (r.label == CohortLabel::Dropout) dropout.push_back(it->second);
      if (r.B) by_b.emplace_back(*r.B, it->second);
    }
    ojson survival;
    survival["duration"] = "last_year - first_year + 1";
    survival["event"] = "Dropout";
    survival["by_cohort"] = survival_block(careers, cb, dropout, "Comeback", "Dropout");
    std::vector<std::size_t> high, low;
    if (!by_b.empty()) {
      std::vector<double> bs;
      for (const auto& [b, _] : by_b) bs.push_back(b);
      std::sort(bs.begin(), bs.end());
      const double median = stats::quantile_sorted(bs, 0.5);
      for (const auto& [b, i] : by_b) (b > median ? high : low).push_back(i);
      survival["bridging_median"] = median;
    }
    survival["by_bridging"] = survival_block(careers, high, low, "High", "Low");
    report["survival"] = std::move(survival);
  }
  return report;
}

ojson cv_report_json(const predict::CVReport& report, std::span<const std::string> author_ids,
                     std::span<const int> labels) {
  ojson j;
  j["model"] = std::string(predict::to_string(report.model));
  j["feature_set"] = std::string(predict::to_string(report.feature_set));
  ojson cols = ojson::array();
  for (Feature f : report.columns) cols.push_back(std::string(feature_name(f)));
  j["columns"] = cols;
  j["pooled"] = eval_json(report.pooled, true);
  j["fold_mean"] = eval_json(report.fold_mean, false);
  ojson folds = ojson::array();
  for (const auto& r : report.per_fold) folds.push_back(eval_json(r, false));
  j["per_fold"] = std::move(folds);
  ojson cal = ojson::array();
  for (const auto& p : report.calibration) cal.push_back({{"A", p.A}, {"B", p.B}});
  j["calibration"] = std::move(cal);
  std::vector<std::size_t> order(report.columns.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.mean_abs_shap[a] > report.mean_abs_shap[b];
  });
  ojson ranking = ojson::array();
  for (std::size_t i : order) {
    ranking.push_back({{"feature", std::string(feature_name(report.columns[i]))},
                       {"mean_abs_shapley", report.mean_abs_shap[i]}});
  }
  j["shapley_ranking"] = std::move(ranking);
  ojson oof = ojson::array();
  for (std::size_t i = 0; i < report.oof_probability.size(); ++i) {
    oof.push_back({{"author_id", author_ids[i]},
                   {"label", labels[i] == 1 ? "Comeback" : "Dropout"},
                   {"probability", report.oof_probability[i]}});
  }
  j["out_of_fold"] = std::move(oof);
  return j;
}

ojson ablation_report_json(const predict::AblationReport& report,
                           const predict::CVOptions& options) {
  ojson j;
  j["rows"] = report.rows;
  j["dropped_missing"] = report.dropped_missing;
  j["folds"] = options.folds;
  j["seed"] = options.seed;
  ojson reports = ojson::array();
  for (std::size_t i = 0; i < report.baseline.size(); ++i) {
    reports.push_back(cv_report_json(report.baseline[i], report.author_ids, report.labels));
    reports.push_back(cv_report_json(report.bridging[i], report.author_ids, report.labels));
  }
  j["reports"] = std::move(reports);
  ojson contrast = ojson::array();
  for (std::size_t i = 0; i < report.baseline.size(); ++i) {
    contrast.push_back({{"model", std::string(predict::to_string(report.baseline[i].model))},
                        {"baseline_auc", report.baseline[i].pooled.roc_auc},
                        {"bridging_auc", report.bridging[i].pooled.roc_auc}});
  }
  j["auc_contrast"] = std::move(contrast);
  return j;
}

Corpus load_corpus(const fs::path& path) {
  auto parsed = parse_papers_file(path.string(), InputFormat::Jsonl, YearSpan{INT_MIN, INT_MAX});
  if (parsed.stats.dropped() > 0) {
    throw DataError("corpus " + path.string() + " has invalid records: " + parsed.stats.to_json());
  }
  return Corpus(std::move(parsed.papers));
}

IngestResult ingest(const fs::path& input, InputFormat format, YearSpan span,
                    const fs::path& out_corpus) {
  auto parsed = parse_papers_file(input.string(), format, span);
  const Corpus corpus(std::move(parsed.papers));
  std::ostringstream out;
  write_jsonl(out, corpus.papers());
  write_file(out_corpus, out.str());
  return {corpus.size(), parsed.stats};
}

void synthesize(const synth::SynthConfig& config, const fs::path& out_corpus,
                const fs::path& out_truth) {
  const auto generated = synth::generate_corpus(config);
  std::ostringstream out;
  write_jsonl(out, generated.papers);
  write_file(out_corpus, out.str());
  ojson truth = generated.truth.to_json();
  truth["config"] = config.to_json();
  write_file(out_truth, truth.dump(1) + "\n");
}

std::vector<AuthorCareer> label(const Corpus& corpus, int dataset_end_year, int gap_threshold,
                                std::optional<int> dropout_window_years) {
  return label_authors(corpus.author_index(), dataset_end_year, gap_threshold,
                       dropout_window_years);
}

fs::path manifest_path(const fs::path& artifact) {
  fs::path p = artifact;
  p += ".manifest.json";
  return p;
}

bool run_stage(const StageSpec& spec, bool force, const std::function<void()>& body) {
  ojson inputs = ojson::object();
  for (const auto& [name, path] : spec.inputs) {
    inputs[name] = {{"path", path.generic_string()}, {"sha256", file_sha256(path)}};
  }
  ojson key_material;
  key_material["subcommand"] = spec.name;
  key_material["flags"] = spec.flags;
  key_material["inputs"] = ojson::object();
  for (const auto& [name, in] : inputs.items()) key_material["inputs"][name] = in["sha256"];
  key_material["seed"] = spec.seed;
  key_material["version"] = std::string(kVersion);
  const std::string key = sha256_hex(key_material.dump());

  if (!force) {
    bool fresh = true;
    for (const auto& out : spec.outputs) {
      const auto mpath = manifest_path(out);
      if (!fs::exists(out) || !fs::exists(mpath)) {
        fresh = false;
        break;
      }
      try {
        const auto m = nlohmann::json::parse(read_file(mpath));
        if (m.value("key", "") != key || m.at("output").value("sha256", "") != file_sha256(out)) {
          fresh = false;
        }
      } catch (const nlohmann::json::exception&) {
        fresh = false;
      }
      if (!fresh) break;
    }
    if (fresh) return false;
  }

  const auto start = std::chrono::steady_clock::now();
  body();
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& out : spec.outputs) {
    ojson m;
    m["subcommand"] = spec.name;
    m["flags"] = spec.flags;
    m["inputs"] = inputs;
    m["seed"] = spec.seed;
    m["version"] = std::string(kVersion);
    m["key"] = key;
    m["output"] = {{"path", out.generic_string()}, {"sha256", file_sha256(out)}};
    m["duration_seconds"] = seconds;
    write_file(manifest_path(out), m.dump(2) + "\n");
  }
  return true;
}

void PipelineConfig::apply_seed(std::uint64_t s) {
  seed = s;
  communities.seed = s;
  stats.seed = s;
  cv.seed = s;
  if (synth) synth->seed = s;
}

void PipelineConfig::apply_threads(unsigned t) {
  threads = std::max(1U, t);
  stats.threads = threads;
  cv.threads = threads;
  cv.forest.threads = threads;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{
      "out_dir",        "input",          "input_format",    "synth",
      "start_year",     "end_year",       "gap_threshold",   "dropout_window_years",
      "exclude_self_citations", "reference_window_years", "resolution",
      "citations_within_window", "bootstrap_resamples", "confidence", "alpha",
      "folds",          "n_trees",        "max_depth",       "min_leaf",
      "mtry",           "l2",             "calibration_fraction", "shap_background",
      "shap_instances", "seed",           "threads"};
  if (!j.is_object()) throw ParameterError("pipeline config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ParameterError("unknown pipeline config key '" + key + "'");
  }
  PipelineConfig c;
  try {
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("input_format")) c.input_format = parse_input_format(j.at("input_format").get<std::string>());
    if (j.contains("synth")) {
      c.synth = synth::SynthConfig::from_json(j.at("synth"));
      c.span = c.synth->span;
    }
    if (c.input && c.synth) throw ParameterError("config sets both input and synth");
    if (!c.input && !c.synth) throw ParameterError("config needs either input or synth");
    c.span.first = j.value("start_year", c.span.first);
    c.span.last = j.value("end_year", c.span.last);
    c.gap_threshold = j.value("gap_threshold", c.gap_threshold);
    if (j.contains("dropout_window_years") && !j.at("dropout_window_years").is_null()) {
      c.dropout_window_years = j.at("dropout_window_years").get<int>();
    }
    c.communities.graph.exclude_self_citations = j.value("exclude_self_citations", false);
    if (j.contains("reference_window_years") && !j.at("reference_window_years").is_null()) {
      c.communities.graph.reference_window_years = j.at("reference_window_years").get<int>();
    }
    c.communities.resolution = j.value("resolution", 1.0);
    c.metrics.citations_within_window = j.value("citations_within_window", false);
    c.stats.bootstrap_resamples = j.value("bootstrap_resamples", c.stats.bootstrap_resamples);
    c.stats.confidence = j.value("confidence", c.stats.confidence);
    c.stats.alpha = j.value("alpha", c.stats.alpha);
    c.cv.folds = j.value("folds", c.cv.folds);
    c.cv.forest.n_trees = j.value("n_trees", c.cv.forest.n_trees);
    c.cv.forest.max_depth = j.value("max_depth", c.cv.forest.max_depth);
    c.cv.forest.min_leaf = j.value("min_leaf", c.cv.forest.min_leaf);
    c.cv.forest.mtry = j.value("mtry", c.cv.forest.mtry);
    c.cv.logistic.l2_strength = j.value("l2", c.cv.logistic.l2_strength);
    c.cv.calibration_fraction = j.value("calibration_fraction", c.cv.calibration_fraction);
    c.cv.shap_background = j.value("shap_background", c.cv.shap_background);
    c.cv.shap_instances_per_fold = j.value("shap_instances", c.cv.shap_instances_per_fold);
    const std::uint64_t seed = j.value("seed", c.synth ? c.synth->seed : std::uint64_t{0});
    c.apply_seed(seed);
    c.apply_threads(j.value("threads", 1U));
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("invalid pipeline config: ") + e.what());
  }
  if (c.span.first > c.span.last) throw ParameterError("start_year must not exceed end_year");
  if (c.gap_threshold < 1) throw ParameterError("gap_threshold must be >= 1");
  if (!(c.communities.resolution > 0.0)) throw ParameterError("resolution must be > 0");
  if (c.cv.folds < 2) throw ParameterError("folds must be >= 2");
  if (!(c.cv.calibration_fraction > 0.0 && c.cv.calibration_fraction < 1.0)) {
    throw ParameterError("calibration_fraction must lie in (0, 1)");
  }
  return c;
}

std::vector<StageOutcome> run_pipeline(const PipelineConfig& config, bool force) {
  const fs::path dir = config.out_dir;
  fs::create_directories(dir);
  const fs::path corpus_path = dir / "corpus.jsonl", truth_path = dir / "truth.json",
                 cohorts_path = dir / "cohorts.csv", graph_path = dir / "graph.csv",
                 partition_path = dir / "partition.jsonl", features_path = dir / "features.csv",
                 stats_path = dir / "stats.json", predictions_path = dir / "predictions.json";
  const int end_year = config.span.last;
  const auto graph_opts = config.communities.graph;

  std::vector<StageOutcome> outcomes;
  std::map<std::string, bool> ran;
  auto stage = [&](const StageSpec& spec, std::initializer_list<const char*> deps,
                   const std::function<void()>& body) {
    bool upstream = false;
    for (const char* d : deps) upstream = upstream || ran[d];
    try {
      ran[spec.name] = run_stage(spec, force || upstream, body);
    } catch (const std::exception& e) {
      int code = 1;
      ojson err;
      err["stage"] = spec.name;
      err["error_type"] = exception_kind(e, code);
      err["message"] = e.what();
      err["exit_code"] = code;
      err["completed_stages"] = ojson::array();
      for (const auto& o : outcomes) err["completed_stages"].push_back(o.stage);
      write_file(dir / "error.json", err.dump(2) + "\n");
      throw;
    }
    outcomes.push_back({spec.name, ran[spec.name]});
  };
  if (fs::exists(dir / "error.json")) fs::remove(dir / "error.json");

  auto graph_flags = [&] {
    ojson f;
    f["end_year"] = end_year;
    f["exclude_self_citations"] = graph_opts.exclude_self_citations;
    f["reference_window_years"] =
        graph_opts.reference_window_years ? ojson(*graph_opts.reference_window_years) : ojson(nullptr);
    return f;
  };

  if (config.synth) {
    StageSpec spec{"synth", {{"config", config.synth->to_json()}}, {}, {corpus_path, truth_path},
                   config.synth->seed};
    stage(spec, {}, [&] { synthesize(*config.synth, corpus_path, truth_path); });
  } else {
    StageSpec spec{"ingest",
                   {{"format", config.input_format == InputFormat::Aminer ? "aminer" : "jsonl"},
                    {"start_year", config.span.first},
                    {"end_year", config.span.last}},
                   {{"input", *config.input}},
                   {corpus_path},
                   0};
    stage(spec, {}, [&] {
      const auto r = ingest(*config.input, config.input_format, config.span, corpus_path);
      std::cerr << r.stats.to_json() << '\n';
    });
  }
  const std::string corpus_stage = config.synth ? "synth" : "ingest";
  const char* cs = corpus_stage.c_str();

  {
    ojson flags = {{"end_year", end_year}, {"gap_threshold", config.gap_threshold}};
    flags["dropout_window_years"] =
        config.dropout_window_years ? ojson(*config.dropout_window_years) : ojson(nullptr);
    stage({"label", flags, {{"corpus", corpus_path}}, {cohorts_path}, 0}, {cs}, [&] {
      const auto corpus = load_corpus(corpus_path);
      const auto careers = label(corpus, end_year, config.gap_threshold, config.dropout_window_years);
      std::ostringstream out;
      write_cohorts_csv(out, careers);
      write_file(cohorts_path, out.str());
    });
  }
  stage({"graph", graph_flags(), {{"corpus", corpus_path}}, {graph_path}, 0}, {cs}, [&] {
    const auto corpus = load_corpus(corpus_path);
    const auto graph = build_citation_graph(corpus, end_year, graph_opts);
    std::ostringstream out;
    write_graph_csv(out, corpus, graph);
    write_file(graph_path, out.str());
  });
  {
    ojson flags = graph_flags();
    flags["resolution"] = config.communities.resolution;
    stage({"communities", flags, {{"corpus", corpus_path}, {"graph", graph_path}}, {partition_path},
           config.communities.seed},
          {cs, "graph"}, [&] {
            const auto corpus = load_corpus(corpus_path);
            std::ifstream gin(graph_path);
            const auto graph = read_graph_csv(gin, corpus, end_year, graph_opts);
            const auto partition =
                louvain_partition(graph, config.communities.resolution, config.communities.seed);
            std::ostringstream out;
            write_partition_jsonl(out, corpus, graph, partition);
            write_file(partition_path, out.str());
          });
  }
  {
    ojson flags = graph_flags();
    flags["citations_within_window"] = config.metrics.citations_within_window;
    stage({"metrics",
           flags,
           {{"corpus", corpus_path},
            {"graph", graph_path},
            {"partition", partition_path},
            {"cohorts", cohorts_path}},
           {features_path},
           0},
          {cs, "graph", "communities", "label"}, [&] {
            const auto corpus = load_corpus(corpus_path);
            std::ifstream gin(graph_path), pin(partition_path), cin(cohorts_path);
            const auto graph = read_graph_csv(gin, corpus, end_year, graph_opts);
            const auto partition = read_partition_jsonl(pin, corpus, graph);
            const auto careers = read_cohorts_csv(cin, end_year);
            const auto rows = compute_all_features(corpus, graph, partition, careers, config.metrics,
                                                   config.threads);
            std::ostringstream out;
            write_features_csv(out, rows);
            write_file(features_path, out.str());
          });
  }
  {
    ojson flags = {{"bootstrap_resamples", config.stats.bootstrap_resamples},
                   {"confidence", config.stats.confidence},
                   {"alpha", config.stats.alpha}};
    stage({"stats", flags, {{"features", features_path}, {"cohorts", cohorts_path}}, {stats_path},
           config.stats.seed},
          {"metrics", "label"}, [&] {
            std::ifstream fin(features_path), cin(cohorts_path);
            const auto rows = read_features_csv(fin);
            const auto careers = read_cohorts_csv(cin, end_year);
            write_file(stats_path, stats_report(rows, careers, config.stats).dump(2) + "\n");
          });
  }
  {
    ojson flags = {{"folds", config.cv.folds},
                   {"n_trees", config.cv.forest.n_trees},
                   {"max_depth", config.cv.forest.max_depth},
                   {"min_leaf", config.cv.forest.min_leaf},
                   {"mtry", config.cv.forest.mtry},
                   {"l2", config.cv.logistic.l2_strength},
                   {"calibration_fraction", config.cv.calibration_fraction},
                   {"shap_background", config.cv.shap_background},
                   {"shap_instances", config.cv.shap_instances_per_fold}};
    stage({"predict", flags, {{"features", features_path}}, {predictions_path}, config.cv.seed},
          {"metrics"}, [&] {
            std::ifstream fin(features_path);
            const auto rows = read_features_csv(fin);
            const auto report = predict::ablation_run(rows, config.cv);
            write_file(predictions_path, ablation_report_json(report, config.cv).dump(2) + "\n");
          });
  }
  return outcomes;
}

}  // namespace comeback::pipeline
