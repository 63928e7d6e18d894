#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "comeback/errors.hpp"
#include "comeback/pipeline.hpp"
#include "comeback/tables.hpp"

using namespace comeback;
namespace pl = comeback::pipeline;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 1;
  std::string config;
};

nlohmann::json load_json(const std::string& path) {
  try {
    return nlohmann::json::parse(pl::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("config " + path + " is not valid JSON: " + e.what());
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  return in;
}

int dataset_end(const Corpus& corpus, std::optional<int> year) {
  if (year) return *year;
  const auto y = corpus.max_year();
  if (!y) throw DataError("corpus is empty");
  return *y;
}

pl::ojson optional_flag(const std::optional<int>& v) {
  return v ? pl::ojson(*v) : pl::ojson(nullptr);
}

std::string dump(const pl::ojson& j) { return j.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Comeback researcher analysis pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Run seed")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "JSON config (run: pipeline config, synth: generator config)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse a raw corpus into canonical JSONL");
  std::string ingest_input, ingest_format = "jsonl", ingest_out = "corpus.jsonl";
  YearSpan ingest_span;
  ingest->add_option("--input", ingest_input, "Input path or -")->required();
  ingest->add_option("--format", ingest_format, "jsonl|aminer")->check(CLI::IsMember({"jsonl", "aminer"}));
  ingest->add_option("--start-year", ingest_span.first);
  ingest->add_option("--end-year", ingest_span.last);
  ingest->add_option("--out", ingest_out);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted synthetic corpus");
  std::string synth_out = "corpus.jsonl", synth_truth = "truth.json";
  synth_cmd->add_option("--out", synth_out);
  synth_cmd->add_option("--truth", synth_truth);

  // label
  auto* label_cmd = app.add_subcommand("label", "Classify authors into cohorts");
  std::string label_corpus = "corpus.jsonl", label_out = "cohorts.csv";
  std::optional<int> label_end, label_window;
  int label_gap = 3;
  label_cmd->add_option("--corpus", label_corpus);
  label_cmd->add_option("--end-year", label_end, "Dataset end year (default: latest corpus year)");
  label_cmd->add_option("--gap", label_gap, "Gap threshold in years")->check(CLI::PositiveNumber);
  label_cmd->add_option("--dropout-window", label_window, "Dropout window length in years");
  label_cmd->add_option("--out", label_out);

  // communities
  auto* comm = app.add_subcommand("communities", "Build the citation graph and run Louvain");
  std::string comm_corpus = "corpus.jsonl", comm_out = "partition.jsonl", comm_graph_out = "graph.csv";
  std::optional<int> comm_year, comm_window;
  double comm_gamma = 1.0;
  bool comm_exclude_self = false;
  comm->add_option("--corpus", comm_corpus);
  comm->add_option("--year", comm_year, "Graph cutoff year (default: latest corpus year)");
  comm->add_option("--gamma", comm_gamma, "Resolution");
  comm->add_flag("--exclude-self-citations", comm_exclude_self);
  comm->add_option("--ref-window", comm_window, "Keep edges spanning at most K years");
  comm->add_option("--graph-out", comm_graph_out);
  comm->add_option("--out", comm_out);

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "Compute per-author features");
  std::string m_corpus = "corpus.jsonl", m_graph = "graph.csv", m_partition = "partition.jsonl",
              m_cohorts = "cohorts.csv", m_out = "features.csv";
  std::optional<int> m_year;
  bool m_within = false;
  metrics_cmd->add_option("--corpus", m_corpus);
  metrics_cmd->add_option("--graph", m_graph);
  metrics_cmd->add_option("--partition", m_partition);
  metrics_cmd->add_option("--cohorts", m_cohorts);
  metrics_cmd->add_option("--year", m_year, "Graph cutoff year (default: latest corpus year)");
  metrics_cmd->add_flag("--citations-within-window", m_within);
  metrics_cmd->add_option("--out", m_out);

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Comeback vs Dropout statistical battery");
  std::string s_features = "features.csv", s_out = "stats.json";
  std::optional<std::string> s_cohorts;
  pl::StatsOptions s_opts;
  stats_cmd->add_option("--features", s_features);
  stats_cmd->add_option("--cohorts", s_cohorts, "Cohorts CSV; enables the survival block");
  stats_cmd->add_option("--bootstrap", s_opts.bootstrap_resamples)->check(CLI::PositiveNumber);
  stats_cmd->add_option("--confidence", s_opts.confidence);
  stats_cmd->add_option("--alpha", s_opts.alpha);
  stats_cmd->add_option("--out", s_out);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Cross-validated Comeback vs Dropout classifier");
  std::string p_features = "features.csv", p_set = "bridging", p_model = "rf", p_out = "report.json";
  predict::CVOptions p_opts;
  predict_cmd->add_option("--features", p_features);
  predict_cmd->add_option("--set", p_set, "baseline|bridging");
  predict_cmd->add_option("--model", p_model, "lr|rf");
  predict_cmd->add_option("--folds", p_opts.folds);
  predict_cmd->add_option("--trees", p_opts.forest.n_trees);
  predict_cmd->add_option("--max-depth", p_opts.forest.max_depth);
  predict_cmd->add_option("--min-leaf", p_opts.forest.min_leaf);
  predict_cmd->add_option("--l2", p_opts.logistic.l2_strength);
  predict_cmd->add_option("--out", p_out);

  // run
  auto* run_cmd = app.add_subcommand("run", "Run every stage, resuming from cached artifacts");
  std::optional<std::string> run_out;
  bool run_force = false;
  run_cmd->add_option("--out-dir", run_out, "Overrides out_dir from the config");
  run_cmd->add_flag("--force", run_force, "Recompute every stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const unsigned threads = std::max(1U, g.threads);
    auto require_no_config = [&](const char* cmd) {
      if (!g.config.empty()) throw ParameterError(std::string("--config is not used by ") + cmd);
    };

    if (ingest->parsed()) {
      require_no_config("ingest");
      const auto format = parse_input_format(ingest_format);
      pl::StageSpec spec{"ingest",
                         {{"format", ingest_format},
                          {"start_year", ingest_span.first},
                          {"end_year", ingest_span.last}},
                         {},
                         {ingest_out},
                         g.seed};
      if (ingest_input != "-") spec.inputs.push_back({"input", ingest_input});
      pl::run_stage(spec, true, [&] {
        const auto r = pl::ingest(ingest_input, format, ingest_span, ingest_out);
        std::cerr << r.stats.to_json() << '\n';
      });
    } else if (synth_cmd->parsed()) {
      synth::SynthConfig config;
      if (!g.config.empty()) config = synth::SynthConfig::from_json(load_json(g.config));
      if (g.seed_given) config.seed = g.seed;
      config.validate();
      pl::StageSpec spec{"synth", {{"config", config.to_json()}}, {}, {synth_out, synth_truth},
                         config.seed};
      pl::run_stage(spec, true, [&] { pl::synthesize(config, synth_out, synth_truth); });
    } else if (label_cmd->parsed()) {
      require_no_config("label");
      const auto corpus = pl::load_corpus(label_corpus);
      const int end = dataset_end(corpus, label_end);
      pl::StageSpec spec{"label",
                         {{"end_year", end}, {"gap", label_gap},
                          {"dropout_window", optional_flag(label_window)}},
                         {{"corpus", label_corpus}},
                         {label_out},
                         g.seed};
      pl::run_stage(spec, true, [&] {
        const auto careers = pl::label(corpus, end, label_gap, label_window);
        std::ostringstream out;
        write_cohorts_csv(out, careers);
        pl::write_file(label_out, out.str());
      });
    } else if (comm->parsed()) {
      require_no_config("communities");
      const auto corpus = pl::load_corpus(comm_corpus);
      const int year = dataset_end(corpus, comm_year);
      GraphOptions gopts{comm_exclude_self, comm_window};
      pl::ojson flags = {{"year", year},
                         {"gamma", comm_gamma},
                         {"exclude_self_citations", comm_exclude_self},
                         {"ref_window", optional_flag(comm_window)}};
      pl::run_stage({"communities", flags, {{"corpus", comm_corpus}}, {comm_graph_out, comm_out}, g.seed},
                    true, [&] {
                      const auto graph = build_citation_graph(corpus, year, gopts);
                      const auto partition = louvain_partition(graph, comm_gamma, g.seed);
                      std::ostringstream gout, pout;
                      write_graph_csv(gout, corpus, graph);
                      write_partition_jsonl(pout, corpus, graph, partition);
                      pl::write_file(comm_graph_out, gout.str());
                      pl::write_file(comm_out, pout.str());
                    });
    } else if (metrics_cmd->parsed()) {
      require_no_config("metrics");
      const auto corpus = pl::load_corpus(m_corpus);
      const int year = dataset_end(corpus, m_year);
      pl::ojson flags = {{"year", year}, {"citations_within_window", m_within}};
      pl::run_stage({"metrics",
                     flags,
                     {{"corpus", m_corpus}, {"graph", m_graph}, {"partition", m_partition}, {"cohorts", m_cohorts}},
                     {m_out},
                     g.seed},
                    true, [&] {
                      auto gin = open_input(m_graph);
                      auto pin = open_input(m_partition);
                      auto cin = open_input(m_cohorts);
                      const auto graph = read_graph_csv(gin, corpus, year);
                      const auto partition = read_partition_jsonl(pin, corpus, graph);
                      const auto careers = read_cohorts_csv(cin, year);
                      MetricOptions mopts{m_within};
                      const auto rows = compute_all_features(corpus, graph, partition, careers, mopts, threads);
                      std::ostringstream out;
                      write_features_csv(out, rows);
                      pl::write_file(m_out, out.str());
                    });
    } else if (stats_cmd->parsed()) {
      require_no_config("stats");
      s_opts.seed = g.seed;
      s_opts.threads = threads;
      pl::StageSpec spec{"stats",
                         {{"bootstrap", s_opts.bootstrap_resamples},
                          {"confidence", s_opts.confidence},
                          {"alpha", s_opts.alpha}},
                         {{"features", s_features}},
                         {s_out},
                         g.seed};
      if (s_cohorts) spec.inputs.push_back({"cohorts", *s_cohorts});
      pl::run_stage(spec, true, [&] {
        auto fin = open_input(s_features);
        const auto rows = read_features_csv(fin);
        std::vector<AuthorCareer> careers;
        if (s_cohorts) {
          auto cin = open_input(*s_cohorts);
          careers = read_cohorts_csv(cin, 0);
        }
        pl::write_file(s_out, dump(pl::stats_report(rows, careers, s_opts)));
      });
    } else if (predict_cmd->parsed()) {
      require_no_config("predict");
      const auto set = predict::parse_feature_set(p_set);
      const auto kind = predict::parse_model_kind(p_model);
      p_opts.seed = g.seed;
      p_opts.threads = threads;
      pl::ojson flags = {{"set", p_set},
                         {"model", p_model},
                         {"folds", p_opts.folds},
                         {"trees", p_opts.forest.n_trees},
                         {"max_depth", p_opts.forest.max_depth},
                         {"min_leaf", p_opts.forest.min_leaf},
                         {"l2", p_opts.logistic.l2_strength}};
      pl::run_stage({"predict", flags, {{"features", p_features}}, {p_out}, g.seed}, true, [&] {
        auto fin = open_input(p_features);
        const auto rows = read_features_csv(fin);
        const auto data = predict::assemble_features(rows, set);
        const auto folds = predict::stratified_folds(data.y, p_opts.folds, p_opts.seed);
        auto report = predict::cross_validate(data, folds, kind, p_opts);
        report.feature_set = set;
        pl::ojson j;
        j["rows"] = data.y.size();
        j["dropped_missing"] = data.dropped_missing;
        j["folds"] = p_opts.folds;
        j["seed"] = p_opts.seed;
        j["report"] = pl::cv_report_json(report, data.author_ids, data.y);
        pl::write_file(p_out, dump(j));
      });
    } else if (run_cmd->parsed()) {
      if (g.config.empty()) throw ParameterError("run needs --config");
      auto config = pl::PipelineConfig::from_json(load_json(g.config));
      if (g.seed_given) config.apply_seed(g.seed);
      config.apply_threads(threads);
      if (run_out) config.out_dir = *run_out;
      for (const auto& o : pl::run_pipeline(config, run_force)) {
        std::cerr << o.stage << ": " << (o.ran ? "ran" : "cached") << '\n';
      }
    }
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
