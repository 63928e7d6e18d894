#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comeback/cohort.hpp"
#include "comeback/corpus.hpp"
#include "comeback/graph.hpp"
#include "comeback/metrics.hpp"
#include "comeback/predict.hpp"
#include "comeback/stats.hpp"
#include "comeback/synth.hpp"
#include "json.hpp"

namespace comeback::pipeline {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

inline constexpr std::string_view kVersion = "0.3.0";

std::string sha256_hex(std::string_view bytes);
// Throws DataError when the file can't be read.
std::string file_sha256(const fs::path& path);

std::string read_file(const fs::path& path);
// Writes through a temporary file and renames it into place.
void write_file(const fs::path& path, std::string_view bytes);

// ---------------------------------------------------------------------------
// Reports

struct StatsOptions {
  std::size_t bootstrap_resamples = 10000;
  double confidence = 0.95;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Comeback vs Dropout comparison for every metric, BH adjustment across
// metrics, rank correlations, and (when careers are given) survival blocks.
ojson stats_report(std::span<const FeatureRow> rows, std::span<const AuthorCareer> careers,
                   const StatsOptions& options);

// Survival duration: last - first + 1 years; event: Dropout.
stats::SurvivalSample survival_sample(std::span<const AuthorCareer> careers,
                                      const std::vector<std::size_t>& members);

ojson cv_report_json(const predict::CVReport& report, std::span<const std::string> author_ids,
                     std::span<const int> labels);
ojson ablation_report_json(const predict::AblationReport& report,
                           const predict::CVOptions& options);

// ---------------------------------------------------------------------------
// Stage bodies shared by the CLI subcommands and run_pipeline

Corpus load_corpus(const fs::path& path);

struct IngestResult {
  std::size_t papers = 0;
  ParseStats stats;
};
IngestResult ingest(const fs::path& input, InputFormat format, YearSpan span,
                    const fs::path& out_corpus);

void synthesize(const synth::SynthConfig& config, const fs::path& out_corpus,
                const fs::path& out_truth);

std::vector<AuthorCareer> label(const Corpus& corpus, int dataset_end_year, int gap_threshold,
                                std::optional<int> dropout_window_years);

struct CommunityOptions {
  GraphOptions graph;
  double resolution = 1.0;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Manifests and the resumable runner

struct StageSpec {
  std::string name;
  ojson flags = ojson::object();
  std::vector<std::pair<std::string, fs::path>> inputs;
  std::vector<fs::path> outputs;
  std::uint64_t seed = 0;
};

fs::path manifest_path(const fs::path& artifact);

// Runs `body` unless every output exists with a manifest whose cache key and
// output digest still match. Returns whether the body ran. Each output gets
// a manifest: subcommand, flags, input digests, seed, version, duration.
bool run_stage(const StageSpec& spec, bool force, const std::function<void()>& body);

struct PipelineConfig {
  fs::path out_dir = "out";
  std::optional<fs::path> input;
  InputFormat input_format = InputFormat::Jsonl;
  std::optional<synth::SynthConfig> synth;
  YearSpan span;
  int gap_threshold = 3;
  std::optional<int> dropout_window_years;
  CommunityOptions communities;
  MetricOptions metrics;
  StatsOptions stats;
  predict::CVOptions cv;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  // Unknown keys raise ParameterError. `seed` and `threads` fan out to every
  // stage that consumes them.
  static PipelineConfig from_json(const nlohmann::json& j);
  void apply_seed(std::uint64_t seed);
  void apply_threads(unsigned threads);
};

struct StageOutcome {
  std::string stage;
  bool ran = false;
};

inline constexpr std::array<std::string_view, 7> kArtifacts{
    "corpus.jsonl", "cohorts.csv",  "graph.csv",       "partition.jsonl",
    "features.csv", "stats.json", "predictions.json"};

// corpus -> cohorts -> graph -> partition -> features -> stats -> predictions.
// A stage reruns when its cache is stale or any upstream stage reran. On
// failure `error.json` is written to out_dir and the exception propagates.
std::vector<StageOutcome> run_pipeline(const PipelineConfig& config, bool force = false);

}  // namespace comeback::pipeline
