#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "comeback/cohort.hpp"
#include "comeback/corpus.hpp"
#include "comeback/graph.hpp"

namespace comeback::synth {

// Uniform on [mean - spread, mean + spread], clipped to [0, 1].
struct ProbabilityRange {
  double mean = 0.0;
  double spread = 0.0;
};

struct IntRange {
  int min = 0;
  int max = 0;
};

// Per-cohort behaviour. Index with CohortLabel.
struct CohortBehaviour {
  ProbabilityRange cross_cite;  // rho
  double breadth = 0.0;         // chance a paper lands outside the home community
  double irregular_gap = 0.0;   // chance a pre-gap inter-publication gap is 2 years
};

struct SynthConfig {
  int n_communities = 8;
  int papers_per_community_per_year = 10;
  YearSpan span{1980, 2014};
  int n_authors = 2000;
  std::array<double, 3> cohort_mix{0.3, 0.4, 0.3};  // CB, DO, AC
  std::array<CohortBehaviour, 3> cohorts{
      CohortBehaviour{{0.45, 0.1}, 0.45, 0.5},
      CohortBehaviour{{0.25, 0.1}, 0.10, 0.1},
      CohortBehaviour{{0.30, 0.1}, 0.20, 0.15},
  };
  ProbabilityRange background_cross_cite{0.1, 0.05};
  IntRange refs_per_paper{8, 16};
  IntRange papers_before_gap{8, 16};
  IntRange active_years_before_gap{4, 8};
  IntRange comeback_gap{3, 8};
  int staff_per_community = 4;
  double self_cite_prob = 0.02;
  std::uint64_t seed = 0;

  // Throws ParameterError when the configuration can't be generated.
  void validate() const;

  static SynthConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct AuthorTruth {
  std::string author_id;
  CohortLabel label = CohortLabel::Active;
  double cross_cite = 0.0;
  int home_community = 0;
  int papers = 0;
  std::optional<int> return_year;
};

struct GroundTruth {
  std::vector<AuthorTruth> authors;             // focal authors, sorted by id
  std::map<std::string, int> paper_community;   // every paper

  nlohmann::json to_json() const;
};

struct SynthCorpus {
  std::vector<PaperRecord> papers;  // ids ascend with year
  GroundTruth truth;
};

SynthCorpus generate_corpus(const SynthConfig& config);

// Planted community per graph node, compacted to 0..k-1 in node order.
Partition planted_partition(const Corpus& corpus, const CitationGraph& graph,
                            const GroundTruth& truth);

struct PlantedGraph {
  std::size_t node_count = 0;
  std::vector<std::pair<int, int>> edges;  // u < v
  std::vector<int> labels;
};

// Stochastic block model with equal-sized blocks.
PlantedGraph planted_block_graph(int blocks, int block_size, double p_in, double p_out,
                                 std::uint64_t seed);

}  // namespace comeback::synth
