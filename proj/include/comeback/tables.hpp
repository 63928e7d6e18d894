#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comeback/cohort.hpp"
#include "comeback/corpus.hpp"
#include "comeback/graph.hpp"
#include "comeback/metrics.hpp"

namespace comeback {

// Shortest round-trip decimal for a double.
std::string format_double(double value);

std::string csv_escape(std::string_view field);
// Splits one CSV record; handles quoted fields with doubled quotes.
std::vector<std::string> csv_split(std::string_view line);

// author_id,label,first_year,last_year,max_gap,return_year,window_start,window_end
void write_cohorts_csv(std::ostream& out, std::span<const AuthorCareer> careers);
// Careers read back carry only the first and last year in `years`.
std::vector<AuthorCareer> read_cohorts_csv(std::istream& in, int dataset_end_year);

// citing,cited
void write_graph_csv(std::ostream& out, const Corpus& corpus, const CitationGraph& graph);
// Rebuilds the graph over every corpus paper up to `year_cutoff`. Edges that
// name unknown or later papers raise DataError.
CitationGraph read_graph_csv(std::istream& in, const Corpus& corpus, int year_cutoff,
                             const GraphOptions& options = {});

// One {"paper","community"} line per node, then a trailer line with
// modularity, n_communities, resolution and seed.
void write_partition_jsonl(std::ostream& out, const Corpus& corpus, const CitationGraph& graph,
                           const Partition& partition);
Partition read_partition_jsonl(std::istream& in, const Corpus& corpus, const CitationGraph& graph);

// author_id,label,P,C,h,B,ACC,XCC,H_g (missing values are empty fields)
void write_features_csv(std::ostream& out, std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_features_csv(std::istream& in);

}  // namespace comeback
