#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "comeback/corpus.hpp"

namespace comeback {

struct GraphOptions {
  bool exclude_self_citations = false;
  // Keep only edges with |year(citing) - year(cited)| <= k.
  std::optional<int> reference_window_years;
};

// Directed citation graph over the papers published up to `year_cutoff`.
// Node ids are dense; node i is corpus paper `nodes[i]` (ascending).
class CitationGraph {
 public:
  CitationGraph() = default;
  CitationGraph(int year_cutoff, GraphOptions options,
                std::vector<std::size_t> nodes, std::size_t corpus_size,
                std::vector<std::pair<int, int>> edges);

  int year_cutoff() const { return year_cutoff_; }
  const GraphOptions& options() const { return options_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return nodes_.empty(); }

  const std::vector<std::size_t>& nodes() const { return nodes_; }
  // Sorted, unique (citing, cited) node pairs.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // Node id of a corpus paper, or -1 when the paper isn't in the graph.
  int node_of(std::size_t paper) const {
    return paper < node_of_paper_.size() ? node_of_paper_[paper] : -1;
  }
  std::span<const int> out_neighbors(int node) const {
    return {out_targets_.data() + out_offsets_[node],
            out_targets_.data() + out_offsets_[node + 1]};
  }
  std::span<const int> in_neighbors(int node) const {
    return {in_sources_.data() + in_offsets_[node],
            in_sources_.data() + in_offsets_[node + 1]};
  }
  int in_degree(int node) const {
    return static_cast<int>(in_offsets_[node + 1] - in_offsets_[node]);
  }

 private:
  int year_cutoff_ = 0;
  GraphOptions options_;
  std::vector<std::size_t> nodes_;
  std::vector<int> node_of_paper_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<int> out_targets_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<int> in_sources_;
};

CitationGraph build_citation_graph(const Corpus& corpus, int year_cutoff,
                                   const GraphOptions& options = {});

// Weighted undirected graph in adjacency-list form. Each undirected edge
// {u, v} with u != v appears in both lists; self-loop weight is kept apart.
struct UndirectedGraph {
  std::vector<std::vector<std::pair<int, double>>> adjacency;
  std::vector<double> self_loops;

  std::size_t node_count() const { return adjacency.size(); }
  double degree(int node) const;
  double total_weight() const;  // m: sum of undirected edge weights
};

// Unit-weight symmetrization; reciprocal citations collapse to one edge.
UndirectedGraph symmetrize(const CitationGraph& graph);
UndirectedGraph undirected_from_edges(std::size_t node_count,
                                      std::span<const std::pair<int, int>> edges);

struct Partition {
  std::vector<int> community;  // per node, contiguous ids from 0
  int community_count = 0;
  double resolution = 1.0;
  std::uint64_t seed = 0;
  double modularity = 0.0;
  // Modularity after each aggregation level.
  std::vector<double> level_modularity;
};

// Modularity with resolution gamma: sum_c [ e_c/m - gamma (d_c / 2m)^2 ].
// Zero when the graph has no edges.
double modularity(const UndirectedGraph& graph, std::span<const int> community,
                  double resolution = 1.0);
double modularity(const CitationGraph& graph, const Partition& partition,
                  double resolution);

Partition louvain(const UndirectedGraph& graph, double resolution,
                  std::uint64_t seed);
Partition louvain_partition(const CitationGraph& graph, double resolution,
                            std::uint64_t seed);

// NMI with arithmetic-mean normalization; 1 when both labelings are trivial.
double normalized_mutual_information(std::span<const int> a,
                                     std::span<const int> b);

}  // namespace comeback
