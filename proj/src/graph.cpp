#include "comeback/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "comeback/errors.hpp"

namespace comeback {

CitationGraph::CitationGraph(int year_cutoff, GraphOptions options,
                             std::vector<std::size_t> nodes,
                             std::size_t corpus_size,
                             std::vector<std::pair<int, int>> edges)
    : year_cutoff_(year_cutoff),
      options_(options),
      nodes_(std::move(nodes)),
      node_of_paper_(corpus_size, -1),
      edges_(std::move(edges)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i] >= corpus_size) throw DataError("graph node outside corpus");
    node_of_paper_[nodes_[i]] = static_cast<int>(i);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  const auto n = nodes_.size();
  out_offsets_.assign(n + 1, 0);
  in_offsets_.assign(n + 1, 0);
  for (const auto& [u, v] : edges_) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n ||
        static_cast<std::size_t>(v) >= n) {
      throw DataError("graph edge endpoint outside node set");
    }
    if (u == v) throw DataError("self-loop citation edge");
    ++out_offsets_[u + 1];
    ++in_offsets_[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    out_offsets_[i + 1] += out_offsets_[i];
    in_offsets_[i + 1] += in_offsets_[i];
  }
  out_targets_.resize(edges_.size());
  // edges_ is sorted by source, so targets fill in order.
  for (std::size_t e = 0; e < edges_.size(); ++e) out_targets_[e] = edges_[e].second;
  in_sources_.resize(edges_.size());
  std::vector<std::size_t> fill(in_offsets_.begin(), in_offsets_.end() - 1);
  for (const auto& [u, v] : edges_) in_sources_[fill[v]++] = u;
}

CitationGraph build_citation_graph(const Corpus& corpus, int year_cutoff,
                                   const GraphOptions& options) {
  if (options.reference_window_years && *options.reference_window_years < 0) {
    throw ParameterError("reference window must be >= 0");
  }
  std::vector<std::size_t> nodes;
  std::vector<int> node_of(corpus.size(), -1);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].year <= year_cutoff) {
      node_of[i] = static_cast<int>(nodes.size());
      nodes.push_back(i);
    }
  }
  std::vector<std::pair<int, int>> edges;
  for (std::size_t p : nodes) {
    const auto& paper = corpus[p];
    for (const auto& ref : paper.references) {
      auto q = corpus.find(ref);
      if (!q || *q == p || node_of[*q] < 0) continue;
      if (options.reference_window_years &&
          std::abs(paper.year - corpus[*q].year) > *options.reference_window_years) {
        continue;
      }
      if (options.exclude_self_citations && corpus.shares_author(p, *q)) continue;
      edges.emplace_back(node_of[p], node_of[*q]);
    }
  }
  return CitationGraph(year_cutoff, options, std::move(nodes), corpus.size(),
                       std::move(edges));
}

double UndirectedGraph::degree(int node) const {
  double k = 2.0 * self_loops[node];
  for (const auto& [_, w] : adjacency[node]) k += w;
  return k;
}

double UndirectedGraph::total_weight() const {
  double two_m = 0.0;
  for (std::size_t i = 0; i < adjacency.size(); ++i) two_m += degree(static_cast<int>(i));
  return two_m / 2.0;
}

UndirectedGraph undirected_from_edges(std::size_t node_count,
                                      std::span<const std::pair<int, int>> edges) {
  std::vector<std::pair<int, int>> undirected;
  undirected.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    undirected.emplace_back(u, v);
  }
  std::sort(undirected.begin(), undirected.end());
  undirected.erase(std::unique(undirected.begin(), undirected.end()), undirected.end());

  UndirectedGraph g;
  g.adjacency.resize(node_count);
  g.self_loops.assign(node_count, 0.0);
  for (const auto& [u, v] : undirected) {
    g.adjacency[u].emplace_back(v, 1.0);
    g.adjacency[v].emplace_back(u, 1.0);
  }
  for (auto& list : g.adjacency) std::sort(list.begin(), list.end());
  return g;
}

UndirectedGraph symmetrize(const CitationGraph& graph) {
  return undirected_from_edges(graph.node_count(), graph.edges());
}

double modularity(const UndirectedGraph& graph, std::span<const int> community,
                  double resolution) {
  if (community.size() != graph.node_count()) {
    throw ParameterError("partition does not cover the graph");
  }
  const double m = graph.total_weight();
  if (m <= 0.0) return 0.0;
  std::map<int, double> internal;  // e_c, undirected weight inside c
  std::map<int, double> degree;    // d_c
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    const int c = community[i];
    degree[c] += graph.degree(static_cast<int>(i));
    internal[c] += graph.self_loops[i];
    for (const auto& [j, w] : graph.adjacency[i]) {
      if (community[j] == c && static_cast<std::size_t>(j) > i) internal[c] += w;
    }
  }
  double q = 0.0;
  for (const auto& [c, d] : degree) {
    const double share = d / (2.0 * m);
    q += internal[c] / m - resolution * share * share;
  }
  return q;
}

double modularity(const CitationGraph& graph, const Partition& partition,
                  double resolution) {
  return modularity(symmetrize(graph), partition.community, resolution);
}

double normalized_mutual_information(std::span<const int> a,
                                     std::span<const int> b) {
  if (a.size() != b.size()) throw ParameterError("labelings differ in length");
  const double n = static_cast<double>(a.size());
  if (a.empty()) return 1.0;
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [_, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca), hb = entropy(cb);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    mi += (c / n) * std::log(c * n / (ca[key.first] * cb[key.second]));
  }
  return 2.0 * mi / (ha + hb);
}

}  // namespace comeback
