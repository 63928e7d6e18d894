#include "comeback/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "comeback/errors.hpp"
#include "comeback/parallel.hpp"

namespace comeback {

std::string_view feature_name(Feature f) {
  switch (f) {
    case Feature::P: return "P";
    case Feature::C: return "C";
    case Feature::h: return "h";
    case Feature::B: return "B";
    case Feature::ACC: return "ACC";
    case Feature::XCC: return "XCC";
    case Feature::H_g: return "H_g";
  }
  return "";
}

Feature parse_feature(std::string_view name) {
  for (Feature f : kAllFeatures) {
    if (feature_name(f) == name) return f;
  }
  throw ParameterError("unknown feature '" + std::string(name) + "'");
}

std::optional<double> feature_value(const FeatureRow& row, Feature f) {
  switch (f) {
    case Feature::P: return static_cast<double>(row.P);
    case Feature::C: return static_cast<double>(row.C);
    case Feature::h: return static_cast<double>(row.h);
    case Feature::B: return row.B;
    case Feature::ACC: return static_cast<double>(row.ACC);
    case Feature::XCC: return row.XCC;
    case Feature::H_g: return row.H_g;
  }
  return std::nullopt;
}

CommunityLookup::CommunityLookup(const CitationGraph& graph, const Partition& partition)
    : graph_(graph), partition_(partition) {
  if (partition.community.size() != graph.node_count()) {
    throw ParameterError("partition does not cover the graph");
  }
}

int CommunityLookup::operator()(std::size_t paper) const {
  const int node = graph_.node_of(paper);
  return node < 0 ? -1 : partition_.community[node];
}

std::vector<std::size_t> papers_in_window(const Corpus& corpus,
                                          std::span<const std::size_t> papers,
                                          YearWindow window) {
  std::vector<std::size_t> out;
  for (std::size_t p : papers) {
    if (window.contains(corpus[p].year)) out.push_back(p);
  }
  return out;
}

VolumeMetrics volume_metrics(const Corpus& corpus, const CitationGraph& graph,
                             std::span<const std::size_t> papers, YearWindow window,
                             const MetricOptions& options) {
  VolumeMetrics v;
  for (std::size_t p : papers_in_window(corpus, papers, window)) {
    ++v.P;
    int cites = 0;
    if (const int node = graph.node_of(p); node >= 0) {
      if (options.citations_within_window) {
        for (int src : graph.in_neighbors(node)) {
          if (corpus[graph.nodes()[src]].year <= window.end) ++cites;
        }
      } else {
        cites = graph.in_degree(node);
      }
    }
    v.per_paper_citations.push_back(cites);
    v.C += cites;
  }
  return v;
}

int h_index(std::span<const int> citation_counts) {
  std::vector<int> sorted(citation_counts.begin(), citation_counts.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  int h = 0;
  while (h < static_cast<int>(sorted.size()) && sorted[h] >= h + 1) ++h;
  return h;
}

std::optional<double> bridging_score(const Corpus& corpus, const CitationGraph& graph,
                                     const Partition& partition,
                                     std::span<const std::size_t> papers,
                                     YearWindow window) {
  [[maybe_unused]] const CommunityLookup covered(graph, partition);
  std::size_t edges = 0, crossing = 0;
  for (std::size_t p : papers_in_window(corpus, papers, window)) {
    const int node = graph.node_of(p);
    if (node < 0) continue;
    const int own = partition.community[node];
    for (int q : graph.out_neighbors(node)) {
      ++edges;
      if (partition.community[q] != own) ++crossing;
    }
  }
  if (edges == 0) return std::nullopt;
  return static_cast<double>(crossing) / static_cast<double>(edges);
}

std::optional<double> xcc(const Corpus& corpus, const CitationGraph& graph,
                          const Partition& partition,
                          std::span<const std::size_t> papers, YearWindow window) {
  [[maybe_unused]] const CommunityLookup covered(graph, partition);
  double share_sum = 0.0;
  std::size_t eligible = 0;
  for (std::size_t p : papers_in_window(corpus, papers, window)) {
    const int node = graph.node_of(p);
    if (node < 0) continue;
    const auto refs = graph.out_neighbors(node);
    if (refs.empty()) continue;
    const int own = partition.community[node];
    std::size_t crossing = 0;
    for (int q : refs) {
      if (partition.community[q] != own) ++crossing;
    }
    share_sum += static_cast<double>(crossing) / static_cast<double>(refs.size());
    ++eligible;
  }
  if (eligible == 0) return std::nullopt;
  return share_sum / static_cast<double>(eligible);
}

int acc(const Corpus& corpus, const CitationGraph& graph, const Partition& partition,
        std::span<const std::size_t> papers, YearWindow window) {
  const CommunityLookup community(graph, partition);
  std::set<int> seen;
  for (std::size_t p : papers_in_window(corpus, papers, window)) {
    const int c = community(p);
    if (c >= 0) seen.insert(c);
  }
  return static_cast<int>(seen.size());
}

std::optional<double> gap_entropy(std::span<const int> years) {
  if (years.size() < 2) return std::nullopt;
  std::map<int, int> histogram;
  for (std::size_t i = 1; i < years.size(); ++i) ++histogram[years[i] - years[i - 1]];
  const double n = static_cast<double>(years.size() - 1);
  double h = 0.0;
  for (const auto& [_, count] : histogram) {
    const double q = count / n;
    h -= q * std::log2(q);
  }
  return h;
}

std::string_view to_string(VenueType type) {
  switch (type) {
    case VenueType::Other: return "Other";
    case VenueType::Conference: return "Conference";
    case VenueType::Journal: return "Journal";
    case VenueType::Workshop: return "Workshop";
    case VenueType::Symposium: return "Symposium";
  }
  return "Other";
}

VenueType classify_venue(std::string_view venue) {
  std::string lower(venue);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto has = [&](std::string_view key) { return lower.find(key) != std::string::npos; };
  if (has("journal")) return VenueType::Journal;
  if (has("workshop")) return VenueType::Workshop;
  if (has("symposium")) return VenueType::Symposium;
  if (has("conference") || has("proceedings") || has("conf.")) return VenueType::Conference;
  return VenueType::Other;
}

VenueShares venue_shares(std::span<const std::string> venues) {
  VenueShares out;
  out.papers = venues.size();
  if (venues.empty()) return out;
  std::array<std::size_t, 5> counts{};
  for (const auto& v : venues) ++counts[static_cast<int>(classify_venue(v))];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.shares[i] = static_cast<double>(counts[i]) / static_cast<double>(venues.size());
  }
  return out;
}

ExponentialFit fit_exponential_decay(std::span<const std::pair<double, double>> series) {
  std::vector<std::pair<double, double>> points;
  for (const auto& [t, p] : series) {
    if (p > 0.0 && std::isfinite(p) && std::isfinite(t)) points.emplace_back(t, std::log(p));
  }
  if (points.size() < 2) {
    throw NumericError("exponential fit needs at least two positive points");
  }
  const double n = static_cast<double>(points.size());
  double mt = 0.0, my = 0.0;
  for (const auto& [t, y] : points) {
    mt += t;
    my += y;
  }
  mt /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [t, y] : points) {
    sxx += (t - mt) * (t - mt);
    sxy += (t - mt) * (y - my);
  }
  if (sxx == 0.0) throw NumericError("exponential fit needs distinct time points");
  const double slope = sxy / sxx;
  ExponentialFit fit;
  fit.lambda = -slope;
  fit.p0 = std::exp(my - slope * mt);
  fit.points_used = points.size();
  double sse = 0.0;
  for (const auto& [t, p] : series) {
    if (!(p > 0.0)) continue;
    const double r = p - fit.p0 * std::exp(-fit.lambda * t);
    sse += r * r;
  }
  fit.rmse = std::sqrt(sse / n);
  return fit;
}

FeatureRow compute_features(const Corpus& corpus, const CitationGraph& graph,
                            const Partition& partition, const AuthorCareer& career,
                            std::span<const std::size_t> author_papers,
                            const MetricOptions& options) {
  FeatureRow row;
  row.author_id = career.author_id;
  row.label = career.label;
  const auto volume = volume_metrics(corpus, graph, author_papers, career.window, options);
  row.P = volume.P;
  row.C = volume.C;
  row.h = h_index(volume.per_paper_citations);
  row.B = bridging_score(corpus, graph, partition, author_papers, career.window);
  row.XCC = xcc(corpus, graph, partition, author_papers, career.window);
  row.ACC = acc(corpus, graph, partition, author_papers, career.window);

  std::vector<int> years;
  for (std::size_t p : papers_in_window(corpus, author_papers, career.window)) {
    years.push_back(corpus[p].year);
  }
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  row.H_g = gap_entropy(years);
  return row;
}

std::vector<FeatureRow> compute_all_features(const Corpus& corpus,
                                             const CitationGraph& graph,
                                             const Partition& partition,
                                             std::span<const AuthorCareer> careers,
                                             const MetricOptions& options,
                                             unsigned threads) {
  [[maybe_unused]] const CommunityLookup covered(graph, partition);
  std::vector<FeatureRow> rows(careers.size());
  const auto& by_author = corpus.author_papers();
  parallel_for(careers.size(), threads, [&](std::size_t i) {
    auto it = by_author.find(careers[i].author_id);
    const std::span<const std::size_t> papers =
        it == by_author.end() ? std::span<const std::size_t>{}
                              : std::span<const std::size_t>(it->second);
    rows[i] = compute_features(corpus, graph, partition, careers[i], papers, options);
  });
  return rows;
}

}  // namespace comeback
