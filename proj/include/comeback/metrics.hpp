#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "comeback/cohort.hpp"
#include "comeback/corpus.hpp"
#include "comeback/graph.hpp"

namespace comeback {

// Per-author metric vector. Undefined ratio/entropy metrics are nullopt,
// never zero.
struct FeatureRow {
  std::string author_id;
  CohortLabel label = CohortLabel::Active;
  int P = 0;
  std::int64_t C = 0;
  int h = 0;
  std::optional<double> B;
  int ACC = 0;
  std::optional<double> XCC;
  std::optional<double> H_g;

  bool operator==(const FeatureRow&) const = default;
};

enum class Feature { P, C, h, B, ACC, XCC, H_g };
inline constexpr std::array<Feature, 7> kAllFeatures = {
    Feature::P, Feature::C, Feature::h, Feature::B,
    Feature::ACC, Feature::XCC, Feature::H_g};

std::string_view feature_name(Feature f);
Feature parse_feature(std::string_view name);
std::optional<double> feature_value(const FeatureRow& row, Feature f);

struct MetricOptions {
  // Count only citations from papers published up to the window end.
  bool citations_within_window = false;
};

// Resolves paper -> community through the graph's node map; -1 if absent.
class CommunityLookup {
 public:
  CommunityLookup(const CitationGraph& graph, const Partition& partition);
  int operator()(std::size_t paper) const;

 private:
  const CitationGraph& graph_;
  const Partition& partition_;
};

// Author papers (corpus indices) whose year lies in the window.
std::vector<std::size_t> papers_in_window(const Corpus& corpus,
                                          std::span<const std::size_t> papers,
                                          YearWindow window);

struct VolumeMetrics {
  int P = 0;
  std::int64_t C = 0;
  std::vector<int> per_paper_citations;
};

VolumeMetrics volume_metrics(const Corpus& corpus, const CitationGraph& graph,
                             std::span<const std::size_t> papers,
                             YearWindow window, const MetricOptions& options = {});

int h_index(std::span<const int> citation_counts);

std::optional<double> bridging_score(const Corpus& corpus, const CitationGraph& graph,
                                     const Partition& partition,
                                     std::span<const std::size_t> papers,
                                     YearWindow window);

std::optional<double> xcc(const Corpus& corpus, const CitationGraph& graph,
                          const Partition& partition,
                          std::span<const std::size_t> papers, YearWindow window);

int acc(const Corpus& corpus, const CitationGraph& graph, const Partition& partition,
        std::span<const std::size_t> papers, YearWindow window);

// Base-2 entropy of the inter-publication gap histogram (1-year bins).
std::optional<double> gap_entropy(std::span<const int> years);

enum class VenueType { Other, Conference, Journal, Workshop, Symposium };
inline constexpr std::array<VenueType, 5> kVenueTypes = {
    VenueType::Other, VenueType::Conference, VenueType::Journal,
    VenueType::Workshop, VenueType::Symposium};

std::string_view to_string(VenueType type);
VenueType classify_venue(std::string_view venue);

struct VenueShares {
  std::array<double, 5> shares{};  // indexed like kVenueTypes
  std::size_t papers = 0;

  double operator[](VenueType t) const { return shares[static_cast<int>(t)]; }
};

VenueShares venue_shares(std::span<const std::string> venues);

struct ExponentialFit {
  double p0 = 0.0;
  double lambda = 0.0;
  double rmse = 0.0;
  std::size_t points_used = 0;
};

// Least squares of ln p_t on t; points with p_t <= 0 are skipped.
ExponentialFit fit_exponential_decay(std::span<const std::pair<double, double>> series);

FeatureRow compute_features(const Corpus& corpus, const CitationGraph& graph,
                            const Partition& partition, const AuthorCareer& career,
                            std::span<const std::size_t> author_papers,
                            const MetricOptions& options = {});

// One row per career, in career order. Parallel over authors.
std::vector<FeatureRow> compute_all_features(const Corpus& corpus,
                                             const CitationGraph& graph,
                                             const Partition& partition,
                                             std::span<const AuthorCareer> careers,
                                             const MetricOptions& options = {},
                                             unsigned threads = 1);

}  // namespace comeback
