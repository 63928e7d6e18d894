#include <array>
#include <map>
#include <set>
#include <sstream>

#include "comeback/errors.hpp"
#include "comeback/metrics.hpp"
#include "comeback/stats.hpp"
#include "comeback/synth.hpp"
#include "doctest.h"

using namespace comeback;
using namespace comeback::synth;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.n_communities = 4;
  cfg.papers_per_community_per_year = 4;
  cfg.n_authors = 200;
  cfg.refs_per_paper = {4, 8};
  cfg.seed = 3;
  return cfg;
}

void set_all_rho(SynthConfig& cfg, double rho) {
  for (auto& c : cfg.cohorts) c.cross_cite = {rho, 0.0};
  cfg.background_cross_cite = {rho, 0.0};
}

struct Measured {
  Corpus corpus;
  CitationGraph graph;
  Partition partition;
  std::vector<AuthorCareer> careers;
};

Measured measure(const SynthCorpus& sc, int end_year) {
  Measured m{Corpus(sc.papers), {}, {}, {}};
  m.graph = build_citation_graph(m.corpus, end_year);
  m.partition = planted_partition(m.corpus, m.graph, sc.truth);
  m.careers = label_authors(m.corpus.author_index(), end_year);
  return m;
}

std::string serialize(const SynthCorpus& sc) {
  std::ostringstream out;
  write_jsonl(out, sc.papers);
  return out.str() + sc.truth.to_json().dump();
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("rho zero gives zero bridging everywhere") {
    auto cfg = small_config();
    set_all_rho(cfg, 0.0);
    const auto sc = generate_corpus(cfg);
    const auto m = measure(sc, cfg.span.last);
    std::size_t measured = 0;
    for (const auto& [author, papers] : m.corpus.author_papers()) {
      const auto b = bridging_score(m.corpus, m.graph, m.partition, papers, {cfg.span.first, cfg.span.last});
      if (!b) continue;
      CHECK(*b == 0.0);
      ++measured;
    }
    CHECK(measured > 200);
  }

  TEST_CASE("rho one with two communities gives full bridging") {
    auto cfg = small_config();
    cfg.n_communities = 2;
    set_all_rho(cfg, 1.0);
    const auto sc = generate_corpus(cfg);
    const auto m = measure(sc, cfg.span.last);
    std::size_t measured = 0;
    for (const auto& [author, papers] : m.corpus.author_papers()) {
      const auto b = bridging_score(m.corpus, m.graph, m.partition, papers, {cfg.span.first, cfg.span.last});
      if (!b) continue;
      CHECK(*b == 1.0);
      ++measured;
    }
    CHECK(measured > 200);
  }

  TEST_CASE("planted cohorts are recovered by the labeling rule") {
    SynthConfig cfg;
    cfg.n_authors = 1000;
    cfg.cohort_mix = {0.1, 0.6, 0.3};
    cfg.seed = 21;
    const auto sc = generate_corpus(cfg);
    const Corpus corpus(sc.papers);
    const auto careers = label_authors(corpus.author_index(), cfg.span.last);
    std::map<std::string, CohortLabel> measured;
    for (const auto& c : careers) measured[c.author_id] = c.label;
    std::size_t agree = 0, cb = 0;
    for (const auto& a : sc.truth.authors) {
      agree += measured.at(a.author_id) == a.label;
      cb += a.label == CohortLabel::Comeback;
    }
    CHECK(sc.truth.authors.size() == 1000);
    CHECK(cb == 100);
    CHECK(static_cast<double>(agree) >= 0.99 * 1000.0);
  }

  TEST_CASE("measured bridging tracks the planted cross-citation rate") {
    SynthConfig cfg;
    cfg.seed = 4;
    cfg.n_authors = 600;
    const auto sc = generate_corpus(cfg);
    const auto m = measure(sc, cfg.span.last);
    std::map<std::string, const AuthorTruth*> truth;
    for (const auto& a : sc.truth.authors) truth[a.author_id] = &a;

    std::array<double, 3> sum_b{}, sum_rho{};
    std::array<int, 3> count{};
    std::vector<double> bs, rhos;
    for (const auto& c : m.careers) {
      auto it = truth.find(c.author_id);
      if (it == truth.end()) continue;
      const auto& papers = m.corpus.author_papers().at(c.author_id);
      const auto b = bridging_score(m.corpus, m.graph, m.partition, papers, {cfg.span.first, cfg.span.last});
      if (!b) continue;
      const auto k = static_cast<std::size_t>(it->second->label);
      sum_b[k] += *b;
      sum_rho[k] += it->second->cross_cite;
      ++count[k];
      bs.push_back(*b);
      rhos.push_back(it->second->cross_cite);
    }
    for (std::size_t k = 0; k < 3; ++k) {
      REQUIRE(count[k] > 50);
      CHECK(std::abs(sum_b[k] / count[k] - sum_rho[k] / count[k]) <= 0.03);
    }
    CHECK(stats::spearman(bs, rhos).value() > 0.8);
  }

  TEST_CASE("authored-community count matches the planted communities") {
    const auto cfg = small_config();
    const auto sc = generate_corpus(cfg);
    const auto m = measure(sc, cfg.span.last);
    for (const auto& c : m.careers) {
      const auto& papers = m.corpus.author_papers().at(c.author_id);
      std::set<int> planted;
      for (std::size_t p : papers_in_window(m.corpus, papers, c.window)) {
        planted.insert(sc.truth.paper_community.at(m.corpus[p].id));
      }
      CHECK(acc(m.corpus, m.graph, m.partition, papers, c.window) == static_cast<int>(planted.size()));
    }
  }

  TEST_CASE("generation is deterministic and references point backward") {
    const auto cfg = small_config();
    const auto a = generate_corpus(cfg);
    const auto b = generate_corpus(cfg);
    CHECK(serialize(a) == serialize(b));
    auto other = cfg;
    other.seed = 99;
    CHECK(serialize(generate_corpus(other)) != serialize(a));

    std::map<std::string, int> year;
    for (const auto& p : a.papers) year[p.id] = p.year;
    for (const auto& p : a.papers) {
      CHECK(a.truth.paper_community.count(p.id) == 1);
      for (const auto& r : p.references) CHECK(year.at(r) < p.year);
    }
  }

  TEST_CASE("Dropouts stop at least three years before the span end") {
    const auto cfg = small_config();
    const auto sc = generate_corpus(cfg);
    const Corpus corpus(sc.papers);
    const auto index = corpus.author_index();
    for (const auto& a : sc.truth.authors) {
      const auto& years = index.at(a.author_id).years;
      if (a.label == CohortLabel::Dropout) CHECK(cfg.span.last - years.back() >= 3);
      if (a.label == CohortLabel::Comeback) {
        CHECK(max_gap(years) >= 3);
        CHECK(a.return_year.has_value());
      }
    }
  }

  TEST_CASE("invalid configurations are rejected") {
    auto bad = small_config();
    bad.cohort_mix = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(generate_corpus(bad), ParameterError);
    bad = small_config();
    bad.cohorts[0].cross_cite.mean = 1.5;
    CHECK_THROWS_AS(generate_corpus(bad), ParameterError);
    bad = small_config();
    bad.span = {2010, 2000};
    CHECK_THROWS_AS(generate_corpus(bad), ParameterError);
    bad = small_config();
    bad.refs_per_paper = {100, 120};
    CHECK_THROWS_AS(generate_corpus(bad), ParameterError);
    bad = small_config();
    bad.span = {2000, 2008};
    CHECK_THROWS_AS(generate_corpus(bad), ParameterError);
    CHECK_THROWS_AS(SynthConfig::from_json(nlohmann::json{{"bogus", 1}}), ParameterError);
  }

  TEST_CASE("configuration JSON round-trips") {
    auto cfg = small_config();
    cfg.cohorts[1].breadth = 0.33;
    const auto back = SynthConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
  }

  TEST_CASE("planted block graph") {
    const auto g = planted_block_graph(3, 20, 1.0, 0.0, 1);
    CHECK(g.node_count == 60);
    CHECK(g.edges.size() == 3 * 190);
    for (auto [u, v] : g.edges) {
      CHECK(u < v);
      CHECK(g.labels[u] == g.labels[v]);
    }
  }
}
