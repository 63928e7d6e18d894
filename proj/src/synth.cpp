#include "comeback/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <unordered_map>

#include "comeback/errors.hpp"

namespace comeback::synth {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 3> kCohortKeys{"CB", "DO", "AC"};

const std::array<std::string, 5> kVenueKinds{
    "Journal of Synthetic Studies", "Proceedings of the Conference on Synthetic Studies",
    "Workshop on Synthetic Studies", "Symposium on Synthetic Studies", "Synthetic Studies Letters"};

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(what + " must lie in [0, 1]");
}

void check_range(const IntRange& r, int lowest, const std::string& what) {
  if (r.min < lowest || r.max < r.min) {
    throw ParameterError(what + " must satisfy " + std::to_string(lowest) + " <= min <= max");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ProbabilityRange read_probability(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  ProbabilityRange r;
  read_if(j, "mean", r.mean);
  read_if(j, "spread", r.spread);
  return r;
}

IntRange read_range(const json& j, IntRange r) {
  if (j.is_number_integer()) return {j.get<int>(), j.get<int>()};
  read_if(j, "min", r.min);
  read_if(j, "max", r.max);
  return r;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double draw_probability(std::mt19937_64& rng, const ProbabilityRange& r) {
  const double v = r.mean + r.spread * (2.0 * uniform_real(rng) - 1.0);
  return std::clamp(v, 0.0, 1.0);
}

int max_pre_gap_span(const SynthConfig& c) { return (c.active_years_before_gap.max - 1) * 2; }

int latest_start(const SynthConfig& c) {
  return c.span.last - max_pre_gap_span(c) - std::max(c.comeback_gap.max, 3);
}

struct Slot {
  int year = 0;
  int community = 0;
  int kind = 0;  // 0 background, 1 focal
  std::size_t order = 0;
  std::string author;
  double rho = 0.0;
};

}  // namespace

void SynthConfig::validate() const {
  if (n_communities < 1) throw ParameterError("n_communities must be >= 1");
  if (papers_per_community_per_year < 1) {
    throw ParameterError("papers_per_community_per_year must be >= 1");
  }
  if (span.first > span.last) throw ParameterError("synthetic span is empty");
  if (n_authors < 0) throw ParameterError("n_authors must be >= 0");
  if (staff_per_community < 1) throw ParameterError("staff_per_community must be >= 1");
  double mix = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    check_probability(cohort_mix[i], std::string("cohort_mix.") + kCohortKeys[i]);
    mix += cohort_mix[i];
    const auto& b = cohorts[i];
    const std::string key = kCohortKeys[i];
    check_probability(b.cross_cite.mean, "cross_cite_prob." + key + ".mean");
    if (b.cross_cite.spread < 0.0) throw ParameterError("cross_cite_prob spread must be >= 0");
    check_probability(b.breadth, "breadth." + key);
    check_probability(b.irregular_gap, "irregular_gap_prob." + key);
  }
  if (std::abs(mix - 1.0) > 1e-9) throw ParameterError("cohort_mix proportions must sum to 1");
  check_probability(background_cross_cite.mean, "cross_cite_prob.background.mean");
  if (background_cross_cite.spread < 0.0) throw ParameterError("cross_cite_prob spread must be >= 0");
  check_probability(self_cite_prob, "self_cite_prob");
  check_range(refs_per_paper, 0, "refs_per_paper");
  check_range(active_years_before_gap, 1, "active_years_before_gap");
  check_range(papers_before_gap, 1, "papers_before_gap");
  check_range(comeback_gap, 3, "comeback_gap");
  if (refs_per_paper.min > n_communities * papers_per_community_per_year) {
    throw ParameterError("refs_per_paper.min exceeds the papers available from one earlier year");
  }
  if (n_authors > 0 && latest_start(*this) < span.first) {
    throw ParameterError("span too short for the configured careers and gaps");
  }
}

SynthConfig SynthConfig::from_json(const json& j) {
  static const std::set<std::string> known{
      "n_communities",     "papers_per_community_per_year", "start_year",
      "end_year",          "n_authors",                     "cohort_mix",
      "cross_cite_prob",   "breadth",                       "irregular_gap_prob",
      "refs_per_paper",    "papers_before_gap",             "active_years_before_gap",
      "comeback_gap",      "staff_per_community",           "self_cite_prob",
      "seed"};
  if (!j.is_object()) throw ParameterError("synth config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ParameterError("unknown synth config key '" + key + "'");
  }
  SynthConfig c;
  try {
    read_if(j, "n_communities", c.n_communities);
    read_if(j, "papers_per_community_per_year", c.papers_per_community_per_year);
    read_if(j, "start_year", c.span.first);
    read_if(j, "end_year", c.span.last);
    read_if(j, "n_authors", c.n_authors);
    read_if(j, "staff_per_community", c.staff_per_community);
    read_if(j, "self_cite_prob", c.self_cite_prob);
    read_if(j, "seed", c.seed);
    for (std::size_t i = 0; i < 3; ++i) {
      const char* k = kCohortKeys[i];
      if (j.contains("cohort_mix")) read_if(j.at("cohort_mix"), k, c.cohort_mix[i]);
      if (j.contains("cross_cite_prob") && j.at("cross_cite_prob").contains(k)) {
        c.cohorts[i].cross_cite = read_probability(j.at("cross_cite_prob").at(k));
      }
      if (j.contains("breadth")) read_if(j.at("breadth"), k, c.cohorts[i].breadth);
      if (j.contains("irregular_gap_prob")) {
        read_if(j.at("irregular_gap_prob"), k, c.cohorts[i].irregular_gap);
      }
    }
    if (j.contains("cross_cite_prob") && j.at("cross_cite_prob").contains("background")) {
      c.background_cross_cite = read_probability(j.at("cross_cite_prob").at("background"));
    }
    if (j.contains("refs_per_paper")) c.refs_per_paper = read_range(j.at("refs_per_paper"), c.refs_per_paper);
    if (j.contains("papers_before_gap")) {
      c.papers_before_gap = read_range(j.at("papers_before_gap"), c.papers_before_gap);
    }
    if (j.contains("active_years_before_gap")) {
      c.active_years_before_gap = read_range(j.at("active_years_before_gap"), c.active_years_before_gap);
    }
    if (j.contains("comeback_gap")) c.comeback_gap = read_range(j.at("comeback_gap"), c.comeback_gap);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("invalid synth config: ") + e.what());
  }
  c.validate();
  return c;
}

json SynthConfig::to_json() const {
  json j = json::object();
  j["n_communities"] = n_communities;
  j["papers_per_community_per_year"] = papers_per_community_per_year;
  j["start_year"] = span.first;
  j["end_year"] = span.last;
  j["n_authors"] = n_authors;
  json mix = json::object(), rho = json::object(), breadth = json::object(), irregular = json::object();
  for (std::size_t i = 0; i < 3; ++i) {
    mix[kCohortKeys[i]] = cohort_mix[i];
    rho[kCohortKeys[i]] = {{"mean", cohorts[i].cross_cite.mean}, {"spread", cohorts[i].cross_cite.spread}};
    breadth[kCohortKeys[i]] = cohorts[i].breadth;
    irregular[kCohortKeys[i]] = cohorts[i].irregular_gap;
  }
  rho["background"] = {{"mean", background_cross_cite.mean}, {"spread", background_cross_cite.spread}};
  j["cohort_mix"] = mix;
  j["cross_cite_prob"] = rho;
  j["breadth"] = breadth;
  j["irregular_gap_prob"] = irregular;
  auto range = [](const IntRange& r) { return json{{"min", r.min}, {"max", r.max}}; };
  j["refs_per_paper"] = range(refs_per_paper);
  j["papers_before_gap"] = range(papers_before_gap);
  j["active_years_before_gap"] = range(active_years_before_gap);
  j["comeback_gap"] = range(comeback_gap);
  j["staff_per_community"] = staff_per_community;
  j["self_cite_prob"] = self_cite_prob;
  j["seed"] = seed;
  return j;
}

json GroundTruth::to_json() const {
  json authors_json = json::array();
  for (const auto& a : authors) {
    json row = {{"author_id", a.author_id},
                {"label", std::string(to_string(a.label))},
                {"cross_cite_prob", a.cross_cite},
                {"home_community", a.home_community},
                {"papers", a.papers}};
    row["return_year"] = a.return_year ? json(*a.return_year) : json(nullptr);
    authors_json.push_back(std::move(row));
  }
  json papers_json = json::object();
  for (const auto& [id, c] : paper_community) papers_json[id] = c;
  return {{"authors", std::move(authors_json)}, {"paper_community", std::move(papers_json)}};
}

SynthCorpus generate_corpus(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const int n_comm = config.n_communities;
  std::vector<Slot> slots;
  std::unordered_map<std::string, double> author_rho;

  // Background papers from per-community staff who publish every year.
  std::vector<std::vector<std::string>> staff(static_cast<std::size_t>(n_comm));
  for (int c = 0; c < n_comm; ++c) {
    for (int k = 0; k < config.staff_per_community; ++k) {
      char id[32];
      std::snprintf(id, sizeof id, "s%02d_%02d", c, k);
      staff[c].push_back(id);
      author_rho[id] = draw_probability(rng, config.background_cross_cite);
    }
  }
  for (int y = config.span.first; y <= config.span.last; ++y) {
    for (int c = 0; c < n_comm; ++c) {
      for (int j = 0; j < config.papers_per_community_per_year; ++j) {
        const auto k = static_cast<std::size_t>((y - config.span.first) * config.papers_per_community_per_year + j) %
                       staff[c].size();
        slots.push_back({y, c, 0, slots.size(), staff[c][k], author_rho[staff[c][k]]});
      }
    }
  }

  // Focal authors with exact cohort counts in shuffled order.
  const int n = config.n_authors;
  const int n_cb = static_cast<int>(std::lround(config.cohort_mix[0] * n));
  const int n_do = std::min(n - n_cb, static_cast<int>(std::lround(config.cohort_mix[1] * n)));
  std::vector<CohortLabel> labels;
  labels.insert(labels.end(), static_cast<std::size_t>(n_cb), CohortLabel::Comeback);
  labels.insert(labels.end(), static_cast<std::size_t>(n_do), CohortLabel::Dropout);
  labels.insert(labels.end(), static_cast<std::size_t>(n - n_cb - n_do), CohortLabel::Active);
  std::shuffle(labels.begin(), labels.end(), rng);

  SynthCorpus out;
  const int last_start = latest_start(config);
  for (int a = 0; a < n; ++a) {
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "a%05d", a + 1);
    const std::string id = id_buf;
    const CohortLabel label = labels[a];
    const auto& behaviour = config.cohorts[static_cast<std::size_t>(label)];
    AuthorTruth truth;
    truth.author_id = id;
    truth.label = label;
    truth.cross_cite = draw_probability(rng, behaviour.cross_cite);
    truth.home_community = uniform_int(rng, 0, n_comm - 1);
    author_rho[id] = truth.cross_cite;

    auto next_gap = [&] { return uniform_real(rng) < behaviour.irregular_gap ? 2 : 1; };
    const int active_years =
        uniform_int(rng, config.active_years_before_gap.min, config.active_years_before_gap.max);
    const int start = uniform_int(rng, config.span.first, last_start);
    std::vector<int> years{start};
    for (int k = 1; k < active_years; ++k) years.push_back(years.back() + next_gap());
    const int papers = std::max(active_years,
                                uniform_int(rng, config.papers_before_gap.min, config.papers_before_gap.max));
    std::vector<int> per_year(years.size(), 1);
    for (int k = active_years; k < papers; ++k) {
      ++per_year[static_cast<std::size_t>(uniform_int(rng, 0, active_years - 1))];
    }
    if (label == CohortLabel::Comeback) {
      const int gap = uniform_int(rng, config.comeback_gap.min, config.comeback_gap.max);
      const int ret = years.back() + gap;
      truth.return_year = ret;
      const int stop = std::max(ret, config.span.last - uniform_int(rng, 0, 2));
      for (int y = ret; y <= stop; ++y) {
        years.push_back(y);
        per_year.push_back(1);
      }
    } else if (label == CohortLabel::Active) {
      const int target = config.span.last - uniform_int(rng, 0, 2);
      while (years.back() < target) {
        years.push_back(std::min(config.span.last, years.back() + next_gap()));
        per_year.push_back(1);
      }
    }
    for (std::size_t k = 0; k < years.size(); ++k) {
      for (int m = 0; m < per_year[k]; ++m) {
        int community = truth.home_community;
        if (n_comm > 1 && uniform_real(rng) < behaviour.breadth) {
          community = (truth.home_community + uniform_int(rng, 1, n_comm - 1)) % n_comm;
        }
        slots.push_back({years[k], community, 1, slots.size(), id, truth.cross_cite});
        ++truth.papers;
      }
    }
    out.truth.authors.push_back(std::move(truth));
  }

  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    if (a.year != b.year) return a.year < b.year;
    if (a.community != b.community) return a.community < b.community;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.order < b.order;
  });

  // References: earlier years only, within or across communities by rho.
  std::vector<std::vector<std::size_t>> earlier(static_cast<std::size_t>(n_comm));
  std::size_t earlier_total = 0;
  std::unordered_map<std::string, std::vector<std::size_t>> own_earlier;
  std::unordered_map<std::string, std::vector<std::size_t>> own_pending;
  std::vector<std::size_t> pending;
  out.papers.resize(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    char pid[32];
    std::snprintf(pid, sizeof pid, "p%06zu", i + 1);
    out.papers[i].id = pid;
  }
  int current_year = slots.empty() ? 0 : slots.front().year;
  auto flush_year = [&] {
    for (std::size_t p : pending) {
      earlier[static_cast<std::size_t>(slots[p].community)].push_back(p);
      ++earlier_total;
    }
    pending.clear();
    for (auto& [author, list] : own_pending) {
      auto& dst = own_earlier[author];
      dst.insert(dst.end(), list.begin(), list.end());
    }
    own_pending.clear();
  };

  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot& s = slots[i];
    if (s.year != current_year) {
      flush_year();
      current_year = s.year;
    }
    PaperRecord& paper = out.papers[i];
    paper.title = "Synthetic paper " + paper.id;
    paper.authors = {s.author};
    paper.year = s.year;
    paper.venue = kVenueKinds[static_cast<std::size_t>(uniform_int(rng, 0, 4))];
    out.truth.paper_community[paper.id] = s.community;

    const auto& within = earlier[static_cast<std::size_t>(s.community)];
    const std::size_t cross_total = earlier_total - within.size();
    const std::size_t k_refs = std::min<std::size_t>(
        static_cast<std::size_t>(uniform_int(rng, config.refs_per_paper.min, config.refs_per_paper.max)),
        earlier_total);
    std::set<std::size_t> chosen;
    const auto own_it = own_earlier.find(s.author);
    int attempts = 0;
    while (chosen.size() < k_refs && attempts < static_cast<int>(k_refs) * 50) {
      ++attempts;
      const bool cross = uniform_real(rng) < s.rho;
      if (cross ? cross_total == 0 : within.empty()) continue;
      std::size_t target;
      std::vector<std::size_t> own_candidates;
      if (own_it != own_earlier.end() && uniform_real(rng) < config.self_cite_prob) {
        for (std::size_t p : own_it->second) {
          if ((slots[p].community != s.community) == cross) own_candidates.push_back(p);
        }
      }
      if (!own_candidates.empty()) {
        target = own_candidates[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<int>(own_candidates.size()) - 1))];
      } else if (!cross) {
        target = within[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(within.size()) - 1))];
      } else {
        auto r = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cross_total) - 1));
        std::size_t c = 0;
        for (;; ++c) {
          if (static_cast<int>(c) == s.community) continue;
          if (r < earlier[c].size()) break;
          r -= earlier[c].size();
        }
        target = earlier[c][r];
      }
      chosen.insert(target);
    }
    for (std::size_t t : chosen) paper.references.push_back(out.papers[t].id);
    pending.push_back(i);
    own_pending[s.author].push_back(i);
  }
  return out;
}

Partition planted_partition(const Corpus& corpus, const CitationGraph& graph,
                            const GroundTruth& truth) {
  Partition p;
  std::unordered_map<int, int> compact;
  p.community.reserve(graph.node_count());
  for (std::size_t node = 0; node < graph.node_count(); ++node) {
    const auto& id = corpus[graph.nodes()[node]].id;
    auto it = truth.paper_community.find(id);
    if (it == truth.paper_community.end()) {
      throw DataError("paper " + id + " has no planted community");
    }
    auto [c, inserted] = compact.try_emplace(it->second, static_cast<int>(compact.size()));
    p.community.push_back(c->second);
  }
  p.community_count = static_cast<int>(compact.size());
  p.modularity = modularity(symmetrize(graph), p.community, 1.0);
  return p;
}

PlantedGraph planted_block_graph(int blocks, int block_size, double p_in, double p_out,
                                 std::uint64_t seed) {
  if (blocks < 1 || block_size < 1) throw ParameterError("block graph needs blocks and nodes");
  check_probability(p_in, "p_in");
  check_probability(p_out, "p_out");
  PlantedGraph g;
  g.node_count = static_cast<std::size_t>(blocks) * static_cast<std::size_t>(block_size);
  for (std::size_t i = 0; i < g.node_count; ++i) {
    g.labels.push_back(static_cast<int>(i / static_cast<std::size_t>(block_size)));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t a = 0; a < g.node_count; ++a) {
    for (std::size_t b = a + 1; b < g.node_count; ++b) {
      const double p = g.labels[a] == g.labels[b] ? p_in : p_out;
      if (u(rng) < p) g.edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
  }
  return g;
}

}  // namespace comeback::synth
