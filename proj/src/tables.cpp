#include "comeback/tables.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "comeback/errors.hpp"
#include "json.hpp"

namespace comeback {

namespace {

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("bad " + std::string(what) + " value '" + std::string(text) + "'");
  }
  return value;
}

std::optional<double> parse_optional(std::string_view text, std::string_view what) {
  if (text.empty()) return std::nullopt;
  return parse_number<double>(text, what);
}

bool next_record(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

void expect_header(std::istream& in, std::string_view header, std::string_view table) {
  std::string line;
  if (!next_record(in, line) || line != header) {
    throw DataError(std::string(table) + " header must be '" + std::string(header) + "'");
  }
}

constexpr std::string_view kCohortHeader =
    "author_id,label,first_year,last_year,max_gap,return_year,window_start,window_end";
constexpr std::string_view kGraphHeader = "citing,cited";
constexpr std::string_view kFeatureHeader = "author_id,label,P,C,h,B,ACC,XCC,H_g";

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return std::string(buf, ptr);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  return fields;
}

void write_cohorts_csv(std::ostream& out, std::span<const AuthorCareer> careers) {
  out << kCohortHeader << '\n';
  for (const auto& c : careers) {
    out << csv_escape(c.author_id) << ',' << to_string(c.label) << ',' << c.first_year() << ','
        << c.last_year() << ',' << c.max_gap << ',';
    if (c.return_year) out << *c.return_year;
    out << ',' << c.window.start << ',' << c.window.end << '\n';
  }
}

std::vector<AuthorCareer> read_cohorts_csv(std::istream& in, int dataset_end_year) {
  expect_header(in, kCohortHeader, "cohorts");
  std::vector<AuthorCareer> out;
  std::string line;
  while (next_record(in, line)) {
    const auto f = csv_split(line);
    if (f.size() != 8) throw DataError("cohorts row needs 8 fields: " + line);
    AuthorCareer c;
    c.author_id = f[0];
    c.label = parse_cohort_label(f[1]);
    const int first = parse_number<int>(f[2], "first_year");
    const int last = parse_number<int>(f[3], "last_year");
    c.years = first == last ? std::vector<int>{first} : std::vector<int>{first, last};
    c.dataset_end_year = dataset_end_year;
    c.max_gap = parse_number<int>(f[4], "max_gap");
    if (!f[5].empty()) {
      c.return_year = parse_number<int>(f[5], "return_year");
      c.gap_start_year = *c.return_year - c.max_gap;
    }
    c.window = {parse_number<int>(f[6], "window_start"), parse_number<int>(f[7], "window_end")};
    out.push_back(std::move(c));
  }
  return out;
}

void write_graph_csv(std::ostream& out, const Corpus& corpus, const CitationGraph& graph) {
  out << kGraphHeader << '\n';
  for (const auto& [u, v] : graph.edges()) {
    out << csv_escape(corpus[graph.nodes()[u]].id) << ',' << csv_escape(corpus[graph.nodes()[v]].id)
        << '\n';
  }
}

CitationGraph read_graph_csv(std::istream& in, const Corpus& corpus, int year_cutoff,
                             const GraphOptions& options) {
  expect_header(in, kGraphHeader, "graph");
  std::vector<std::size_t> nodes;
  std::vector<int> node_of(corpus.size(), -1);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].year <= year_cutoff) {
      node_of[i] = static_cast<int>(nodes.size());
      nodes.push_back(i);
    }
  }
  auto lookup = [&](const std::string& id) {
    const auto idx = corpus.find(id);
    if (!idx || node_of[*idx] < 0) throw DataError("graph edge names unknown paper '" + id + "'");
    return node_of[*idx];
  };
  std::vector<std::pair<int, int>> edges;
  std::string line;
  while (next_record(in, line)) {
    const auto f = csv_split(line);
    if (f.size() != 2) throw DataError("graph row needs 2 fields: " + line);
    edges.emplace_back(lookup(f[0]), lookup(f[1]));
  }
  return CitationGraph(year_cutoff, options, std::move(nodes), corpus.size(), std::move(edges));
}

void write_partition_jsonl(std::ostream& out, const Corpus& corpus, const CitationGraph& graph,
                           const Partition& partition) {
  if (partition.community.size() != graph.node_count()) {
    throw ParameterError("partition does not cover the graph");
  }
  for (std::size_t n = 0; n < graph.node_count(); ++n) {
    nlohmann::ordered_json line;
    line["paper"] = corpus[graph.nodes()[n]].id;
    line["community"] = partition.community[n];
    out << line.dump() << '\n';
  }
  nlohmann::ordered_json trailer;
  trailer["modularity"] = partition.modularity;
  trailer["n_communities"] = partition.community_count;
  trailer["resolution"] = partition.resolution;
  trailer["seed"] = partition.seed;
  out << trailer.dump() << '\n';
}

Partition read_partition_jsonl(std::istream& in, const Corpus& corpus, const CitationGraph& graph) {
  Partition p;
  p.community.assign(graph.node_count(), -1);
  bool trailer = false;
  std::string line;
  while (next_record(in, line)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("bad partition line: ") + e.what());
    }
    if (j.contains("paper")) {
      const auto id = j.at("paper").get<std::string>();
      const auto idx = corpus.find(id);
      const int node = idx ? graph.node_of(*idx) : -1;
      if (node < 0) throw DataError("partition names unknown paper '" + id + "'");
      p.community[node] = j.at("community").get<int>();
    } else if (j.contains("modularity")) {
      trailer = true;
      p.modularity = j.at("modularity").get<double>();
      p.community_count = j.at("n_communities").get<int>();
      if (j.contains("resolution")) p.resolution = j.at("resolution").get<double>();
      if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    } else {
      throw DataError("unrecognized partition line: " + line);
    }
  }
  if (!trailer) throw DataError("partition file lacks its trailer line");
  for (int c : p.community) {
    if (c < 0) throw DataError("partition does not cover every graph node");
    if (c >= p.community_count) throw DataError("community id exceeds n_communities");
  }
  return p;
}

void write_features_csv(std::ostream& out, std::span<const FeatureRow> rows) {
  out << kFeatureHeader << '\n';
  for (const auto& r : rows) {
    out << csv_escape(r.author_id) << ',' << to_string(r.label) << ',' << r.P << ',' << r.C << ','
        << r.h << ',' << optional_field(r.B) << ',' << r.ACC << ',' << optional_field(r.XCC) << ','
        << optional_field(r.H_g) << '\n';
  }
}

std::vector<FeatureRow> read_features_csv(std::istream& in) {
  expect_header(in, kFeatureHeader, "features");
  std::vector<FeatureRow> rows;
  std::string line;
  while (next_record(in, line)) {
    const auto f = csv_split(line);
    if (f.size() != 9) throw DataError("features row needs 9 fields: " + line);
    FeatureRow r;
    r.author_id = f[0];
    r.label = parse_cohort_label(f[1]);
    r.P = parse_number<int>(f[2], "P");
    r.C = parse_number<std::int64_t>(f[3], "C");
    r.h = parse_number<int>(f[4], "h");
    r.B = parse_optional(f[5], "B");
    r.ACC = parse_number<int>(f[6], "ACC");
    r.XCC = parse_optional(f[7], "XCC");
    r.H_g = parse_optional(f[8], "H_g");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace comeback
