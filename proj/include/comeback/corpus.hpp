#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace comeback {

struct YearSpan {
  int first = 1980;
  int last = 2014;

  bool contains(int year) const { return year >= first && year <= last; }
};

struct PaperRecord {
  std::string id;
  std::string title;
  std::vector<std::string> authors;  // author keys, duplicates collapsed
  int year = 0;
  std::string venue;
  std::vector<std::string> references;  // never contains `id`

  bool operator==(const PaperRecord&) const = default;
};

struct AuthorRecord {
  std::string author_id;
  std::string name;
  std::optional<std::string> affiliation;
  std::vector<std::string> paper_ids;
};

struct AuthorshipTuple {
  std::string author_id;
  std::string paper_id;
  int year = 0;

  bool operator==(const AuthorshipTuple&) const = default;
};

// Per-author view: distinct publication years (strictly increasing) and the
// author's papers ordered by (year, paper id).
struct AuthorEntry {
  std::vector<int> years;
  std::vector<std::string> paper_ids;
};

using AuthorIndex = std::map<std::string, AuthorEntry>;

enum class InputFormat { Jsonl, Aminer };

InputFormat parse_input_format(std::string_view name);

struct ParseStats {
  std::size_t records_seen = 0;
  std::size_t kept = 0;
  std::size_t malformed = 0;         // undecodable line / record
  std::size_t missing_fields = 0;    // no id or no year
  std::size_t out_of_span = 0;       // year outside the configured span
  std::size_t duplicate_ids = 0;     // later occurrences of an id

  std::size_t dropped() const {
    return malformed + missing_fields + out_of_span + duplicate_ids;
  }
  std::string to_json() const;
};

struct ParseResult {
  std::vector<PaperRecord> papers;
  ParseStats stats;
};

// Streams records from `in`. Bad records are skipped and counted; this never
// throws for content problems.
ParseResult parse_papers(std::istream& in, InputFormat format,
                         YearSpan span = {});

// Opens `path` ("-" for stdin). Throws DataError if the file can't be read.
ParseResult parse_papers_file(const std::string& path, InputFormat format,
                              YearSpan span = {});

// Splits on comma, semicolon and whitespace runs; drops empty tokens and
// keeps the first occurrence of each key.
std::vector<std::string> normalize_references(std::string_view raw);

std::vector<AuthorshipTuple> explode_authorship(
    std::span<const PaperRecord> papers);

AuthorIndex build_author_index(std::span<const AuthorshipTuple> tuples);

std::vector<AuthorRecord> build_author_records(const AuthorIndex& index);

// Canonical JSONL line: keys id, title, authors, year, venue, references.
std::string to_jsonl_line(const PaperRecord& paper);
void write_jsonl(std::ostream& out, std::span<const PaperRecord> papers);

// Immutable paper table with an id lookup. Construction sorts papers by id so
// every downstream ordering is canonical.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<PaperRecord> papers);

  const std::vector<PaperRecord>& papers() const { return papers_; }
  std::size_t size() const { return papers_.size(); }
  const PaperRecord& operator[](std::size_t i) const { return papers_[i]; }

  std::optional<std::size_t> find(std::string_view id) const;

  bool shares_author(std::size_t a, std::size_t b) const;
  // One flag per entry of papers()[i].references; true iff the referenced
  // paper is in the corpus and shares at least one author with paper i.
  std::vector<bool> self_citation_flags(std::size_t i) const;

  // Paper indices per author, ordered by (year, id).
  const std::map<std::string, std::vector<std::size_t>>& author_papers() const {
    return author_papers_;
  }
  AuthorIndex author_index() const;

  std::optional<int> min_year() const;
  std::optional<int> max_year() const;

 private:
  std::vector<PaperRecord> papers_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> author_papers_;
};

}  // namespace comeback
