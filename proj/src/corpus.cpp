#include "comeback/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "comeback/errors.hpp"
#include "json.hpp"

namespace comeback {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> dedup_keep_first(std::vector<std::string> keys) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(keys.size());
  for (auto& k : keys) {
    if (k.empty()) continue;
    if (seen.insert(k).second) out.push_back(std::move(k));
  }
  return out;
}

// Author lists use ';' when present (AMiner v8+), else ','.
std::vector<std::string> split_author_list(std::string_view raw) {
  const char sep = raw.find(';') != std::string_view::npos ? ';' : ',';
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t end = raw.find(sep, start);
    if (end == std::string_view::npos) end = raw.size();
    out.push_back(trim(raw.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

std::optional<int> parse_year(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const int y = std::stoi(t, &used);
    if (used != t.size()) return std::nullopt;
    return y;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Shared tail of both readers: apply normalization and filters.
void admit(PaperRecord rec, bool has_id, bool has_year, YearSpan span,
           std::unordered_set<std::string>& seen_ids, ParseResult& out) {
  ++out.stats.records_seen;
  if (!has_id || !has_year || rec.id.empty()) {
    ++out.stats.missing_fields;
    return;
  }
  if (!span.contains(rec.year)) {
    ++out.stats.out_of_span;
    return;
  }
  if (!seen_ids.insert(rec.id).second) {
    ++out.stats.duplicate_ids;
    return;
  }
  rec.authors = dedup_keep_first(std::move(rec.authors));
  rec.references = dedup_keep_first(std::move(rec.references));
  std::erase(rec.references, rec.id);
  ++out.stats.kept;
  out.papers.push_back(std::move(rec));
}

std::vector<std::string> json_key_list(const ordered_json& value,
                                       bool authors) {
  std::vector<std::string> out;
  if (value.is_null()) return out;
  if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    if (authors) {
      for (auto& a : split_author_list(s)) out.push_back(std::move(a));
    } else {
      out = normalize_references(s);
    }
    return out;
  }
  if (!value.is_array()) throw std::invalid_argument("expected list");
  for (const auto& item : value) {
    if (item.is_string()) {
      out.push_back(trim(item.get_ref<const std::string&>()));
    } else if (item.is_number_integer()) {
      out.push_back(std::to_string(item.get<long long>()));
    } else {
      throw std::invalid_argument("expected string key");
    }
  }
  return out;
}

void parse_jsonl(std::istream& in, YearSpan span, ParseResult& out) {
  std::unordered_set<std::string> seen_ids;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto doc = ordered_json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      ++out.stats.records_seen;
      ++out.stats.malformed;
      continue;
    }
    PaperRecord rec;
    bool has_id = false, has_year = false;
    try {
      if (auto it = doc.find("id"); it != doc.end() && !it->is_null()) {
        if (it->is_string()) {
          rec.id = trim(it->get_ref<const std::string&>());
        } else if (it->is_number_integer()) {
          rec.id = std::to_string(it->get<long long>());
        } else {
          throw std::invalid_argument("id");
        }
        has_id = !rec.id.empty();
      }
      if (auto it = doc.find("year"); it != doc.end() && !it->is_null()) {
        if (it->is_number_integer()) {
          rec.year = it->get<int>();
          has_year = true;
        } else if (it->is_string()) {
          if (auto y = parse_year(it->get_ref<const std::string&>())) {
            rec.year = *y;
            has_year = true;
          }
        } else {
          throw std::invalid_argument("year");
        }
      }
      if (auto it = doc.find("title"); it != doc.end() && it->is_string()) {
        rec.title = it->get<std::string>();
      }
      if (auto it = doc.find("venue"); it != doc.end() && it->is_string()) {
        rec.venue = it->get<std::string>();
      }
      if (auto it = doc.find("authors"); it != doc.end()) {
        rec.authors = json_key_list(*it, true);
      }
      if (auto it = doc.find("references"); it != doc.end()) {
        rec.references = json_key_list(*it, false);
      }
    } catch (const std::exception&) {
      ++out.stats.records_seen;
      ++out.stats.malformed;
      continue;
    }
    admit(std::move(rec), has_id, has_year, span, seen_ids, out);
  }
}

// AMiner citation-network text: one field per line, records separated by a
// blank line or by the next "#*" title line.
void parse_aminer(std::istream& in, YearSpan span, ParseResult& out) {
  std::unordered_set<std::string> seen_ids;
  PaperRecord rec;
  bool open = false, has_id = false, has_year = false, bad = false;

  auto flush = [&] {
    if (open) {
      if (bad) {
        ++out.stats.records_seen;
        ++out.stats.malformed;
      } else {
        admit(std::move(rec), has_id, has_year, span, seen_ids, out);
      }
    }
    rec = PaperRecord{};
    open = has_id = has_year = bad = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line.rfind("#*", 0) == 0) {
      flush();
      open = true;
      rec.title = trim(std::string_view(line).substr(2));
    } else if (line.rfind("#@", 0) == 0) {
      open = true;
      rec.authors = split_author_list(std::string_view(line).substr(2));
    } else if (line.rfind("#year", 0) == 0 || line.rfind("#t", 0) == 0) {
      open = true;
      const std::size_t skip = line.rfind("#year", 0) == 0 ? 5 : 2;
      if (auto y = parse_year(std::string_view(line).substr(skip))) {
        rec.year = *y;
        has_year = true;
      } else if (!trim(std::string_view(line).substr(skip)).empty()) {
        bad = true;
      }
    } else if (line.rfind("#citation", 0) == 0) {
      open = true;
    } else if (line.rfind("#conf", 0) == 0) {
      open = true;
      rec.venue = trim(std::string_view(line).substr(5));
    } else if (line.rfind("#c", 0) == 0) {
      open = true;
      rec.venue = trim(std::string_view(line).substr(2));
    } else if (line.rfind("#index", 0) == 0) {
      open = true;
      rec.id = trim(std::string_view(line).substr(6));
      has_id = !rec.id.empty();
    } else if (line.rfind("#%", 0) == 0) {
      open = true;
      for (auto& r : normalize_references(std::string_view(line).substr(2))) {
        rec.references.push_back(std::move(r));
      }
    } else if (line.rfind("#!", 0) == 0 || line.rfind("#arnetid", 0) == 0) {
      open = true;
    } else {
      open = true;
      bad = true;
    }
  }
  flush();
}

}  // namespace

InputFormat parse_input_format(std::string_view name) {
  if (name == "jsonl") return InputFormat::Jsonl;
  if (name == "aminer") return InputFormat::Aminer;
  throw ParameterError("unknown input format '" + std::string(name) +
                       "' (expected jsonl|aminer)");
}

std::string ParseStats::to_json() const {
  ordered_json j;
  j["records_seen"] = records_seen;
  j["kept"] = kept;
  j["dropped"] = dropped();
  j["malformed"] = malformed;
  j["missing_fields"] = missing_fields;
  j["out_of_span"] = out_of_span;
  j["duplicate_ids"] = duplicate_ids;
  return j.dump();
}

ParseResult parse_papers(std::istream& in, InputFormat format, YearSpan span) {
  ParseResult out;
  if (format == InputFormat::Jsonl) {
    parse_jsonl(in, span, out);
  } else {
    parse_aminer(in, span, out);
  }
  if (in.bad()) throw DataError("read error while parsing input stream");
  return out;
}

ParseResult parse_papers_file(const std::string& path, InputFormat format,
                              YearSpan span) {
  if (path == "-") return parse_papers(std::cin, format, span);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input file: " + path);
  return parse_papers(in, format, span);
}

std::vector<std::string> normalize_references(std::string_view raw) {
  std::vector<std::string> tokens;
  std::string current;
  auto push = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char ch : raw) {
    if (ch == ',' || ch == ';' || std::isspace(static_cast<unsigned char>(ch))) {
      push();
    } else {
      current.push_back(ch);
    }
  }
  push();
  return dedup_keep_first(std::move(tokens));
}

std::vector<AuthorshipTuple> explode_authorship(
    std::span<const PaperRecord> papers) {
  std::vector<AuthorshipTuple> out;
  for (const auto& p : papers) {
    std::unordered_set<std::string_view> seen;
    for (const auto& a : p.authors) {
      if (a.empty() || !seen.insert(a).second) continue;
      out.push_back({a, p.id, p.year});
    }
  }
  return out;
}

AuthorIndex build_author_index(std::span<const AuthorshipTuple> tuples) {
  std::map<std::string, std::set<std::pair<int, std::string>>> grouped;
  for (const auto& t : tuples) grouped[t.author_id].emplace(t.year, t.paper_id);
  AuthorIndex index;
  for (auto& [author, entries] : grouped) {
    AuthorEntry e;
    for (const auto& [year, pid] : entries) {
      if (e.years.empty() || e.years.back() != year) e.years.push_back(year);
      e.paper_ids.push_back(pid);
    }
    index.emplace(author, std::move(e));
  }
  return index;
}

std::vector<AuthorRecord> build_author_records(const AuthorIndex& index) {
  std::vector<AuthorRecord> out;
  out.reserve(index.size());
  for (const auto& [id, entry] : index) {
    out.push_back({id, id, std::nullopt, entry.paper_ids});
  }
  return out;
}

std::string to_jsonl_line(const PaperRecord& p) {
  ordered_json j;
  j["id"] = p.id;
  j["title"] = p.title;
  j["authors"] = p.authors;
  j["year"] = p.year;
  j["venue"] = p.venue;
  j["references"] = p.references;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void write_jsonl(std::ostream& out, std::span<const PaperRecord> papers) {
  for (const auto& p : papers) out << to_jsonl_line(p) << '\n';
}

Corpus::Corpus(std::vector<PaperRecord> papers) : papers_(std::move(papers)) {
  std::sort(papers_.begin(), papers_.end(),
            [](const PaperRecord& a, const PaperRecord& b) { return a.id < b.id; });
  by_id_.reserve(papers_.size());
  for (std::size_t i = 0; i < papers_.size(); ++i) {
    if (!by_id_.emplace(papers_[i].id, i).second) {
      throw DataError("duplicate paper id in corpus: " + papers_[i].id);
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& a : papers_[i].authors) {
      if (!a.empty() && seen.insert(a).second) author_papers_[a].push_back(i);
    }
  }
  for (auto& [author, list] : author_papers_) {
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      if (papers_[a].year != papers_[b].year) return papers_[a].year < papers_[b].year;
      return papers_[a].id < papers_[b].id;
    });
  }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

bool Corpus::shares_author(std::size_t a, std::size_t b) const {
  for (const auto& x : papers_[a].authors) {
    for (const auto& y : papers_[b].authors) {
      if (x == y) return true;
    }
  }
  return false;
}

std::vector<bool> Corpus::self_citation_flags(std::size_t i) const {
  std::vector<bool> flags;
  flags.reserve(papers_[i].references.size());
  for (const auto& ref : papers_[i].references) {
    auto j = find(ref);
    flags.push_back(j && shares_author(i, *j));
  }
  return flags;
}

AuthorIndex Corpus::author_index() const {
  return build_author_index(explode_authorship(papers_));
}

std::optional<int> Corpus::min_year() const {
  if (papers_.empty()) return std::nullopt;
  int y = papers_.front().year;
  for (const auto& p : papers_) y = std::min(y, p.year);
  return y;
}

std::optional<int> Corpus::max_year() const {
  if (papers_.empty()) return std::nullopt;
  int y = papers_.front().year;
  for (const auto& p : papers_) y = std::max(y, p.year);
  return y;
}

}  // namespace comeback
