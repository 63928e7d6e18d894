#include "comeback/cohort.hpp"

#include <algorithm>
#include <cmath>

#include "comeback/errors.hpp"

namespace comeback {

std::string_view to_string(CohortLabel label) {
  switch (label) {
    case CohortLabel::Comeback: return "Comeback";
    case CohortLabel::Dropout: return "Dropout";
    case CohortLabel::Active: return "Active";
  }
  return "Active";
}

CohortLabel parse_cohort_label(std::string_view text) {
  if (text == "Comeback" || text == "CB") return CohortLabel::Comeback;
  if (text == "Dropout" || text == "DO") return CohortLabel::Dropout;
  if (text == "Active" || text == "AC") return CohortLabel::Active;
  throw DataError("unknown cohort label '" + std::string(text) + "'");
}

int max_gap(std::span<const int> years) {
  int best = 0;
  for (std::size_t i = 1; i < years.size(); ++i) {
    best = std::max(best, years[i] - years[i - 1]);
  }
  return best;
}

namespace {

void check_years(std::span<const int> years, int dataset_end_year) {
  if (years.empty()) throw ParameterError("cannot classify an author without publications");
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i] <= years[i - 1]) throw ParameterError("years must be sorted and unique");
  }
  if (dataset_end_year < years.back()) {
    throw ParameterError("dataset end year precedes the last publication");
  }
}

}  // namespace

CohortLabel classify_author(std::span<const int> years, int dataset_end_year,
                            int gap_threshold) {
  check_years(years, dataset_end_year);
  if (max_gap(years) >= gap_threshold) return CohortLabel::Comeback;
  if (dataset_end_year - years.back() >= gap_threshold) return CohortLabel::Dropout;
  return CohortLabel::Active;
}

AuthorCareer make_career(std::string author_id, std::vector<int> years,
                         int dataset_end_year, int gap_threshold) {
  AuthorCareer c;
  c.label = classify_author(years, dataset_end_year, gap_threshold);
  c.author_id = std::move(author_id);
  c.years = std::move(years);
  c.dataset_end_year = dataset_end_year;
  c.max_gap = max_gap(c.years);
  if (c.label == CohortLabel::Comeback) {
    for (std::size_t i = 1; i < c.years.size(); ++i) {
      if (c.years[i] - c.years[i - 1] == c.max_gap) {
        c.gap_start_year = c.years[i - 1];
        c.return_year = c.years[i];
        break;
      }
    }
  }
  c.window = {c.first_year(), c.first_year() - 1};
  return c;
}

YearWindow observation_window(const AuthorCareer& career,
                              std::optional<int> matched_dropout_length) {
  if (career.years.empty()) throw ParameterError("career has no publications");
  switch (career.label) {
    case CohortLabel::Comeback:
      return {career.first_year(), *career.return_year - 1};
    case CohortLabel::Dropout: {
      if (!matched_dropout_length) return {career.first_year(), career.last_year()};
      if (*matched_dropout_length <= 0) {
        throw ParameterError("matched dropout window length must be positive");
      }
      const int start = career.last_year() - *matched_dropout_length + 1;
      return {std::max(start, career.first_year()), career.last_year()};
    }
    case CohortLabel::Active:
      return {career.first_year(), career.dataset_end_year};
  }
  return {career.first_year(), career.last_year()};
}

std::optional<int> mean_comeback_window_length(std::span<const AuthorCareer> careers) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& c : careers) {
    if (c.label != CohortLabel::Comeback) continue;
    total += observation_window(c, std::nullopt).length();
    ++count;
  }
  if (count == 0) return std::nullopt;
  return std::max(1, static_cast<int>(std::lround(total / static_cast<double>(count))));
}

std::vector<AuthorCareer> label_authors(const AuthorIndex& index,
                                        int dataset_end_year, int gap_threshold,
                                        std::optional<int> matched_dropout_length) {
  std::vector<AuthorCareer> careers;
  careers.reserve(index.size());
  for (const auto& [author, entry] : index) {
    if (entry.years.empty()) continue;
    careers.push_back(make_career(author, entry.years, dataset_end_year, gap_threshold));
  }
  const auto matched = matched_dropout_length ? matched_dropout_length
                                              : mean_comeback_window_length(careers);
  for (auto& c : careers) c.window = observation_window(c, matched);
  return careers;
}

}  // namespace comeback
