#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comeback/corpus.hpp"

namespace comeback {

enum class CohortLabel { Comeback, Dropout, Active };

std::string_view to_string(CohortLabel label);
CohortLabel parse_cohort_label(std::string_view text);

// Inclusive year range.
struct YearWindow {
  int start = 0;
  int end = 0;

  bool contains(int year) const { return year >= start && year <= end; }
  int length() const { return end - start + 1; }
  bool operator==(const YearWindow&) const = default;
};

struct AuthorCareer {
  std::string author_id;
  std::vector<int> years;  // sorted, unique
  int dataset_end_year = 0;
  int max_gap = 0;
  CohortLabel label = CohortLabel::Active;
  std::optional<int> gap_start_year;  // Comeback: last year before the gap
  std::optional<int> return_year;     // Comeback: first year after the gap
  YearWindow window;

  int first_year() const { return years.front(); }
  int last_year() const { return years.back(); }
};

// Largest difference between consecutive years; 0 for fewer than two.
int max_gap(std::span<const int> years);

// Comeback: an internal gap >= threshold (so a publication follows it).
// Dropout: otherwise, >= threshold silent years up to the dataset end.
// Active: neither.
CohortLabel classify_author(std::span<const int> years, int dataset_end_year,
                            int gap_threshold = 3);

// Label plus gap bookkeeping; the window is left empty until
// observation_window() is applied. The earliest maximal gap is used on ties.
AuthorCareer make_career(std::string author_id, std::vector<int> years,
                         int dataset_end_year, int gap_threshold = 3);

// Comeback: [first, return - 1]. Dropout: the `matched_length` years ending
// at the last active year, clipped at the first year (the whole career when
// no length is given). Active: [first, dataset end].
YearWindow observation_window(const AuthorCareer& career,
                              std::optional<int> matched_dropout_length);

// Mean Comeback window length rounded to the nearest year, if any Comeback.
std::optional<int> mean_comeback_window_length(std::span<const AuthorCareer> careers);

// Labels every author in the index and assigns windows. Dropout windows use
// `matched_dropout_length`, defaulting to the mean Comeback window length.
std::vector<AuthorCareer> label_authors(const AuthorIndex& index,
                                        int dataset_end_year,
                                        int gap_threshold = 3,
                                        std::optional<int> matched_dropout_length = {});

}  // namespace comeback
