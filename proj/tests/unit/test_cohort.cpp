#include <algorithm>
#include <random>
#include <set>

#include "comeback/cohort.hpp"
#include "comeback/errors.hpp"
#include "doctest.h"

using namespace comeback;

namespace {

int brute_max_gap(const std::vector<int>& years) {
  int best = 0;
  for (std::size_t i = 0; i < years.size(); ++i) {
    for (std::size_t j = i + 1; j < years.size(); ++j) {
      bool consecutive = true;
      for (std::size_t k = 0; k < years.size(); ++k) {
        if (years[k] > years[i] && years[k] < years[j]) consecutive = false;
      }
      if (consecutive) best = std::max(best, years[j] - years[i]);
    }
  }
  return best;
}

std::vector<int> random_years(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 12), year(1980, 2014);
  std::set<int> s;
  const int n = count(rng);
  while (static_cast<int>(s.size()) < n) s.insert(year(rng));
  return {s.begin(), s.end()};
}

}  // namespace

TEST_SUITE("cohort") {
  TEST_CASE("max_gap examples and brute-force agreement") {
    CHECK(max_gap(std::vector<int>{2000, 2001, 2002}) == 1);
    CHECK(max_gap(std::vector<int>{2000, 2004, 2005}) == 4);
    CHECK(max_gap(std::vector<int>{2000}) == 0);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 2000; ++i) {
      const auto years = random_years(rng);
      CHECK(max_gap(years) == brute_max_gap(years));
    }
  }

  TEST_CASE("classify_author examples") {
    CHECK(classify_author(std::vector<int>{2000, 2005}, 2014) == CohortLabel::Comeback);
    CHECK(classify_author(std::vector<int>{2000, 2001}, 2014) == CohortLabel::Dropout);
    CHECK(classify_author(std::vector<int>{2010, 2011, 2012, 2013}, 2014) == CohortLabel::Active);
    CHECK(classify_author(std::vector<int>{2000, 2003}, 2014, 4) == CohortLabel::Dropout);
    CHECK(classify_author(std::vector<int>{2012}, 2014) == CohortLabel::Active);
    CHECK(classify_author(std::vector<int>{2011}, 2014) == CohortLabel::Dropout);
  }

  TEST_CASE("an internal gap takes precedence over trailing silence") {
    CHECK(classify_author(std::vector<int>{2000, 2004, 2005}, 2014) == CohortLabel::Comeback);
  }

  TEST_CASE("classify_author rejects invalid careers") {
    CHECK_THROWS_AS(classify_author(std::vector<int>{}, 2014), ParameterError);
    CHECK_THROWS_AS(classify_author(std::vector<int>{2001, 2000}, 2014), ParameterError);
    CHECK_THROWS_AS(classify_author(std::vector<int>{2000, 2015}, 2014), ParameterError);
  }

  TEST_CASE("labels are exhaustive and agree with their predicates") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 2000; ++i) {
      const auto years = random_years(rng);
      const bool comeback = brute_max_gap(years) >= 3;
      const bool dropout = !comeback && 2014 - years.back() >= 3;
      const auto label = classify_author(years, 2014);
      if (comeback) {
        CHECK(label == CohortLabel::Comeback);
      } else if (dropout) {
        CHECK(label == CohortLabel::Dropout);
      } else {
        CHECK(label == CohortLabel::Active);
      }
    }
  }

  TEST_CASE("make_career records the earliest maximal gap") {
    const auto c = make_career("a", {2000, 2004, 2005, 2009}, 2014);
    CHECK(c.label == CohortLabel::Comeback);
    CHECK(c.max_gap == 4);
    CHECK(c.gap_start_year.value() == 2000);
    CHECK(c.return_year.value() == 2004);
  }

  TEST_CASE("observation windows") {
    const auto cb = make_career("a", {2000, 2001, 2006}, 2014);
    CHECK(observation_window(cb, std::nullopt) == YearWindow{2000, 2005});
    CHECK(observation_window(cb, 2) == YearWindow{2000, 2005});

    const auto dropout = make_career("b", {1995, 1997, 1999, 2000, 2002, 2004, 2005}, 2014);
    REQUIRE(dropout.label == CohortLabel::Dropout);
    CHECK(observation_window(dropout, 6) == YearWindow{2000, 2005});
    CHECK(observation_window(dropout, std::nullopt) == YearWindow{1995, 2005});

    const auto short_dropout = make_career("c", {2003, 2005}, 2014);
    CHECK(observation_window(short_dropout, 6) == YearWindow{2003, 2005});
    CHECK_THROWS_AS(observation_window(short_dropout, 0), ParameterError);

    const auto active = make_career("d", {2010, 2012, 2014}, 2014);
    CHECK(observation_window(active, 6) == YearWindow{2010, 2014});
  }

  TEST_CASE("label_authors matches Dropout windows to the mean Comeback window") {
    AuthorIndex index;
    index["cb1"].years = {2000, 2001, 2006};  // window length 6
    index["cb2"].years = {2002, 2003, 2010};  // window length 8
    index["do1"].years = {1996, 1998, 2000, 2002, 2004, 2005};
    index["ac1"].years = {2012, 2013};
    const auto careers = label_authors(index, 2014);
    REQUIRE(careers.size() == 4);
    CHECK(mean_comeback_window_length(careers).value() == 7);
    const auto& d = careers[3];
    CHECK(d.author_id == "do1");
    CHECK(d.window == YearWindow{1999, 2005});
    CHECK(careers[0].window == YearWindow{2012, 2014});

    const auto fixed = label_authors(index, 2014, 3, 3);
    CHECK(fixed[3].window == YearWindow{2003, 2005});
  }

  TEST_CASE("label text round-trips") {
    for (auto l : {CohortLabel::Comeback, CohortLabel::Dropout, CohortLabel::Active}) {
      CHECK(parse_cohort_label(to_string(l)) == l);
    }
    CHECK_THROWS_AS(parse_cohort_label("Retired"), DataError);
  }
}
