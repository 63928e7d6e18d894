#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "comeback/corpus.hpp"
#include "json.hpp"

namespace testing {

inline const nlohmann::json& fixtures() {
  static const nlohmann::json data = [] {
    std::ifstream in(std::string(FIXTURE_DIR) + "/oracle_values.json");
    return nlohmann::json::parse(in);
  }();
  return data;
}

inline comeback::PaperRecord paper(std::string id, int year, std::vector<std::string> authors,
                                   std::vector<std::string> refs = {}, std::string venue = "") {
  comeback::PaperRecord p;
  p.id = std::move(id);
  p.title = "T " + p.id;
  p.year = year;
  p.authors = std::move(authors);
  p.references = std::move(refs);
  p.venue = std::move(venue);
  return p;
}

inline std::vector<double> uniform_sample(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("comeback_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
