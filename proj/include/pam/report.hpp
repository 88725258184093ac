#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pam {

struct AssertionRecord {
  std::string id;      // which identity/inequality is being exercised
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<AssertionRecord> assertions;
  std::vector<std::string> notes;  // descriptive, never asserted

  bool passed() const;
  void add_param(const std::string& key, const std::string& value);
  void add_param(const std::string& key, double value);
  AssertionRecord& assert_that(const std::string& id, double statistic,
                               double threshold, bool pass,
                               std::string detail = "");
  std::string render() const;
};

}  // namespace pam
