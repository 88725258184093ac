#include "pam/report.hpp"

#include <sstream>

#include "pam/config.hpp"

namespace pam {

bool ExperimentReport::passed() const {
  for (const auto& a : assertions)
    if (!a.pass) return false;
  return true;
}

void ExperimentReport::add_param(const std::string& key,
                                 const std::string& value) {
  parameters.emplace_back(key, value);
}

void ExperimentReport::add_param(const std::string& key, double value) {
  parameters.emplace_back(key, format_full(value));
}

AssertionRecord& ExperimentReport::assert_that(const std::string& id,
                                               double statistic,
                                               double threshold, bool pass,
                                               std::string detail) {
  AssertionRecord rec;
  rec.id = id;
  rec.statistic = statistic;
  rec.threshold = threshold;
  rec.pass = pass;
  rec.detail = std::move(detail);
  assertions.push_back(std::move(rec));
  return assertions.back();
}

std::string ExperimentReport::render() const {
  std::ostringstream out;
  out << "experiment: " << experiment << "\n";
  out << "seed: " << master_seed << "\n";
  out << "parameters:\n";
  for (const auto& [k, v] : parameters) out << "  " << k << " = " << v << "\n";
  out << "assertions:\n";
  for (const auto& a : assertions) {
    out << "  [" << (a.pass ? "PASS" : "FAIL") << "] " << a.id
        << "  statistic=" << format_full(a.statistic)
        << "  threshold=" << format_full(a.threshold);
    if (!a.detail.empty()) out << "  (" << a.detail << ")";
    out << "\n";
  }
  for (const auto& n : notes) out << "note: " << n << "\n";
  out << "result: " << (passed() ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace pam
