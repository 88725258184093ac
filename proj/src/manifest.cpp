#include "pam/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <stdexcept>

#include "json.hpp"
#include "pam/config.hpp"
#include "pam/version.hpp"

namespace pam {

std::uint64_t fnv1a_hash(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a_hash(const std::string& s) {
  return fnv1a_hash(s.data(), s.size());
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checksum: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a_hash(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : path_(path), out_(path), width_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open output " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out_ << (i ? "," : "") << header[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_)
    throw std::logic_error("csv row width mismatch in " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i)
    out_ << (i ? "," : "") << cells[i];
  out_ << "\n";
}

void CsvWriter::row_values(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_full(v));
  row(cells);
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::add_output(const std::string& path) {
  outputs.emplace_back(path, file_checksum(path));
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["tool"] = "pamlab";
  j["version"] = kVersion;
  j["build"] = kBuildId;
  j["config_hash"] = config_hash;
  j["seed"] = master_seed;
  j["started"] = started;
  j["finished"] = finished;
  auto& outs = j["outputs"] = nlohmann::json::array();
  for (const auto& [p, h] : outputs) {
    nlohmann::json o;
    o["path"] = p;
    o["checksum"] = h;
    outs.push_back(o);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path);
  out << j.dump(2) << "\n";
}

}  // namespace pam
