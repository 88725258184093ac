#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace pam {

std::uint64_t fnv1a_hash(const void* data, std::size_t n,
                         std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a_hash(const std::string& s);
std::uint64_t file_checksum(const std::string& path);

// CSV with a mandatory header row and %.17g numeric formatting.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void row_values(const std::vector<double>& values);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t width_;
};

// Emitted for every CLI run: configuration hash, tool version/build id,
// wall-clock bounds, and a checksum per output file.
struct RunManifest {
  std::uint64_t config_hash = 0;
  std::uint64_t master_seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::pair<std::string, std::uint64_t>> outputs;

  void add_output(const std::string& path);
  void write(const std::string& path) const;
};

std::string timestamp_utc();

}  // namespace pam
