#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pam/lattice.hpp"
#include "pam/params.hpp"
#include "pam/spde.hpp"

namespace pam {

// Flat `key = value` text with dotted sections, '#' comments. Every key must
// be consumed by the run that loads the file; leftovers are an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig parse_file(const std::string& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& dflt);
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double dflt);
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t dflt);
  bool get_bool(const std::string& key, bool dflt);
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& dflt);

  void set(const std::string& key, const std::string& value);

  // throws listing any keys never read
  void ensure_all_consumed() const;

  // canonical render (sorted keys); parse(render()) round-trips
  std::string render() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> consumed_;
};

// Core model/discretization block shared by the lattice subcommands.
struct RunConfig {
  ModelParams model;
  double epsilon = 0.0;
  LatticeSpec lattice;
  double dt = 0.0;
  double t_end = 0.0;
  MeasureSpec init;
  std::uint64_t seed = 0;
  std::size_t n_ensemble = 1;

  // parses, validates against module preconditions, resolves defaults
  // (dt = min(cell^2, eps^2)/4 when absent); messages name the violated
  // constraint
  static RunConfig from_config(KeyValueConfig& cfg);

  // echo with all defaults resolved
  void echo_into(KeyValueConfig& cfg) const;
};

std::string format_full(double v);  // locale-independent, 17 significant digits

}  // namespace pam
