#include "pam/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pam {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key");
    if (cfg.kv_.count(key))
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    cfg.kv_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool KeyValueConfig::has(const std::string& key) const {
  return kv_.count(key) != 0;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end())
    throw std::invalid_argument("config: missing required key '" + key + "'");
  consumed_.insert(key);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& dflt) {
  if (!has(key)) {
    kv_[key] = dflt;  // echo resolved default
  }
  return get_string(key);
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key + "' is not a number: " +
                                s);
  }
}

double KeyValueConfig::get_double(const std::string& key, double dflt) {
  if (!has(key)) kv_[key] = format_full(dflt);
  return get_double(key);
}

std::int64_t KeyValueConfig::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::invalid_argument("config: key '" + key +
                                "' is not an integer: " + s);
  return v;
}

std::int64_t KeyValueConfig::get_int(const std::string& key,
                                     std::int64_t dflt) {
  if (!has(key)) kv_[key] = std::to_string(dflt);
  return get_int(key);
}

bool KeyValueConfig::get_bool(const std::string& key, bool dflt) {
  if (!has(key)) kv_[key] = dflt ? "true" : "false";
  const std::string s = get_string(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config: key '" + key + "' is not a bool: " + s);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
  const std::string s = get_string(key);
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (...) {
      throw std::invalid_argument("config: bad number in list '" + key + "'");
    }
  }
  if (out.empty())
    throw std::invalid_argument("config: empty list for key '" + key + "'");
  return out;
}

std::vector<double> KeyValueConfig::get_doubles(
    const std::string& key, const std::vector<double>& dflt) {
  if (!has(key)) {
    std::string s;
    for (std::size_t i = 0; i < dflt.size(); ++i) {
      if (i) s += ",";
      s += format_full(dflt[i]);
    }
    kv_[key] = s;
  }
  return get_doubles(key);
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

void KeyValueConfig::ensure_all_consumed() const {
  std::string leftover;
  for (const auto& [k, v] : kv_)
    if (!consumed_.count(k)) leftover += (leftover.empty() ? "" : ", ") + k;
  if (!leftover.empty())
    throw std::invalid_argument("config: unknown key(s): " + leftover);
}

std::string KeyValueConfig::render() const {
  std::string out;
  for (const auto& [k, v] : kv_) out += k + " = " + v + "\n";
  return out;
}

namespace {

Eigen::VectorXd to_point(const std::vector<double>& xs) {
  Eigen::VectorXd p(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) p[i] = xs[i];
  return p;
}

}  // namespace

RunConfig RunConfig::from_config(KeyValueConfig& cfg) {
  RunConfig rc;
  const int d = static_cast<int>(cfg.get_int("d", 3));
  const double kappa = cfg.get_double("kappa");
  if (d < 3)
    throw std::invalid_argument(
        "config: d = " + std::to_string(d) +
        " violates the dimension restriction d >= 3");
  if (kappa < 0.0 || kappa >= 0.5 * (d - 2))
    throw std::invalid_argument(
        "config: kappa = " + format_full(kappa) +
        " violates the coupling window 0 <= kappa < (d-2)/2 needed for "
        "finite second moments");
  rc.model = ModelParams(d, kappa);

  rc.lattice.d = d;
  rc.lattice.n = static_cast<int>(cfg.get_int("lattice.n", 32));
  rc.lattice.box_length = cfg.get_double("lattice.L", 4.0);
  rc.lattice.validate();

  rc.epsilon = cfg.get_double("epsilon");
  if (rc.lattice.cell() >= 0.5 * rc.epsilon)
    throw std::invalid_argument(
        "config: cell = " + format_full(rc.lattice.cell()) +
        " does not resolve the mollifier (need cell < epsilon/2)");

  const double cell = rc.lattice.cell();
  const double dt_default =
      std::min(cell * cell, rc.epsilon * rc.epsilon) / 4.0;
  rc.dt = cfg.get_double("dt", dt_default);
  if (!(rc.dt > 0.0) || rc.dt > 0.5 * cell * cell * (1.0 + 1e-12))
    throw std::invalid_argument(
        "config: dt = " + format_full(rc.dt) +
        " violates the heat-scale restriction dt <= cell^2/2");
  rc.t_end = cfg.get_double("t_end", 1.0);
  if (!(rc.t_end > 0.0))
    throw std::invalid_argument("config: t_end must be > 0");

  const std::string kind = cfg.get_string("init.kind", "lebesgue");
  const double delta_default = rc.epsilon * rc.epsilon;
  if (kind == "lebesgue") {
    rc.init = MeasureSpec::lebesgue(cfg.get_double("init.intensity", 1.0));
  } else if (kind == "uniform_ball") {
    rc.init = MeasureSpec::uniform_ball(
        to_point(cfg.get_doubles("init.center",
                                 std::vector<double>(d, 0.0))),
        cfg.get_double("init.radius", 1.0), cfg.get_double("init.mass", 1.0),
        cfg.get_double("init.delta", 0.0));
  } else if (kind == "atoms") {
    // atoms = x1,...,xd,w ; x1,...,xd,w ; ...
    const std::string spec = cfg.get_string("init.atoms");
    std::vector<std::pair<Eigen::VectorXd, double>> atoms;
    std::istringstream in(spec);
    std::string group;
    while (std::getline(in, group, ';')) {
      std::vector<double> xs;
      std::istringstream gi(group);
      std::string tok;
      while (std::getline(gi, tok, ',')) xs.push_back(std::stod(tok));
      if (static_cast<int>(xs.size()) != d + 1)
        throw std::invalid_argument(
            "config: init.atoms entries need d coordinates plus a weight");
      Eigen::VectorXd x(d);
      for (int ax = 0; ax < d; ++ax) x[ax] = xs[ax];
      atoms.emplace_back(x, xs[d]);
    }
    rc.init = MeasureSpec::atom_cloud(std::move(atoms),
                                      cfg.get_double("init.delta",
                                                     delta_default));
  } else {
    throw std::invalid_argument("config: unknown init.kind '" + kind + "'");
  }

  rc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  rc.n_ensemble = static_cast<std::size_t>(cfg.get_int("n_ensemble", 1));
  if (rc.n_ensemble < 1)
    throw std::invalid_argument("config: n_ensemble must be >= 1");
  return rc;
}

void RunConfig::echo_into(KeyValueConfig& cfg) const {
  cfg.set("d", std::to_string(model.d));
  cfg.set("kappa", format_full(model.kappa));
  cfg.set("alpha", format_full(model.alpha));
  cfg.set("epsilon", format_full(epsilon));
  cfg.set("lattice.n", std::to_string(lattice.n));
  cfg.set("lattice.L", format_full(lattice.box_length));
  cfg.set("dt", format_full(dt));
  cfg.set("t_end", format_full(t_end));
  cfg.set("seed", std::to_string(seed));
  cfg.set("n_ensemble", std::to_string(n_ensemble));
}

}  // namespace pam
