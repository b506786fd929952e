#pragma once

// Flat key = value experiment configuration.
//
// Format: one `key = value` per line; `#` starts a comment; blank lines are
// ignored. Lists are comma-separated. Later assignments override earlier
// ones, and command-line overrides are applied last.
//
// Common keys (every experiment):
//   experiment   name of the experiment (informational; the CLI picks it)
//   seed         master seed, unsigned 64-bit                [default 1]
//   threads      worker threads; results do not depend on it [default 1]
//   out          output directory                            [default out]
//   offspring    geometric | poisson | binary | custom       [default geometric]
//   pmf          custom pmf as k:p,k:p,... (offspring=custom only)
//   node_budget  arena cap per sampled tree                  [default 1e8]
// Experiment-specific keys and their defaults are listed in the README; the
// `config` block of summary.json echoes the settings of each run.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmgw::exp {

class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    Config c;
    c.parse(in, path);
    return c;
  }

  static Config from_string(const std::string& text) {
    std::istringstream in(text);
    Config c;
    c.parse(in, "<string>");
    return c;
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  /// Parses `key=value`.
  void set_assignment(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got: " + kv);
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  double get_double(const std::string& key, double def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    return to_double(key, it->second);
  }

  long long get_int(const std::string& key, long long def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    const double d = to_double(key, it->second);
    const auto i = static_cast<long long>(d);
    if (static_cast<double>(i) != d) throw std::invalid_argument("config key " + key + " must be an integer");
    return i;
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    std::uint64_t v = 0;
    const auto& s = it->second;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw std::invalid_argument("config key " + key + " must be an unsigned integer");
    return v;
  }

  std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    std::vector<std::string> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::vector<long long> get_int_list(const std::string& key, const std::vector<long long>& def) const {
    if (!has(key)) return def;
    std::vector<long long> out;
    for (const auto& s : get_list(key, {})) {
      const double d = to_double(key, s);
      out.push_back(static_cast<long long>(d));
    }
    return out;
  }

  std::vector<double> get_double_list(const std::string& key, const std::vector<double>& def) const {
    if (!has(key)) return def;
    std::vector<double> out;
    for (const auto& s : get_list(key, {})) out.push_back(to_double(key, s));
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  void parse(std::istream& in, const std::string& origin) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.find('=') == std::string::npos)
        throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected key = value");
      set_assignment(line);
    }
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string& key, const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("config key " + key + " must be numeric, got: " + s);
    }
    if (pos != s.size()) throw std::invalid_argument("config key " + key + " must be numeric, got: " + s);
    return v;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace hmgw::exp
