#pragma once

// Experiment output: raw.csv plus summary.json.
//
// summary.json layout (see docs/summary.schema.json):
//   experiment  string
//   seed        integer
//   config      object of the effective key/value settings
//   estimates   name -> {value, std_error} or {value, exact: true}
//   checks      array of {name, value, threshold, pass}
//   all_pass    boolean, true iff every check passed
//   notes       array of strings

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmgw/experiments/config.hpp"

namespace hmgw::exp {

struct Check {
  std::string name;
  double value = 0.0;
  std::string threshold;
  bool pass = false;
};

/// Accumulates CSV text; numbers are written with 17 significant digits so
/// that reruns can be compared byte for byte.
class CsvTable {
 public:
  explicit CsvTable(std::string header = {}) {
    if (!header.empty()) out_ << header << '\n';
    out_ << std::setprecision(17);
  }

  template <class... Ts>
  void row(const Ts&... xs) {
    bool first = true;
    ((out_ << (first ? "" : ",") << xs, first = false), ...);
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

class Report {
 public:
  Report(std::string experiment, std::uint64_t seed) : name_(std::move(experiment)), seed_(seed) {}

  const std::string& name() const { return name_; }

  void set_config(const Config& c) {
    for (const auto& [k, v] : c.entries()) config_[k] = v;
  }
  void set_default(const std::string& key, const std::string& value) {
    if (!config_.contains(key)) config_[key] = value;
  }

  void estimate(const std::string& name, double value, double std_error) {
    estimates_[name] = {{"value", finite_or_null(value)}, {"std_error", finite_or_null(std_error)}};
  }
  void exact(const std::string& name, double value) {
    estimates_[name] = {{"value", finite_or_null(value)}, {"exact", true}};
  }

  /// Records a check and returns its outcome.
  bool check(const std::string& name, double value, const std::string& threshold, bool pass) {
    checks_.push_back({name, value, threshold, pass && !std::isnan(value)});
    return checks_.back().pass;
  }

  void note(const std::string& text) { notes_.push_back(text); }

  CsvTable& raw() { return raw_; }
  void set_raw(CsvTable t) { raw_ = std::move(t); }
  void add_file(const std::string& name, std::string content) { extra_.emplace_back(name, std::move(content)); }

  const std::vector<Check>& checks() const { return checks_; }
  bool all_pass() const {
    for (const auto& c : checks_)
      if (!c.pass) return false;
    return true;
  }
  const Check* find_check(const std::string& name) const {
    for (const auto& c : checks_)
      if (c.name == name) return &c;
    return nullptr;
  }
  double estimate_value(const std::string& name) const {
    return estimates_.at(name).at("value").get<double>();
  }

  nlohmann::ordered_json summary() const {
    nlohmann::ordered_json j;
    j["experiment"] = name_;
    j["seed"] = seed_;
    j["config"] = config_;
    j["estimates"] = estimates_;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : checks_)
      arr.push_back({{"name", c.name}, {"value", finite_or_null(c.value)}, {"threshold", c.threshold}, {"pass", c.pass}});
    j["checks"] = arr;
    j["all_pass"] = all_pass();
    j["notes"] = notes_;
    return j;
  }

  std::string raw_csv() const { return raw_.str(); }

  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    write_text(dir / "raw.csv", raw_csv());
    write_text(dir / "summary.json", summary().dump(2) + "\n");
    for (const auto& [name, content] : extra_) write_text(dir / name, content);
  }

 private:
  static nlohmann::ordered_json finite_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
  }

  static void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << s;
  }

  std::string name_;
  std::uint64_t seed_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json estimates_ = nlohmann::ordered_json::object();
  std::vector<Check> checks_;
  std::vector<std::string> notes_;
  CsvTable raw_;
  std::vector<std::pair<std::string, std::string>> extra_;
};

}  // namespace hmgw::exp
