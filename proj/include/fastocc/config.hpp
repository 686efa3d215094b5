#ifndef FASTOCC_CONFIG_HPP
#define FASTOCC_CONFIG_HPP

// Flat `key = value` run configuration. Later assignments win; '#' starts a
// comment. Every key must belong to the command's known set.

#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fastocc/csv.hpp"
#include "fastocc/error.hpp"

namespace fastocc {

class RunConfig {
 public:
  explicit RunConfig(std::set<std::string> known = {}) : known_(std::move(known)) {}

  void parse(std::istream& in, const std::string& source) {
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
      ++row;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string text = csv::trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorKind::Config, source + ": line " + std::to_string(row) + ": expected 'key = value'");
      }
      set(csv::trim(text.substr(0, eq)), csv::trim(text.substr(eq + 1)), source + ": line " + std::to_string(row));
    }
  }

  void parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config file '" + path + "'");
    parse(in, path);
  }

  void set(const std::string& key, const std::string& value, const std::string& where = "command line") {
    if (!known_.empty() && !known_.count(key)) throw Error(ErrorKind::Config, where + ": unknown key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto v = csv::parse_number<double>(values_.at(key));
    if (!v) throw bad(key, "a number");
    return *v;
  }

  long get_long(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const auto v = csv::parse_number<long>(values_.at(key));
    if (!v) throw bad(key, "an integer");
    return *v;
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto v = csv::parse_number<std::uint64_t>(values_.at(key));
    if (!v) throw bad(key, "a non-negative integer");
    return *v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = values_.at(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw bad(key, "a boolean");
  }

  // Comma- or space-separated list.
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    std::string s = values_.at(key);
    for (char& c : s) {
      if (c == ',') c = ' ';
    }
    std::istringstream in(s);
    std::string item;
    while (in >> item) out.push_back(item);
    return out;
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
      const auto v = csv::parse_number<double>(item);
      if (!v) throw bad(key, "a list of numbers");
      out.push_back(*v);
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  Error bad(const std::string& key, const char* what) const {
    return Error(ErrorKind::Config, "key '" + key + "' must be " + what + ", got '" + values_.at(key) + "'");
  }

  std::set<std::string> known_;
  std::map<std::string, std::string> values_;
};

}  // namespace fastocc

#endif  // FASTOCC_CONFIG_HPP
