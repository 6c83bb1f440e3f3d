#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "txreid/errors.hpp"
#include "txreid/eval.hpp"

namespace txreid {

// Parser for the declarative experiment file consumed by `eval`. The format
// is flat `key = value` lines: values are bare tokens, "quoted strings", or
// bracketed lists `[a, b, c]`; `#` starts a comment. The schema (see the
// README) is closed: unknown keys are rejected so typos fail loudly.

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

class ConfigFile {
 public:
  explicit ConfigFile(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw UsageError(path + ", line " + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty()) {
        throw UsageError(path + ", line " + std::to_string(lineno) + ": empty key or value");
      }
      if (values_.count(key)) {
        throw UsageError(path + ": duplicate config key '" + key + "'");
      }

      std::vector<std::string> items;
      if (value.front() == '[') {
        if (value.back() != ']') {
          throw UsageError(path + ", line " + std::to_string(lineno) + ": unterminated list");
        }
        value = value.substr(1, value.size() - 2);
        std::size_t start = 0;
        while (start <= value.size()) {
          const auto comma = value.find(',', start);
          const std::string item = trim(value.substr(start, comma - start));
          if (!item.empty()) items.push_back(unquote(item));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        if (items.empty()) {
          throw UsageError(path + ", line " + std::to_string(lineno) + ": empty list");
        }
      } else {
        items.push_back(unquote(value));
      }
      values_[key] = std::move(items);
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = "") {
    if (!has(key)) return fallback;
    return single(key);
  }

  std::string require_string(const std::string& key) {
    if (!has(key)) throw UsageError(path_ + ": missing required key '" + key + "'");
    return single(key);
  }

  long long get_int(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    return parse_int(single(key), key);
  }

  double get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const std::string s = single(key);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError(path_ + ": key '" + key + "' is not a number: '" + s + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const std::string s = single(key);
    if (s == "true") return true;
    if (s == "false") return false;
    throw UsageError(path_ + ": key '" + key + "' must be true or false");
  }

  std::vector<std::string> require_list(const std::string& key) {
    if (!has(key)) throw UsageError(path_ + ": missing required key '" + key + "'");
    consumed_.insert(key);
    return values_.at(key);
  }

  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) {
    if (!has(key)) return fallback;
    consumed_.insert(key);
    std::vector<int> out;
    for (const auto& item : values_.at(key)) {
      out.push_back(static_cast<int>(parse_int(item, key)));
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, unused] : values_) {
      if (!consumed_.count(key)) {
        throw UsageError(path_ + ": unknown config key '" + key + "'");
      }
    }
  }

 private:
  std::string single(const std::string& key) {
    consumed_.insert(key);
    const auto& items = values_.at(key);
    if (items.size() != 1) {
      throw UsageError(path_ + ": key '" + key + "' must be a single value, not a list");
    }
    return items[0];
  }

  long long parse_int(const std::string& s, const std::string& key) const {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw UsageError(path_ + ": key '" + key + "' is not an integer: '" + s + "'");
    }
    return v;
  }

  std::string path_;
  std::map<std::string, std::vector<std::string>> values_;
  std::set<std::string> consumed_;
};

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& path) {
  detail::ConfigFile file(path);
  ExperimentConfig cfg;

  for (const auto& tag : file.require_list("fusion")) {
    DescriptorFiles d;
    d.name = tag;
    d.file_a = file.require_string(tag + ".a");
    d.file_b = file.require_string(tag + ".b");
    cfg.descriptors.push_back(std::move(d));
  }
  cfg.format = parse_feature_format(file.get_string("format", "csv"));
  cfg.part_len = static_cast<Index>(file.get_int("part_len", 0));
  cfg.dim_sweep = file.get_int_list("dim_sweep", {});
  {
    const std::string m1 = file.get_string("mode1_dim", "keep");
    if (m1 == "keep") {
      cfg.mode1_dim = 0;
    } else if (m1 == "auto") {
      cfg.mode1_dim = -1;
    } else {
      long long v = 0;
      auto [ptr, ec] = std::from_chars(m1.data(), m1.data() + m1.size(), v);
      if (ec != std::errc() || ptr != m1.data() + m1.size() || v < 0) {
        throw UsageError(path + ": mode1_dim must be keep, auto, or a positive integer");
      }
      cfg.mode1_dim = static_cast<int>(v);
    }
  }
  cfg.folds = static_cast<int>(file.get_int("folds", cfg.folds));
  cfg.seed = static_cast<std::uint64_t>(file.get_int("seed", 0));
  cfg.ranks = file.get_int_list("ranks", cfg.ranks);
  cfg.normalization = parse_normalization(file.get_string("normalization", "minmax"));
  cfg.max_itr = static_cast<int>(file.get_int("max_itr", cfg.max_itr));
  cfg.epsilon = file.get_double("epsilon", cfg.epsilon);
  cfg.lambda = file.get_double("lambda", cfg.lambda);
  cfg.alignment = parse_alignment(file.get_string("alignment", "aligned"));
  cfg.standardize = file.get_bool("standardize", false);
  cfg.both_directions = file.get_bool("both_directions", false);
  cfg.threads = static_cast<int>(file.get_int("threads", 1));

  file.reject_unknown();

  if (cfg.part_len < 1) throw UsageError(path + ": part_len must be a positive integer");
  if (cfg.dim_sweep.empty()) throw UsageError(path + ": dim_sweep must list at least one dimension");
  return cfg;
}

}  // namespace txreid
