#pragma once

// Scenario files: one `key = value` per line, `#` starts a comment.
//
//   powers = 25, 15, 10, 3.5, 2   # pool powers in percent of the network
//   discount = 0.9
//   k = 0.999
//   grid = 1000
//   seed = 42
//
// Unknown keys are rejected so typos do not pass silently.

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arsim/core.hpp"
#include "arsim/error.hpp"

namespace arsim {

struct ScenarioFile {
  std::vector<double> powers;  // fractions
  std::optional<double> discount;
  std::optional<double> k;
  std::optional<int> grid;
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& text, std::size_t line, const std::string& key) {
  std::istringstream is(text);
  T value{};
  if (!(is >> value) || !(is >> std::ws).eof())
    throw Error(Errc::ParseError, "line " + std::to_string(line) + ": bad value for " + key + ": '" + text + "'");
  return value;
}

}  // namespace detail

inline ScenarioFile parse_scenario(std::istream& in) {
  ScenarioFile out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = detail::trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "powers") {
      std::string list = value;
      for (char& c : list)
        if (c == ',') c = ' ';
      std::istringstream is(list);
      out.powers.clear();
      for (double pct; is >> pct;) out.powers.push_back(pct / 100.0);
      if (!is.eof() || out.powers.empty())
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": bad powers list");
    } else if (key == "discount") {
      out.discount = detail::parse_number<double>(value, lineno, key);
    } else if (key == "k") {
      out.k = detail::parse_number<double>(value, lineno, key);
    } else if (key == "grid") {
      out.grid = detail::parse_number<int>(value, lineno, key);
    } else if (key == "seed") {
      out.seed = detail::parse_number<std::uint64_t>(value, lineno, key);
    } else {
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return out;
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return parse_scenario(in);
}

}  // namespace arsim
