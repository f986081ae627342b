#pragma once

// key=value run configuration shared by the command-line tools.
//
//   # comment
//   n = 1020
//   pc_pairs = 4
//
// Unknown keys and malformed values are rejected.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "diagecc/machine.hpp"
#include "diagecc/reliability.hpp"

namespace diagecc {

struct RunConfig {
  MachineConfig machine{};
  std::uint64_t seed = 1;
  std::size_t row = 0;

  // reliability
  double lambdaMin = 1e-5;
  double lambdaMax = 1e3;
  double pointsPerDecade = 1.75;
  double tHours = 24.0;
  double capacityBits = 8e9;

  // campaigns
  double pBit = 0.0;
  std::uint64_t trials = 1;
  bool flipCheckBits = false;

  ReliabilityParams reliability() const {
    ReliabilityParams p;
    p.tHours = tHours;
    p.capacityBits = capacityBits;
    p.geom = machine.geom;
    return p;
  }

  void validate() const {
    machine.validate();
    if (row >= machine.geom.n) throw InputError("config: row out of range");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_uint_value(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw InputError("config: " + std::string(key) + " expects an unsigned integer, got '" +
                     std::string(v) + "'");
  return static_cast<T>(x);
}

inline double parse_double_value(std::string_view key, std::string_view v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(std::string(v), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw InputError("config: " + std::string(key) + " expects a number, got '" + std::string(v) +
                     "'");
  return x;
}

inline bool parse_bool_value(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw InputError("config: " + std::string(key) + " expects 0/1, got '" + std::string(v) + "'");
}

}  // namespace detail

/// Sets one key. Throws InputError for unknown keys or bad values.
inline void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  using detail::parse_bool_value;
  using detail::parse_double_value;
  using detail::parse_uint_value;
  auto& t = c.machine.timing;
  if (key == "n") c.machine.geom.n = parse_uint_value<std::size_t>(key, value);
  else if (key == "m") c.machine.geom.m = parse_uint_value<std::size_t>(key, value);
  else if (key == "pc_pairs") c.machine.pcPairs = parse_uint_value<std::size_t>(key, value);
  else if (key == "forwarding") c.machine.forwarding = parse_bool_value(key, value);
  else if (key == "fanin") c.machine.engine.fanInMax = parse_uint_value<std::size_t>(key, value);
  else if (key == "require_init") c.machine.engine.requireOutputInit = parse_bool_value(key, value);
  else if (key == "xor3") t.xor3Cycles = parse_uint_value<std::uint32_t>(key, value);
  else if (key == "copy") t.copyCycles = parse_uint_value<std::uint32_t>(key, value);
  else if (key == "writeback") t.writebackCycles = parse_uint_value<std::uint32_t>(key, value);
  else if (key == "ctrl_read") t.controllerReadCycles = parse_uint_value<std::uint32_t>(key, value);
  else if (key == "corr_write") t.correctionWriteCycles = parse_uint_value<std::uint32_t>(key, value);
  else if (key == "zero_cmp") t.zeroCompareCycles = parse_uint_value<std::uint32_t>(key, value);
  else if (key == "seed") c.seed = parse_uint_value<std::uint64_t>(key, value);
  else if (key == "row") c.row = parse_uint_value<std::size_t>(key, value);
  else if (key == "lambda_min") c.lambdaMin = parse_double_value(key, value);
  else if (key == "lambda_max") c.lambdaMax = parse_double_value(key, value);
  else if (key == "points_per_decade") c.pointsPerDecade = parse_double_value(key, value);
  else if (key == "t_hours") c.tHours = parse_double_value(key, value);
  else if (key == "capacity_bits") c.capacityBits = parse_double_value(key, value);
  else if (key == "p_bit") c.pBit = parse_double_value(key, value);
  else if (key == "trials") c.trials = parse_uint_value<std::uint64_t>(key, value);
  else if (key == "flip_check_bits") c.flipCheckBits = parse_bool_value(key, value);
  else throw InputError("config: unknown key '" + std::string(key) + "'");
}

/// Applies `key=value`.
inline void apply_assignment(RunConfig& c, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw InputError("config: expected key=value, got '" + std::string(assignment) + "'");
  set_config_value(c, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

inline void apply_config_text(RunConfig& c, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    auto s = detail::trim(line);
    if (s.empty()) continue;
    try {
      apply_assignment(c, s);
    } catch (const InputError& e) {
      throw InputError("config line " + std::to_string(no) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  apply_config_text(c, ss.str());
}

}  // namespace diagecc
