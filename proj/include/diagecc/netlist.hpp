#pragma once

// NOR/NOT netlists.
//
// Text format, one statement per line:
//   .inputs a b cin
//   .outputs s cout
//   n1 = NOR a b
//   n2 = NOT n1
// '#' starts a comment. Identifiers match [A-Za-z0-9_]+. Gates may appear in
// any order; they are sorted topologically on load.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "diagecc/bits.hpp"
#include "diagecc/core.hpp"

namespace diagecc {

enum class GateKind : std::uint8_t { Nor2, Not };

struct Gate {
  std::string id;
  GateKind kind = GateKind::Nor2;
  std::vector<std::string> operands;
  std::size_t sourceLine = 0;
};

struct Netlist {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<Gate> gates;  // topological order

  /// Number of gate operands that read each signal.
  std::unordered_map<std::string, std::size_t> fanout() const {
    std::unordered_map<std::string, std::size_t> f;
    for (const auto& g : gates)
      for (const auto& o : g.operands) ++f[o];
    return f;
  }
};

namespace detail {
inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '_';
  });
}

[[noreturn]] inline void syntax_error(std::size_t line, const std::string& what) {
  throw InputError("netlist line " + std::to_string(line) + ": " + what);
}
}  // namespace detail

inline Netlist parse_netlist(std::string_view text) {
  Netlist nl;
  std::vector<Gate> raw;
  std::unordered_map<std::string, std::size_t> defined;  // id -> line
  std::vector<std::pair<std::string, std::size_t>> outputRefs;

  std::istringstream in{std::string(text)};
  std::string lineText;
  std::size_t lineNo = 0;
  auto define = [&](const std::string& id, std::size_t ln) {
    if (!detail::is_identifier(id)) detail::syntax_error(ln, "bad identifier '" + id + "'");
    if (auto it = defined.find(id); it != defined.end())
      detail::syntax_error(ln, "'" + id + "' already defined on line " +
                                   std::to_string(it->second));
    defined.emplace(id, ln);
  };

  while (std::getline(in, lineText)) {
    ++lineNo;
    if (auto hash = lineText.find('#'); hash != std::string::npos) lineText.resize(hash);
    std::istringstream ls(lineText);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    if (tok[0] == ".inputs") {
      for (std::size_t k = 1; k < tok.size(); ++k) {
        define(tok[k], lineNo);
        nl.inputs.push_back(tok[k]);
      }
    } else if (tok[0] == ".outputs") {
      for (std::size_t k = 1; k < tok.size(); ++k) {
        if (!detail::is_identifier(tok[k]))
          detail::syntax_error(lineNo, "bad identifier '" + tok[k] + "'");
        outputRefs.emplace_back(tok[k], lineNo);
      }
    } else if (tok[0].starts_with('.')) {
      detail::syntax_error(lineNo, "unknown directive '" + tok[0] + "'");
    } else {
      if (tok.size() < 4 || tok[1] != "=")
        detail::syntax_error(lineNo, "expected '<id> = NOR a b' or '<id> = NOT a'");
      Gate g;
      g.id = tok[0];
      g.sourceLine = lineNo;
      if (tok[2] == "NOR") {
        if (tok.size() != 5) detail::syntax_error(lineNo, "NOR takes exactly two operands");
        g.kind = GateKind::Nor2;
      } else if (tok[2] == "NOT") {
        if (tok.size() != 4) detail::syntax_error(lineNo, "NOT takes exactly one operand");
        g.kind = GateKind::Not;
      } else {
        detail::syntax_error(lineNo, "unsupported gate kind '" + tok[2] + "'");
      }
      for (std::size_t k = 3; k < tok.size(); ++k) {
        if (!detail::is_identifier(tok[k]))
          detail::syntax_error(lineNo, "bad identifier '" + tok[k] + "'");
        g.operands.push_back(tok[k]);
      }
      define(g.id, lineNo);
      raw.push_back(std::move(g));
    }
  }

  for (const auto& g : raw)
    for (const auto& o : g.operands)
      if (!defined.count(o))
        detail::syntax_error(g.sourceLine, "undefined operand '" + o + "'");
  for (const auto& [o, ln] : outputRefs) {
    if (!defined.count(o)) detail::syntax_error(ln, "undefined output '" + o + "'");
    nl.outputs.push_back(o);
  }

  // Kahn's algorithm, preferring file order.
  std::unordered_map<std::string, std::size_t> gateIndex;
  for (std::size_t k = 0; k < raw.size(); ++k) gateIndex.emplace(raw[k].id, k);
  std::vector<std::size_t> pending(raw.size(), 0);
  std::vector<std::vector<std::size_t>> users(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k)
    for (const auto& o : raw[k].operands)
      if (auto it = gateIndex.find(o); it != gateIndex.end()) {
        ++pending[k];
        users[it->second].push_back(k);
      }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t k = 0; k < raw.size(); ++k)
    if (!pending[k]) ready.push(k);
  while (!ready.empty()) {
    const auto k = ready.top();
    ready.pop();
    nl.gates.push_back(raw[k]);
    for (auto u : users[k])
      if (--pending[u] == 0) ready.push(u);
  }
  if (nl.gates.size() != raw.size()) {
    for (std::size_t k = 0; k < raw.size(); ++k)
      if (pending[k])
        detail::syntax_error(raw[k].sourceLine,
                             "cyclic dependency involving '" + raw[k].id + "'");
  }
  return nl;
}

/// Direct evaluation; `inputs` holds one bit per primary input, in order.
inline BitVec evaluate(const Netlist& nl, std::span<const std::uint8_t> inputs) {
  if (inputs.size() != nl.inputs.size())
    throw InputError("evaluate: expected " + std::to_string(nl.inputs.size()) +
                     " input bits, got " + std::to_string(inputs.size()));
  std::unordered_map<std::string, std::uint8_t> v;
  for (std::size_t k = 0; k < inputs.size(); ++k) v[nl.inputs[k]] = inputs[k] & 1u;
  for (const auto& g : nl.gates) {
    std::uint8_t any = 0;
    for (const auto& o : g.operands) any |= v.at(o);
    v[g.id] = any ? 0 : 1;
  }
  BitVec out;
  for (const auto& o : nl.outputs) out.push_back(v.at(o));
  return out;
}

/// Bits of `value`, least significant first, as an input assignment.
inline BitVec assignment_bits(std::uint64_t value, std::size_t width) {
  BitVec b(width);
  for (std::size_t k = 0; k < width; ++k) b[k] = (value >> k) & 1u;
  return b;
}

}  // namespace diagecc
