#pragma once

// Schedule files.
//
//   .geometry n=<n> m=<m>
//   .timing xor3=8 copy=1 writeback=1 ctrl_read=1 corr_write=1 zero_cmp=1
//   .engine fanin=2 require_init=1
//   .pc_pairs <k>
//   .forwarding 0|1
//   .row <r>
//   .inputs <name>:<col> ...
//   .outputs <name>:<col> ...
//   .instr CHECK row index=<i> blocks=<list>
//   .instr PLAIN <micro-op>
//   .instr CRIT <micro-op> ; <micro-op> ...
//   .events
//   <event lines>
//
// Reading a schedule re-runs the instructions and rejects the file if its
// event log differs from the regenerated one.

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "diagecc/scheduler.hpp"

namespace diagecc {

inline void write_schedule(std::ostream& os, const EccSchedule& s) {
  const auto& c = s.config;
  const auto& t = c.timing;
  const auto& rp = s.program;
  os << ".geometry n=" << c.geom.n << " m=" << c.geom.m << '\n';
  os << ".timing xor3=" << t.xor3Cycles << " copy=" << t.copyCycles
     << " writeback=" << t.writebackCycles << " ctrl_read=" << t.controllerReadCycles
     << " corr_write=" << t.correctionWriteCycles << " zero_cmp=" << t.zeroCompareCycles << '\n';
  os << ".engine fanin=" << c.engine.fanInMax << " require_init=" << int(c.engine.requireOutputInit)
     << '\n';
  os << ".pc_pairs " << c.pcPairs << '\n';
  os << ".forwarding " << int(c.forwarding) << '\n';
  os << ".row " << rp.row << '\n';
  os << ".inputs";
  for (std::size_t k = 0; k < rp.inputNames.size(); ++k)
    os << ' ' << rp.inputNames[k] << ':' << rp.inputColumns[k];
  os << "\n.outputs";
  for (std::size_t k = 0; k < rp.outputNames.size(); ++k)
    os << ' ' << rp.outputNames[k] << ':' << rp.outputColumns[k];
  os << '\n';
  for (const auto& ins : s.instructions) {
    os << ".instr ";
    switch (ins.kind) {
      case Instruction::Kind::Check:
        os << "CHECK " << to_string(ins.orientation) << " index=" << ins.index
           << " blocks=" << format_index_list(ins.blocks);
        break;
      case Instruction::Kind::Plain:
        os << "PLAIN " << to_string(ins.ops.at(0));
        break;
      case Instruction::Kind::Critical:
        os << "CRIT";
        for (std::size_t k = 0; k < ins.ops.size(); ++k)
          os << (k ? " ; " : " ") << to_string(ins.ops[k]);
        break;
    }
    os << '\n';
  }
  os << ".events\n";
  write_events(os, s.events);
}

namespace detail {

inline std::map<std::string, std::string> key_values(std::istringstream& is, std::size_t line) {
  std::map<std::string, std::string> kv;
  for (std::string tok; is >> tok;) {
    auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      throw InputError("schedule line " + std::to_string(line) + ": expected key=value, got '" +
                       tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

inline std::uint64_t to_uint(const std::string& v, std::size_t line) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw InputError("schedule line " + std::to_string(line) + ": bad number '" + v + "'");
  return std::stoull(v);
}

inline std::uint64_t take(std::map<std::string, std::string>& kv, const std::string& key,
                          std::size_t line) {
  auto it = kv.find(key);
  if (it == kv.end())
    throw InputError("schedule line " + std::to_string(line) + ": missing " + key);
  auto v = to_uint(it->second, line);
  kv.erase(it);
  return v;
}

inline void no_extra(const std::map<std::string, std::string>& kv, std::size_t line) {
  if (!kv.empty())
    throw InputError("schedule line " + std::to_string(line) + ": unknown key '" +
                     kv.begin()->first + "'");
}

inline void named_columns(std::istringstream& is, std::size_t line, std::vector<std::string>& names,
                          std::vector<std::size_t>& cols) {
  for (std::string tok; is >> tok;) {
    auto colon = tok.rfind(':');
    if (colon == std::string::npos || colon == 0)
      throw InputError("schedule line " + std::to_string(line) + ": expected name:column");
    names.push_back(tok.substr(0, colon));
    cols.push_back(to_uint(tok.substr(colon + 1), line));
  }
}

}  // namespace detail

inline EccSchedule read_schedule(std::istream& in) {
  MachineConfig cfg;
  RowProgram rp;
  std::vector<Instruction> program;
  std::vector<Event> events;
  bool inEvents = false, haveGeometry = false;
  std::string text;
  std::size_t line = 0;
  auto fail = [&](const std::string& what) {
    throw InputError("schedule line " + std::to_string(line) + ": " + what);
  };

  while (std::getline(in, text)) {
    ++line;
    if (text.empty() || text[0] == '#') continue;
    if (inEvents) {
      try {
        events.push_back(parse_event(text));
      } catch (const InputError& e) {
        fail(e.what());
      }
      continue;
    }
    std::istringstream is(text);
    std::string dir;
    is >> dir;
    if (dir == ".geometry") {
      auto kv = detail::key_values(is, line);
      cfg.geom.n = detail::take(kv, "n", line);
      cfg.geom.m = detail::take(kv, "m", line);
      detail::no_extra(kv, line);
      haveGeometry = true;
    } else if (dir == ".timing") {
      auto kv = detail::key_values(is, line);
      auto& t = cfg.timing;
      t.xor3Cycles = detail::take(kv, "xor3", line);
      t.copyCycles = detail::take(kv, "copy", line);
      t.writebackCycles = detail::take(kv, "writeback", line);
      t.controllerReadCycles = detail::take(kv, "ctrl_read", line);
      t.correctionWriteCycles = detail::take(kv, "corr_write", line);
      t.zeroCompareCycles = detail::take(kv, "zero_cmp", line);
      detail::no_extra(kv, line);
    } else if (dir == ".engine") {
      auto kv = detail::key_values(is, line);
      cfg.engine.fanInMax = detail::take(kv, "fanin", line);
      cfg.engine.requireOutputInit = detail::take(kv, "require_init", line) != 0;
      detail::no_extra(kv, line);
    } else if (dir == ".pc_pairs" || dir == ".forwarding" || dir == ".row") {
      std::string v, extra;
      if (!(is >> v) || (is >> extra)) fail(dir + " takes one value");
      const auto x = detail::to_uint(v, line);
      if (dir == ".pc_pairs") cfg.pcPairs = x;
      else if (dir == ".forwarding") cfg.forwarding = x != 0;
      else rp.row = x;
    } else if (dir == ".inputs") {
      detail::named_columns(is, line, rp.inputNames, rp.inputColumns);
    } else if (dir == ".outputs") {
      detail::named_columns(is, line, rp.outputNames, rp.outputColumns);
    } else if (dir == ".instr") {
      std::string kind;
      is >> kind;
      std::string rest;
      std::getline(is >> std::ws, rest);
      Instruction ins;
      try {
        if (kind == "CHECK") {
          std::istringstream rs(rest);
          std::string orient;
          rs >> orient;
          if (orient == "row") ins.orientation = Orientation::InRow;
          else if (orient == "col") ins.orientation = Orientation::InColumn;
          else fail("bad orientation '" + orient + "'");
          auto kv = detail::key_values(rs, line);
          ins.kind = Instruction::Kind::Check;
          ins.index = detail::take(kv, "index", line);
          auto b = kv.find("blocks");
          if (b == kv.end()) fail("missing blocks");
          ins.blocks = parse_index_list(b->second);
          kv.erase(b);
          detail::no_extra(kv, line);
        } else if (kind == "PLAIN") {
          ins.kind = Instruction::Kind::Plain;
          ins.ops.push_back(parse_micro_op(rest));
        } else if (kind == "CRIT") {
          ins.kind = Instruction::Kind::Critical;
          std::size_t start = 0;
          while (start <= rest.size()) {
            auto semi = rest.find(';', start);
            ins.ops.push_back(parse_micro_op(rest.substr(start, semi - start)));
            if (semi == std::string::npos) break;
            start = semi + 1;
          }
        } else {
          fail("unknown instruction '" + kind + "'");
        }
      } catch (const InputError& e) {
        std::string msg = e.what();
        if (msg.rfind("schedule line", 0) == 0) throw;
        fail(msg);
      }
      for (const auto& op : ins.ops) rp.ops.push_back(op);
      program.push_back(std::move(ins));
    } else if (dir == ".events") {
      inEvents = true;
    } else {
      fail("unknown directive '" + dir + "'");
    }
  }
  if (!haveGeometry) throw InputError("schedule: missing .geometry");
  if (!inEvents) throw InputError("schedule: missing .events section");
  cfg.validate();
  rp.width = cfg.geom.n;
  if (rp.row >= cfg.geom.n) throw InputError("schedule: row out of range");
  for (std::size_t k = 0; k < rp.inputNames.size(); ++k) rp.cellMap[rp.inputNames[k]] = rp.inputColumns[k];
  for (std::size_t k = 0; k < rp.outputNames.size(); ++k) rp.cellMap[rp.outputNames[k]] = rp.outputColumns[k];
  for (auto c : rp.inputColumns)
    if (c >= cfg.geom.n) throw InputError("schedule: input column out of range");
  for (auto c : rp.outputColumns)
    if (c >= cfg.geom.n) throw InputError("schedule: output column out of range");

  EccSchedule s;
  try {
    s = schedule_instructions(std::move(rp), std::move(program), cfg);
  } catch (const InvariantError& e) {
    throw InputError(std::string("schedule: instructions cannot be issued: ") + e.what());
  }
  if (s.events != events) {
    std::size_t k = 0;
    while (k < events.size() && k < s.events.size() && events[k] == s.events[k]) ++k;
    throw InputError("schedule: event log differs from the instructions at record " +
                     std::to_string(k + 1));
  }
  return s;
}

}  // namespace diagecc
