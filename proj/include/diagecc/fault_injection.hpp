#pragma once

// Monte-Carlo soft-error campaigns.
//
// Random streams are split into fixed-size chunks, each seeded from
// (master seed, chunk index), so results do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <thread>
#include <variant>
#include <vector>

#include "diagecc/codec.hpp"
#include "diagecc/core.hpp"
#include "diagecc/machine.hpp"
#include "diagecc/netlist.hpp"
#include "diagecc/reliability.hpp"
#include "diagecc/scheduler.hpp"

namespace diagecc {

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

struct ProportionEstimate {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double estimate = 0.0;
  double lo = 0.0;  // 95% Wilson interval
  double hi = 0.0;

  bool contains(double x) const { return lo <= x && x <= hi; }
};

inline ProportionEstimate wilson_interval(std::uint64_t successes, std::uint64_t trials) {
  constexpr double z = 1.959963984540054;
  ProportionEstimate e{successes, trials};
  if (trials == 0) return e;
  const double nt = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / nt;
  const double denom = 1.0 + z * z / nt;
  const double centre = (ph + z * z / (2 * nt)) / denom;
  const double half = z * std::sqrt(ph * (1 - ph) / nt + z * z / (4 * nt * nt)) / denom;
  e.estimate = ph;
  e.lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  e.hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return e;
}

inline constexpr std::uint64_t kTrialsPerChunk = 4096;

/// Runs body(rng, firstTrial, count) per chunk on a small thread pool and
/// sums the returned counts.
template <class Body>
std::uint64_t chunked_trials(std::uint64_t trials, std::uint64_t seed, Body body) {
  const std::uint64_t chunks = (trials + kTrialsPerChunk - 1) / kTrialsPerChunk;
  std::vector<std::uint64_t> partial(chunks, 0);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::uint64_t>(chunks, std::thread::hardware_concurrency()));
  auto run = [&](std::size_t w) {
    for (std::uint64_t c = w; c < chunks; c += workers) {
      auto rng = stream_rng(seed, c);
      const auto first = c * kTrialsPerChunk;
      partial[c] = body(rng, first, std::min(kTrialsPerChunk, trials - first));
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  std::uint64_t total = 0;
  for (auto v : partial) total += v;
  return total;
}

/// Fraction of m x m blocks with two or more independent flips.
inline ProportionEstimate monte_carlo_block_failure(double pBit, std::size_t m,
                                                    std::uint64_t trials, std::uint64_t seed) {
  if (trials < 10000) throw InputError("monte_carlo_block_failure: need at least 1e4 trials");
  if (!(pBit >= 0.0 && pBit <= 1.0)) throw InputError("monte_carlo_block_failure: pBit outside [0,1]");
  const std::size_t cells = m * m;
  const auto failures = chunked_trials(trials, seed, [&](std::mt19937_64& g, std::uint64_t, std::uint64_t count) {
    std::uint64_t f = 0;
    for (std::uint64_t t = 0; t < count; ++t) {
      std::size_t flips = 0;
      for (std::size_t k = 0; k < cells; ++k) flips += uniform01(g) < pBit;
      f += flips >= 2;
    }
    return f;
  });
  return wilson_interval(failures, trials);
}

// ---------------------------------------------------------------------------

enum class CampaignScope { BlockLevel, MachineLevel };

struct FaultCampaign {
  std::uint64_t seed = 1;
  std::uint64_t trials = 1;  // blocks (BlockLevel), epochs or function runs (MachineLevel)
  double pBit = 0.0;
  CampaignScope scope = CampaignScope::MachineLevel;
  bool flipCheckBits = false;

  void validate() const {
    if (trials < 1) throw InputError("campaign: trials must be >= 1");
    if (!(pBit >= 0.0 && pBit <= 1.0)) throw InputError("campaign: pBit outside [0,1]");
  }
};

/// Every epoch: inject, then check the whole memory.
struct PeriodicCheck {};

/// Every run: load random inputs, inject, execute the scheduled function.
/// `forcedFlips` are applied in addition to the random ones.
struct FunctionRun {
  const EccSchedule* schedule = nullptr;
  const Netlist* netlist = nullptr;
  std::vector<CellAddr> forcedFlips;
};

using Workload = std::variant<PeriodicCheck, FunctionRun>;

struct CampaignReport {
  std::uint64_t flips = 0;
  std::uint64_t corrected = 0;      // block restored exactly
  std::uint64_t uncorrectable = 0;  // block flagged uncorrectable
  std::uint64_t miscorrected = 0;   // block checked but left wrong
  std::uint64_t silent = 0;         // block never checked
  std::uint64_t blocksHit = 0;
  std::uint64_t failedBlocks = 0;   // checked blocks not restored
  std::uint64_t blocksObserved = 0;
  std::uint64_t wrongOutputs = 0;   // FunctionRun only

  friend bool operator==(const CampaignReport&, const CampaignReport&) = default;
};

namespace detail {

// Classify all flips of one checked block.
inline void classify_block(CampaignReport& rep, std::uint64_t flips, bool restored,
                           bool flaggedUncorrectable) {
  if (!flips) return;
  ++rep.blocksHit;
  if (restored) {
    rep.corrected += flips;
    return;
  }
  ++rep.failedBlocks;
  if (flaggedUncorrectable) rep.uncorrectable += flips;
  else rep.miscorrected += flips;
}

inline CampaignReport block_level(const FaultCampaign& c, std::size_t m) {
  // Counts are packed per chunk then merged; keep it simple with a mutex-free
  // layout: one report per chunk.
  const std::uint64_t chunks = (c.trials + kTrialsPerChunk - 1) / kTrialsPerChunk;
  std::vector<CampaignReport> part(chunks);
  chunked_trials(c.trials, c.seed, [&](std::mt19937_64& g, std::uint64_t first, std::uint64_t count) {
    auto& rep = part[first / kTrialsPerChunk];
    for (std::uint64_t t = 0; t < count; ++t) {
      BitSquare block(m);
      for (auto& b : block.raw()) b = g() & 1u;
      const auto golden = block;
      const auto goldenParity = encode_block(block);
      auto stored = goldenParity;
      std::uint64_t flips = 0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          if (uniform01(g) < c.pBit) block.flip(i, j), ++flips;
      if (c.flipCheckBits)
        for (auto bank : kBanks)
          for (auto& b : stored.bank(bank))
            if (uniform01(g) < c.pBit) b ^= 1u, ++flips;
      rep.flips += flips;
      ++rep.blocksObserved;
      const auto diag = decode_syndrome(compute_syndrome(block, stored));
      if (is_correctable(diag)) apply_correction_in_place(block, stored, diag);
      classify_block(rep, flips, block == golden && stored == goldenParity,
                     std::holds_alternative<Uncorrectable>(diag));
    }
    return std::uint64_t{0};
  });
  CampaignReport total;
  for (const auto& p : part) {
    total.flips += p.flips;
    total.corrected += p.corrected;
    total.uncorrectable += p.uncorrectable;
    total.miscorrected += p.miscorrected;
    total.silent += p.silent;
    total.blocksHit += p.blocksHit;
    total.failedBlocks += p.failedBlocks;
    total.blocksObserved += p.blocksObserved;
  }
  return total;
}

struct InjectedFlips {
  std::vector<std::uint64_t> perBlock;  // dense block id -> flip count
  std::uint64_t total = 0;
};

inline InjectedFlips inject_random(Machine& machine, const FaultCampaign& c, std::mt19937_64& g) {
  const auto& geom = machine.geometry();
  const std::size_t per = geom.blocks_per_side();
  InjectedFlips f{std::vector<std::uint64_t>(geom.block_count(), 0), 0};
  if (c.pBit <= 0.0) return f;
  for (std::size_t r = 0; r < geom.n; ++r)
    for (std::size_t col = 0; col < geom.n; ++col)
      if (uniform01(g) < c.pBit) {
        machine.inject_flip(CellAddr{r, col});
        ++f.perBlock[(r / geom.m) * per + col / geom.m];
        ++f.total;
      }
  if (c.flipCheckBits)
    for (auto bank : kBanks)
      for (std::size_t d = 0; d < geom.m; ++d)
        for (std::size_t br = 0; br < per; ++br)
          for (std::size_t bc = 0; bc < per; ++bc)
            if (uniform01(g) < c.pBit) {
              machine.inject_flip(CheckCell{bank, d, br, bc});
              ++f.perBlock[br * per + bc];
              ++f.total;
            }
  return f;
}

inline CampaignReport periodic(const MachineConfig& cfg, const FaultCampaign& c) {
  CampaignReport rep;
  auto g = stream_rng(c.seed, 0);
  const auto& geom = cfg.geom;
  const std::size_t per = geom.blocks_per_side();
  CrossbarState data(geom);
  for (auto& b : data.bits().raw()) b = g() & 1u;
  const CheckMem golden = encode_all(data);
  for (std::uint64_t epoch = 0; epoch < c.trials; ++epoch) {
    Machine machine(cfg);
    machine.load(data);
    auto inj = inject_random(machine, c, g);
    rep.flips += inj.total;
    auto check = machine.full_memory_check();
    std::vector<std::uint8_t> flagged(geom.block_count(), 0);
    for (const auto& b : check.findings)
      if (std::holds_alternative<Uncorrectable>(b.diagnosis)) flagged[b.blockRow * per + b.blockCol] = 1;
    for (std::size_t br = 0; br < per; ++br)
      for (std::size_t bc = 0; bc < per; ++bc) {
        const auto id = br * per + bc;
        ++rep.blocksObserved;
        const bool restored = machine.mem().block(br, bc) == data.block(br, bc) &&
                              machine.check_mem().block_parity(br, bc) == golden.block_parity(br, bc);
        classify_block(rep, inj.perBlock[id], restored, flagged[id]);
      }
  }
  return rep;
}

inline CampaignReport function_runs(const MachineConfig& cfg, const FaultCampaign& c,
                                    const FunctionRun& w) {
  if (!w.schedule || !w.netlist) throw InputError("campaign: function workload needs a schedule and netlist");
  const auto& s = *w.schedule;
  const auto& rp = s.program;
  const auto& geom = cfg.geom;
  const std::size_t per = geom.blocks_per_side(), br = rp.row / geom.m;
  const auto checked = input_block_ordinals(rp, geom.m);
  CampaignReport rep;
  auto g = stream_rng(c.seed, 0);
  for (std::uint64_t run = 0; run < c.trials; ++run) {
    BitVec inputs(rp.inputColumns.size());
    for (auto& b : inputs) b = g() & 1u;
    Machine machine(cfg);
    for (std::size_t k = 0; k < inputs.size(); ++k)
      machine.host_write({rp.row, rp.inputColumns[k]}, inputs[k]);
    const CrossbarState before = machine.mem();
    const CheckMem beforeCm = machine.check_mem();
    auto inj = inject_random(machine, c, g);
    for (auto a : w.forcedFlips) {
      machine.inject_flip(a);
      ++inj.perBlock[(a.row / geom.m) * per + a.col / geom.m];
      ++inj.total;
    }
    rep.flips += inj.total;
    auto trace = run_instructions(machine, s.instructions);
    BitVec outputs;
    for (auto col : rp.outputColumns) outputs.push_back(machine.mem().at(rp.row, col));
    if (outputs != evaluate(*w.netlist, inputs)) ++rep.wrongOutputs;

    for (std::size_t id = 0; id < inj.perBlock.size(); ++id) {
      if (!inj.perBlock[id]) continue;
      const std::size_t bRow = id / per, bCol = id % per;
      const bool isChecked =
          bRow == br && std::find(checked.begin(), checked.end(), bCol) != checked.end();
      if (!isChecked) {
        rep.silent += inj.perBlock[id];
        ++rep.blocksHit;
        continue;
      }
      ++rep.blocksObserved;
      bool flagged = false;
      for (const auto& f : trace.checkFindings)
        if (f.blockRow == bRow && f.blockCol == bCol)
          flagged = std::holds_alternative<Uncorrectable>(f.diagnosis);
      // Input blocks are only read by the function, so compare with the
      // pre-injection state.
      const bool restored = machine.mem().block(bRow, bCol) == before.block(bRow, bCol) &&
                            machine.check_mem().block_parity(bRow, bCol) ==
                                beforeCm.block_parity(bRow, bCol);
      classify_block(rep, inj.perBlock[id], restored, flagged);
    }
  }
  return rep;
}

}  // namespace detail

/// Injects independent flips and classifies every one by the fate of its block.
inline CampaignReport injection_campaign(const MachineConfig& cfg, const FaultCampaign& c,
                                         const Workload& workload = PeriodicCheck{}) {
  c.validate();
  cfg.validate();
  if (c.scope == CampaignScope::BlockLevel) return detail::block_level(c, cfg.geom.m);
  if (auto* f = std::get_if<FunctionRun>(&workload)) return detail::function_runs(cfg, c, *f);
  return detail::periodic(cfg, c);
}

}  // namespace diagecc
