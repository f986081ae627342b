#pragma once

// Closed-form MTTF of a memory with and without per-block single-error
// correction, evaluated in log space so that tiny error probabilities do not
// underflow.
//
// Model: every bit flips independently with probability p = 1 - exp(-λT/1e9)
// during one check period T. Without ECC the memory fails if any bit flips.
// With ECC a block of m*m data bits fails if two or more of its bits flip.
// MTTF = T / P(memory fails within T).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "diagecc/core.hpp"

namespace diagecc {

struct ReliabilityParams {
  double lambdaFit = 1e-3;  // soft errors per 1e9 device-hours
  double tHours = 24.0;
  Geometry geom{1020, 15};
  double capacityBits = 8e9;  // 1 GB = 1e9 bytes

  void validate() const {
    if (!(lambdaFit >= 0.0) || !(tHours > 0.0) || !(capacityBits > 0.0))
      throw InputError("reliability: lambda must be >= 0, T and capacity > 0");
    geom.validate();
  }
};

inline double p_bit(double lambdaFit, double tHours) {
  return -std::expm1(-lambdaFit * tHours / 1e9);
}

/// ln(1 - P(system fails)) for `units` independent units with per-unit log
/// survival `logSurvive`; returns T / P(fail).
inline double mttf_from_log_survival(double logSurviveAll, double tHours) {
  const double pFail = -std::expm1(logSurviveAll);
  return tHours / pFail;
}

inline double mttf_baseline(const ReliabilityParams& p) {
  p.validate();
  const double pb = p_bit(p.lambdaFit, p.tHours);
  return mttf_from_log_survival(p.capacityBits * std::log1p(-pb), p.tHours);
}

/// Probability that a block of `cells` bits sees at least two flips.
inline double block_failure_probability(double pBit, std::size_t cells) {
  if (pBit <= 0.0) return 0.0;
  if (pBit >= 1.0) return cells >= 2 ? 1.0 : 0.0;
  const double M = static_cast<double>(cells);
  const double lq = std::log1p(-pBit);
  // Sum the upper tail directly; accurate when the tail is small.
  double tail = 0.0;
  const double lp = std::log(pBit);
  for (std::size_t k = 2; k <= cells; ++k) {
    const double kk = static_cast<double>(k);
    const double lc = std::lgamma(M + 1) - std::lgamma(kk + 1) - std::lgamma(M - kk + 1);
    tail += std::exp(lc + kk * lp + (M - kk) * lq);
  }
  if (tail < 0.5) return tail;
  // Otherwise 1 - P(0) - P(1) with P(0)+P(1) = (1-p)^(M-1) (1 + (M-1)p).
  return -std::expm1((M - 1) * lq + std::log1p((M - 1) * pBit));
}

/// ln P(block survives) = ln(P(0 flips) + P(1 flip)).
inline double block_log_survival(double pBit, std::size_t cells) {
  const double M = static_cast<double>(cells);
  if (pBit >= 1.0) return cells >= 2 ? -INFINITY : 0.0;
  const double q = block_failure_probability(pBit, cells);
  if (q < 0.5) return std::log1p(-q);
  return (M - 1) * std::log1p(-pBit) + std::log1p((M - 1) * pBit);
}

inline double mttf_proposed(const ReliabilityParams& p) {
  p.validate();
  const double pb = p_bit(p.lambdaFit, p.tHours);
  const std::size_t cells = p.geom.m * p.geom.m;
  const double blocks = p.capacityBits / static_cast<double>(cells);
  return mttf_from_log_survival(blocks * block_log_survival(pb, cells), p.tHours);
}

struct SweepRow {
  double lambdaFit = 0.0;
  double mttfBaseline = 0.0;
  double mttfProposed = 0.0;
  double improvement() const { return mttfProposed / mttfBaseline; }
};

/// Log-spaced grid from lambdaMin to lambdaMax, both ends included, with
/// round(decades * pointsPerDecade) intervals. 1.75 points per decade over
/// 1e-5..1e3 gives 15 points.
inline std::vector<SweepRow> sweep(double lambdaMin, double lambdaMax,
                                   double pointsPerDecade, ReliabilityParams params) {
  if (!(lambdaMin > 0.0) || !(lambdaMax > lambdaMin))
    throw InputError("sweep: need 0 < lambdaMin < lambdaMax");
  if (!(pointsPerDecade > 0.0)) throw InputError("sweep: pointsPerDecade must be positive");
  const double lo = std::log10(lambdaMin), hi = std::log10(lambdaMax);
  auto intervals = static_cast<std::size_t>(std::llround((hi - lo) * pointsPerDecade));
  if (intervals == 0) intervals = 1;
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i <= intervals; ++i) {
    params.lambdaFit = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) /
                                              static_cast<double>(intervals));
    rows.push_back({params.lambdaFit, mttf_baseline(params), mttf_proposed(params)});
  }
  return rows;
}

}  // namespace diagecc
