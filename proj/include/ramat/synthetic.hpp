#ifndef RAMAT_SYNTHETIC_HPP
#define RAMAT_SYNTHETIC_HPP

#include <cstdint>
#include <string>

#include "ramat/pipeline.hpp"

namespace ramat {

enum class SyntheticKind { kSinusoid, kAr2, kBursty };

SyntheticKind synthetic_kind_from_string(const std::string& s);

struct SyntheticOptions {
  SyntheticKind kind = SyntheticKind::kSinusoid;
  std::size_t rows = 1000;
  std::size_t channels = 3;  ///< ignored by kBursty, which always emits the 13 O-RAN KPIs
  std::uint64_t seed = 0;
  std::int64_t t_step_ms = 20;
  double missing_rate = 0.03;  ///< kBursty: per-row probability of one blank non-delay cell, and separately of a blank delay
  double outlier_rate = 0.01;  ///< kBursty: probability a row carries a spike
};

// Seeded generators behind the benchmarks. Rows sit on a regular t_step grid.
//   sinusoid: each channel is a sum of three sinusoids (periods 8..256 steps,
//             random amplitudes and phases) plus N(0, 0.05²) noise.
//   ar2:      each channel is x_t = 1.2·x_{t-1} − 0.6·x_{t-2} + N(0, 1), with a
//             200-step burn-in discarded.
//   bursty:   O-RAN-shaped KPIs around plausible means with AR(1) wander,
//             ±0..5 ms timestamp jitter, blank cells, delay-only gaps, and
//             occasional large spikes.
KpiFrame generate_synthetic(const SyntheticOptions& options);

}  // namespace ramat

#endif  // RAMAT_SYNTHETIC_HPP
