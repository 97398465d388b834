#include "ramat/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ramat/error.hpp"
#include "ramat/rng.hpp"

namespace ramat {

SyntheticKind synthetic_kind_from_string(const std::string& s) {
  if (s == "sinusoid") return SyntheticKind::kSinusoid;
  if (s == "ar2") return SyntheticKind::kAr2;
  if (s == "bursty") return SyntheticKind::kBursty;
  throw config_error("unknown synthetic kind '" + s + "' (expected sinusoid, ar2 or bursty)");
}

namespace {

std::vector<std::string> channel_names(std::size_t k) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < k; ++c) names.push_back("ch" + std::to_string(c));
  return names;
}

KpiFrame sinusoid(const SyntheticOptions& o, Rng& rng) {
  KpiFrame f;
  f.names = channel_names(o.channels);
  struct Wave {
    double period, amplitude, phase;
  };
  std::vector<std::array<Wave, 3>> waves(o.channels);
  for (auto& ch : waves)
    for (auto& w : ch)
      w = {std::exp(rng.uniform(std::log(8.0), std::log(256.0))), rng.uniform(0.5, 2.0),
           rng.uniform(0.0, 2.0 * std::numbers::pi)};
  std::vector<std::optional<float>> row(o.channels);
  for (std::size_t t = 0; t < o.rows; ++t) {
    for (std::size_t c = 0; c < o.channels; ++c) {
      double v = 0.05 * rng.normal();
      for (const auto& w : waves[c])
        v += w.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / w.period + w.phase);
      row[c] = static_cast<float>(v);
    }
    f.append_row(static_cast<std::int64_t>(t) * o.t_step_ms, row);
  }
  return f;
}

KpiFrame ar2(const SyntheticOptions& o, Rng& rng) {
  KpiFrame f;
  f.names = channel_names(o.channels);
  constexpr double kPhi1 = 1.2, kPhi2 = -0.6;
  constexpr std::size_t kBurnIn = 200;
  std::vector<double> prev1(o.channels, 0.0), prev2(o.channels, 0.0);
  std::vector<std::optional<float>> row(o.channels);
  for (std::size_t t = 0; t < o.rows + kBurnIn; ++t) {
    for (std::size_t c = 0; c < o.channels; ++c) {
      const double x = kPhi1 * prev1[c] + kPhi2 * prev2[c] + rng.normal();
      prev2[c] = prev1[c];
      prev1[c] = x;
      row[c] = static_cast<float>(x);
    }
    if (t >= kBurnIn) f.append_row(static_cast<std::int64_t>(t - kBurnIn) * o.t_step_ms, row);
  }
  return f;
}

KpiFrame bursty(const SyntheticOptions& o, Rng& rng) {
  const auto schema = KpiSchema::oran_default();
  KpiFrame f;
  f.names = schema.names();
  const std::size_t k = schema.size();
  // Centre and wander scale per channel, loosely following the observed statistics.
  const std::array<std::pair<double, double>, 13> stats = {{{0.58, 0.38},
                                                            {-87.58, 3.7},
                                                            {18.31, 1.92},
                                                            {1.36, 0.38},
                                                            {9.04, 4.93},
                                                            {22.31, 4.34},
                                                            {8.51, 0.92},
                                                            {-10.55, 2.47},
                                                            {0.93, 0.84},
                                                            {-65.36, 2.62},
                                                            {25.61, 20.0},
                                                            {2.64, 2.0},
                                                            {62.7, 20.0}}};
  std::vector<double> state(k, 0.0);
  std::vector<std::optional<float>> row(k);
  for (std::size_t t = 0; t < o.rows; ++t) {
    const bool delay_gap = rng.bernoulli(o.missing_rate);
    const bool spike_row = rng.bernoulli(o.outlier_rate);
    const std::size_t spike_channel = rng.below(k);
    const bool blank_row = rng.bernoulli(o.missing_rate);
    const std::size_t blank_channel = rng.below(k - 1);
    for (std::size_t c = 0; c < k; ++c) {
      state[c] = 0.9 * state[c] + std::sqrt(1.0 - 0.81) * rng.normal();
      double v = stats[c].first + stats[c].second * state[c];
      const auto& spec = schema.channels[c];
      if (spec.kind == ChannelKind::kDiscreteIndex) {
        v = std::clamp(std::round(v), spec.range_min, spec.range_max);
      }
      if (spike_row && c == spike_channel) v = stats[c].first + 50.0 * stats[c].second + 100.0;
      const bool blank = (blank_row && c == blank_channel) || (delay_gap && c == k - 1);
      row[c] = blank ? std::nullopt : std::optional<float>(static_cast<float>(v));
    }
    const auto jitter = t == 0 ? 0 : static_cast<std::int64_t>(rng.below(6));
    f.append_row(static_cast<std::int64_t>(t) * o.t_step_ms + jitter, row);
  }
  return f;
}

}  // namespace

KpiFrame generate_synthetic(const SyntheticOptions& options) {
  if (options.rows == 0) throw config_error("synthetic rows must be >= 1");
  if (options.channels == 0) throw config_error("synthetic channels must be >= 1");
  if (options.t_step_ms <= 0) throw config_error("synthetic t_step_ms must be positive");
  Rng rng(options.seed);
  switch (options.kind) {
    case SyntheticKind::kSinusoid:
      return sinusoid(options, rng);
    case SyntheticKind::kAr2:
      return ar2(options, rng);
    case SyntheticKind::kBursty:
      return bursty(options, rng);
  }
  throw config_error("unknown synthetic kind");
}

}  // namespace ramat
