#pragma once

// Monte Carlo photodetection: a photocount N ~ Poisson(gain * intensity) is
// drawn per trial and the detector clicks when N >= 1.
//
// Trials are split into fixed-size batches.  Each (master seed, channel,
// batch) triple owns an independent mt19937_64 stream, so the estimate does
// not depend on how many workers process the batches.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bellclick/errors.hpp"
#include "bellclick/field_model.hpp"
#include "bellclick/parallel.hpp"

namespace bellclick {

struct McConfig {
  std::uint64_t trials = 1'000'000;
  std::uint64_t master_seed = 0x5eed'c1c5'0000'0001ULL;
  std::uint64_t batch = 10'000;

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (batch > trials) throw ConfigError("batch must not exceed trials");
  }

  std::uint64_t batch_count() const noexcept {
    return (trials + batch - 1) / batch;
  }
};

struct McEstimate {
  double p_hat = 0.0;
  double std_error = 0.0;  // binomial sqrt(p(1-p)/n)
  std::uint64_t trials = 0;
  std::uint64_t clicks = 0;

  friend bool operator==(const McEstimate&, const McEstimate&) = default;
};

inline McEstimate make_estimate(std::uint64_t clicks, std::uint64_t trials) {
  McEstimate e;
  e.trials = trials;
  e.clicks = clicks;
  e.p_hat = static_cast<double>(clicks) / static_cast<double>(trials);
  e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(trials));
  return e;
}

enum class ClickSampler {
  poisson_threshold,  // N ~ Poisson(mu), click iff N >= 1
  bernoulli,          // click with probability 1 - exp(-mu)
};

namespace detail {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Seed of the sub-stream for one batch of one channel.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed,
                                    std::uint64_t channel_id,
                                    std::uint64_t batch_index) noexcept {
  std::uint64_t h = detail::mix64(master_seed);
  h = detail::mix64(h ^ (channel_id * 0xd1b54a32d192ed03ULL));
  h = detail::mix64(h ^ (batch_index * 0x8cb92ba72f3d8dd7ULL));
  return h;
}

/// Uniform double in [0, 1) from the top 53 bits of the engine output.
inline double uniform01(std::mt19937_64& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Poisson variate.  Sequential-search inversion for mean <= 10, Hormann's
/// transformed rejection (PTRS) above.  Only engine output is consumed, so
/// the sequence is fixed by the seed on every platform.
inline std::uint64_t sample_poisson(double mean, std::mt19937_64& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw DomainError("Poisson mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;

  if (mean <= 10.0) {
    const double u = uniform01(rng);
    double term = std::exp(-mean);
    double cdf = term;
    std::uint64_t k = 0;
    // The cap only triggers when cdf rounds below u in the far tail.
    while (u > cdf && k < 1000) {
      ++k;
      term *= mean / static_cast<double>(k);
      cdf += term;
    }
    return k;
  }

  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    const double u = uniform01(rng) - 0.5;
    const double v = uniform01(rng);
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    const double lhs = std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b);
    const double rhs = -mean + k * log_mean - std::lgamma(k + 1.0);
    if (lhs <= rhs) return static_cast<std::uint64_t>(k);
  }
}

namespace detail {

inline std::uint64_t count_batch(double mean, ClickSampler sampler,
                                 std::uint64_t n, std::uint64_t seed) {
  if (mean == 0.0) return 0;
  std::mt19937_64 rng(seed);
  std::uint64_t clicks = 0;
  if (sampler == ClickSampler::poisson_threshold) {
    for (std::uint64_t i = 0; i < n; ++i) {
      clicks += sample_poisson(mean, rng) >= 1 ? 1 : 0;
    }
  } else {
    const double p = click_probability_from_mean(mean);
    for (std::uint64_t i = 0; i < n; ++i) {
      clicks += uniform01(rng) < p ? 1 : 0;
    }
  }
  return clicks;
}

}  // namespace detail

/// Estimates the click probability for a mean photocount gain*intensity.
/// `channel_id` selects an independent family of sub-streams.
inline McEstimate simulate_click_probability(
    double intensity, Detector detector, const McConfig& cfg,
    std::uint64_t channel_id = 0,
    ClickSampler sampler = ClickSampler::poisson_threshold,
    unsigned workers = 1) {
  if (!(intensity >= 0.0)) throw DomainError("intensity must be >= 0");
  cfg.validate();
  const double mean = detector.gain() * intensity;
  const std::uint64_t batches = cfg.batch_count();
  std::vector<std::uint64_t> clicks(batches, 0);
  detail::parallel_for(batches, workers, [&](std::uint64_t b) {
    const std::uint64_t first = b * cfg.batch;
    const std::uint64_t n = std::min(cfg.batch, cfg.trials - first);
    clicks[b] = detail::count_batch(
        mean, sampler, n, stream_seed(cfg.master_seed, channel_id, b));
  });
  std::uint64_t total = 0;
  for (std::uint64_t c : clicks) total += c;
  return make_estimate(total, cfg.trials);
}

struct McProbabilitySet {
  std::array<McEstimate, kChannelCount> estimates{};

  const McEstimate& operator[](Channel c) const noexcept {
    return estimates[static_cast<std::size_t>(c)];
  }

  /// Monte Carlo estimate of C.
  double ch_value() const noexcept {
    const auto& e = estimates;
    return e[0].p_hat - e[1].p_hat + e[2].p_hat + e[3].p_hat - e[4].p_hat -
           e[5].p_hat;
  }

  /// Standard error of ch_value() for independent channels.
  double ch_std_error() const noexcept {
    double var = 0.0;
    for (const auto& e : estimates) var += e.std_error * e.std_error;
    return std::sqrt(var);
  }

  friend bool operator==(const McProbabilitySet&,
                         const McProbabilitySet&) = default;
};

inline McProbabilitySet simulate_probability_set(
    const FieldState& state, const MeasurementSettings& settings,
    Detector detector, const McConfig& cfg,
    ClickSampler sampler = ClickSampler::poisson_threshold,
    unsigned workers = 1) {
  validate(state);
  cfg.validate();
  const auto intensities = channel_intensities(state, settings);
  McProbabilitySet out;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    out.estimates[c] = simulate_click_probability(intensities[c], detector,
                                                  cfg, c, sampler, workers);
  }
  return out;
}

}  // namespace bellclick
