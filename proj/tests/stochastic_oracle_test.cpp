#include "bellclick/stochastic_oracle.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <set>

#include "bellclick/inequalities.hpp"
#include "bellclick/presets.hpp"
#include "support/frozen_values.hpp"

using namespace bellclick;
using Catch::Approx;

TEST_CASE("McConfig validation", "[mc]") {
  CHECK_THROWS_AS((McConfig{0, 1, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((McConfig{10, 1, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((McConfig{10, 1, 11}.validate()), ConfigError);
  CHECK_NOTHROW((McConfig{10, 1, 10}.validate()));
  CHECK(McConfig{10, 1, 3}.batch_count() == 4);
}

TEST_CASE("stream seeds are distinct across channels and batches", "[mc]") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t c = 0; c < 6; ++c)
    for (std::uint64_t b = 0; b < 1000; ++b) seen.insert(stream_seed(42, c, b));
  CHECK(seen.size() == 6000);
  CHECK(stream_seed(42, 0, 0) != stream_seed(43, 0, 0));
}

TEST_CASE("Poisson sampler moments", "[mc][poisson]") {
  for (double mean : {0.3, 2.0, 9.5, 10.5, 37.0, 400.0}) {
    std::mt19937_64 rng(stream_seed(99, 0, static_cast<std::uint64_t>(mean)));
    constexpr int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(sample_poisson(mean, rng));
      sum += k;
      sum2 += k * k;
    }
    const double m = sum / n;
    const double var = sum2 / n - m * m;
    INFO("mean " << mean);
    // Sample mean within 5 standard errors; variance within 3%.
    CHECK(std::fabs(m - mean) < 5.0 * std::sqrt(mean / n));
    CHECK(var == Approx(mean).epsilon(0.03));
  }
  std::mt19937_64 rng(1);
  CHECK(sample_poisson(0.0, rng) == 0);
  CHECK_THROWS_AS(sample_poisson(-1.0, rng), DomainError);
}

TEST_CASE("simulate_click_probability examples", "[mc]") {
  const auto zero = simulate_click_probability(0.0, Detector(2.0),
                                               McConfig{1000, 5, 100});
  CHECK(zero.p_hat == 0.0);
  CHECK(zero.std_error == 0.0);

  const auto one = simulate_click_probability(1.0, Detector(1.0),
                                              McConfig{1'000'000, 5, 10'000});
  const double p = 1.0 - std::exp(-1.0);
  CHECK(std::fabs(one.p_hat - p) <= 4.0 * one.std_error);
  CHECK(one.std_error ==
        Approx(std::sqrt(one.p_hat * (1 - one.p_hat) / 1e6)).epsilon(1e-12));

  const auto sat = simulate_click_probability(1e4, Detector(1.0),
                                              McConfig{1000, 5, 100});
  CHECK(sat.p_hat == 1.0);

  CHECK_THROWS_AS(
      simulate_click_probability(-1.0, Detector(1.0), McConfig{10, 1, 1}),
      DomainError);
}

TEST_CASE("estimates do not depend on worker count", "[mc][determinism]") {
  const McConfig cfg{200'000, 77, 7'000};
  const auto serial = simulate_click_probability(0.8, Detector(1.0), cfg, 3,
                                                 ClickSampler::poisson_threshold, 1);
  for (unsigned workers : {2u, 3u, 8u, 64u}) {
    CHECK(simulate_click_probability(0.8, Detector(1.0), cfg, 3,
                                     ClickSampler::poisson_threshold,
                                     workers) == serial);
  }
  CHECK(simulate_click_probability(0.8, Detector(1.0), cfg, 3) == serial);
  CHECK_FALSE(simulate_click_probability(0.8, Detector(1.0), cfg, 4) == serial);
}

TEST_CASE("simulate_probability_set tracks the analytic set", "[mc]") {
  const McConfig cfg{1'000'000, 2024, 10'000};

  const auto dark = simulate_probability_set(EntangledState{1, 1},
                                             presets::fig2_settings(),
                                             Detector(0.0), McConfig{1000, 1, 100});
  for (const auto& e : dark.estimates) CHECK(e.p_hat == 0.0);

  const FieldState ent = EntangledState{1.0, 1.0};
  const auto analytic = probability_set(ent, presets::fig2_settings(), Detector(1.0));
  const auto mc = simulate_probability_set(ent, presets::fig2_settings(),
                                           Detector(1.0), cfg);
  for (Channel c : kAllChannels) {
    INFO(channel_name(c));
    if (analytic[c] < 1e-12) {
      CHECK(mc[c].p_hat == 0.0);
    } else {
      CHECK(std::fabs(mc[c].p_hat - analytic[c]) <= 4.0 * mc[c].std_error);
    }
  }
  CHECK(analytic.p_yu() == Approx(0.5276334472589853).epsilon(1e-14));

  const FieldState sep = presets::fig3_separable();
  const auto mc_sep = simulate_probability_set(
      sep, presets::fig2_settings(), Detector::for_kappa(sep, 5.0), cfg);
  CHECK(std::fabs(mc_sep.ch_value() - testing::kChSeparableFig3Kappa5) <=
        4.0 * mc_sep.ch_std_error());
}

TEST_CASE("binomial coverage over independent seeds", "[mc][calibration]") {
  const double p = 1.0 - std::exp(-1.0);
  int covered = 0;
  constexpr int runs = 200;
  for (int seed = 0; seed < runs; ++seed) {
    const auto e = simulate_click_probability(
        1.0, Detector(1.0), McConfig{10'000, 1000 + static_cast<std::uint64_t>(seed), 1'000});
    covered += std::fabs(e.p_hat - p) <= 2.0 * e.std_error ? 1 : 0;
  }
  CHECK(covered >= static_cast<int>(std::ceil(0.93 * runs)));
}

TEST_CASE("Poisson threshold and Bernoulli samplers agree", "[mc][poisson]") {
  const McConfig cfg{1'000'000, 31337, 10'000};
  for (double mean : {0.05, 1.0, 3.0, 12.0}) {
    const auto poisson = simulate_click_probability(
        mean, Detector(1.0), cfg, 0, ClickSampler::poisson_threshold);
    // Different channel id: independent streams for the two samples.
    const auto bernoulli = simulate_click_probability(
        mean, Detector(1.0), cfg, 1, ClickSampler::bernoulli);
    const double n = static_cast<double>(cfg.trials);
    const double pooled = (poisson.p_hat + bernoulli.p_hat) / 2.0;
    const double se = std::sqrt(pooled * (1 - pooled) * 2.0 / n);
    const double z = se > 0 ? (poisson.p_hat - bernoulli.p_hat) / se : 0.0;
    INFO("mean " << mean << " z " << z);
    CHECK(std::fabs(z) < 4.0);
    CHECK(std::fabs(poisson.p_hat - (1 - std::exp(-mean))) <=
          4.0 * poisson.std_error + 1e-12);
  }
}
