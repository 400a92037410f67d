#include "bellclick/inequalities.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "bellclick/presets.hpp"
#include "support/frozen_values.hpp"
#include "support/reference_model.hpp"

using namespace bellclick;
using namespace bellclick::testing;
using Catch::Approx;
using std::numbers::pi;

namespace {

const FieldState kEntangled = EntangledState{1.0, 1.0};
const FieldState kSeparableFig3 = presets::fig3_separable();
const FieldState kSeparableFig4 = presets::fig4_separable();

double ch_at(const FieldState& state, const MeasurementSettings& m,
             double kappa) {
  return ch_value(probability_set(state, m, Detector::for_kappa(state, kappa)));
}

double ch_lemma(double a, double b, double c, double d) {
  return a * c - a * d + b * c + b * d - b - c;
}

}  // namespace

TEST_CASE("ch_value examples", "[inequalities][ch]") {
  CHECK(ch_value(ClickProbabilitySet{}) == 0.0);
  CHECK(ch_at(kEntangled, presets::fig2_settings(), 1.0) ==
        Approx(kChEntangledFig2Kappa1).epsilon(1e-13));
  // 2(e^-k - e^-k/2) at k = ln 4.
  CHECK(ch_at(kEntangled, presets::fig4_settings(), std::log(4.0)) ==
        Approx(-0.5).epsilon(1e-13));
  CHECK(ch_at(kSeparableFig3, presets::fig2_settings(), 5.0) ==
        Approx(kChSeparableFig3Kappa5).epsilon(1e-12));
}

TEST_CASE("ch_value against the reference model", "[inequalities][ch]") {
  const auto m = presets::fig2_settings().angles();
  const std::array<long double, 4> xyuv{m[0], m[1], m[2], m[3]};
  for (double kappa : {0.01, 0.3, 1.0, 4.0, 20.0}) {
    const auto ref = ref_ch(entangled_matrix(1, 1), kappa, xyuv);
    CHECK(ch_at(kEntangled, presets::fig2_settings(), kappa) ==
          Approx(static_cast<double>(ref)).margin(1e-14));
  }
}

TEST_CASE("ch_report flags", "[inequalities][ch]") {
  const auto dark = ch_report(kEntangled, presets::fig2_settings(), Detector(0));
  CHECK(dark.c_value == 0.0);
  CHECK_FALSE(dark.violated());

  const auto ent = ch_report(kEntangled, presets::fig2_settings(),
                             Detector::for_kappa(kEntangled, 0.1));
  CHECK(ent.c_value == Approx(kChEntangledFig2Kappa0p1).epsilon(1e-12));
  CHECK(ent.violated_upper);
  CHECK_FALSE(ent.violated_lower);
  CHECK(ent.lower_bound == -1.0);
  CHECK(ent.upper_bound == 0.0);

  const auto sep = ch_report(kSeparableFig3, presets::fig2_settings(),
                             Detector::for_kappa(kSeparableFig3, 1.0));
  CHECK(sep.c_value == Approx(kChSeparableFig3Kappa1).epsilon(1e-12));
  CHECK_FALSE(sep.violated());

  // A lower-bound violation needs probabilities no field state produces.
  const auto low = ch_report_from(ClickProbabilitySet::from_probabilities(
      {0.0, 1.0, 0.0, 0.0, 1.0, 1.0}, 0.0));
  CHECK(low.c_value == -3.0);
  CHECK(low.violated_lower);

  CHECK_THROWS_AS(ch_report_from(ClickProbabilitySet{}, -1.0), DomainError);
}

TEST_CASE("tolerance controls the violation flag", "[inequalities][ch]") {
  const auto p = ClickProbabilitySet::from_probabilities(
      {0.5 + 1e-10, 0.0, 0.0, 0.0, 0.5, 0.0}, 1.0);
  CHECK(ch_report_from(p, 1e-12).violated_upper);
  CHECK_FALSE(ch_report_from(p, 1e-9).violated_upper);
}

TEST_CASE("linearized_ch examples", "[inequalities][linear]") {
  const auto fig2 = presets::fig2_settings();
  CHECK(linearized_ch(kEntangled, fig2, 0.0) == 0.0);
  CHECK(linearized_ch(kEntangled, fig2, 1.0) ==
        Approx(kLinEntangledFig2).epsilon(1e-13));
  CHECK(linearized_ch(kSeparableFig3, fig2, 2.0) ==
        Approx(2.0 * kLinSeparableFig3).epsilon(1e-13));
  CHECK(linearized_ch(kSeparableFig4, presets::fig4_settings(), 1.0) ==
        Approx(kLinSeparableFig4).epsilon(1e-13));
  CHECK_THROWS_AS(linearized_ch(kEntangled, fig2, -0.1), DomainError);
  CHECK(std::string(linearization_label(kEntangled)).find("extension") !=
        std::string::npos);
}

TEST_CASE("linearized_bounds", "[inequalities][linear]") {
  CHECK(linearized_bounds(0.0) == std::pair{-0.0, 0.0});
  CHECK(linearized_bounds(1.0) == std::pair{-1.0, 0.0});
  CHECK(linearized_bounds(2.5) == std::pair{-2.5, 0.0});
  CHECK_THROWS_AS(linearized_bounds(-1.0), DomainError);
}

TEST_CASE("nonlinear_value examples", "[inequalities][nonlinear]") {
  CHECK(nonlinear_value(ClickProbabilitySet{}) == 1.0);

  const auto sep = probability_set(kSeparableFig3, presets::fig2_settings(),
                                   Detector(1.0));
  CHECK(nonlinear_value(sep) ==
        Approx(std::exp(kLinSeparableFig3)).epsilon(1e-13));

  const auto ent = probability_set(kEntangled, presets::nl_entangled_settings(),
                                   Detector(1.0));
  CHECK(std::log(nonlinear_value(ent)) ==
        Approx(kNlExponentEntangled).epsilon(1e-13));

  // Same value through the literal ratio of no-click products.
  const double ratio = (1 - ent.p_xv()) * (1 - ent.p_y()) * (1 - ent.p_u()) /
                       ((1 - ent.p_xu()) * (1 - ent.p_yu()) * (1 - ent.p_yv()));
  CHECK(nonlinear_value(ent) == Approx(ratio).epsilon(1e-12));

  const auto certain = ClickProbabilitySet::from_probabilities(
      {1.0, 0.1, 0.1, 0.1, 0.1, 0.1}, 1.0);
  CHECK_THROWS_AS(nonlinear_value(certain), DegenerateInputError);

  // Exponent space survives 1 - P underflowing.
  const auto hot = probability_set(kSeparableFig3, presets::fig2_settings(),
                                   Detector(50.0));
  CHECK(hot.p_yu() == 1.0);
  CHECK(nonlinear_value(hot) ==
        Approx(std::exp(50.0 * kLinSeparableFig3)).epsilon(1e-11));
}

TEST_CASE("nonlinear_report", "[inequalities][nonlinear]") {
  const auto dark = nonlinear_report(kEntangled, presets::fig2_settings(),
                                     Detector(0.0));
  CHECK(dark.cnl_value == 1.0);
  CHECK(dark.lower_bound == 1.0);
  CHECK(dark.upper_bound == 1.0);
  CHECK_FALSE(dark.violated);

  for (double kappa : {1e-6, 0.01, 0.5, 1.0, 7.0, 50.0}) {
    const auto r = nonlinear_report(kSeparableFig3, presets::fig2_settings(),
                                    Detector::for_kappa(kSeparableFig3, kappa));
    CHECK_FALSE(r.violated);
    CHECK(r.lower_bound == std::exp(-kappa));
  }

  const auto ent = nonlinear_report(kEntangled, presets::nl_entangled_settings(),
                                    Detector::for_kappa(kEntangled, 0.5));
  CHECK(std::log(ent.cnl_value) ==
        Approx(0.5 * kNlExponentEntangled).epsilon(1e-12));
  CHECK(ent.cnl_value < ent.lower_bound);
  CHECK(ent.violated);
}

TEST_CASE("CH lemma over the unit hypercube", "[inequalities][property]") {
  constexpr int n = 21;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double v = ch_lemma(i / 20.0, j / 20.0, k / 20.0, l / 20.0);
          REQUIRE(v <= 1e-15);
          REQUIRE(v >= -1.0 - 1e-15);
        }
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 100000; ++t) {
    const double v = ch_lemma(unit(rng), unit(rng), unit(rng), unit(rng));
    REQUIRE(v <= 0.0);
    REQUIRE(v >= -1.0);
  }
}

TEST_CASE("range of C", "[inequalities][property]") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Unconstrained probabilities: six terms with signs (+,-,+,+,-,-).
  for (int t = 0; t < 20000; ++t) {
    const auto p = ClickProbabilitySet::from_probabilities(
        {unit(rng), unit(rng), unit(rng), unit(rng), unit(rng), unit(rng)},
        1.0);
    const double c = ch_value(p);
    REQUIRE(c >= -3.0);
    REQUIRE(c <= 3.0);
  }
  // Probabilities generated by field states: joints never exceed their
  // marginals (P_xu <= P_u, P_yu <= P_y), which caps C at 1.
  std::uniform_real_distribution<double> angle(0.0, pi);
  std::uniform_real_distribution<double> amp(-2.0, 2.0);
  std::uniform_real_distribution<double> gain(0.0, 60.0);
  for (int t = 0; t < 50000; ++t) {
    const FieldState st =
        t % 2 ? FieldState{SeparableState{amp(rng), angle(rng), angle(rng)}}
              : FieldState{EntangledState{amp(rng), amp(rng)}};
    const auto m = MeasurementSettings::from_angles(angle(rng), angle(rng),
                                                    angle(rng), angle(rng));
    const double c = ch_value(probability_set(st, m, Detector(gain(rng))));
    REQUIRE(c >= -3.0);
    REQUIRE(c <= 1.0);
    REQUIRE(ch_value(probability_set(st, m, Detector(0.0))) == 0.0);
  }
}

TEST_CASE("separable nonlinear value is exp of the linearized C",
          "[inequalities][property]") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> angle(0.0, pi);
  std::uniform_real_distribution<double> kappa_dist(0.0, 50.0);
  std::uniform_real_distribution<double> amp(0.1, 3.0);
  for (int t = 0; t < 20000; ++t) {
    const FieldState st = SeparableState{amp(rng), angle(rng), angle(rng)};
    const auto m = MeasurementSettings::from_angles(angle(rng), angle(rng),
                                                    angle(rng), angle(rng));
    const double kappa = kappa_dist(rng);
    const auto p = probability_set(st, m, Detector::for_kappa(st, kappa));
    const double lin = linearized_ch(st, m, kappa);
    REQUIRE(nonlinear_value(p) == Approx(std::exp(lin)).epsilon(1e-12));
    const auto [lo, hi] = linearized_bounds(kappa);
    REQUIRE(lin >= lo);
    REQUIRE(lin <= hi);
    REQUIRE_FALSE(nonlinear_report_from(p).violated);
  }
}

TEST_CASE("full C approaches its linearization quadratically",
          "[inequalities][property]") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> angle(0.0, pi);
  for (int t = 0; t < 200; ++t) {
    const FieldState st = SeparableState{1.0, angle(rng), angle(rng)};
    const auto m = MeasurementSettings::from_angles(angle(rng), angle(rng),
                                                    angle(rng), angle(rng));
    for (double kappa : {0.1, 0.05, 0.025}) {
      const double err = std::fabs(ch_at(st, m, kappa) -
                                   linearized_ch(st, m, kappa));
      // |1 - e^{-z} - z| <= z^2/2 on each of six channels with I <= 1.
      REQUIRE(err <= 3.0 * kappa * kappa);
    }
  }
  // Entangled fig. 2 settings: error ratio under halving approaches 4.
  const auto fig2 = presets::fig2_settings();
  const double e1 = std::fabs(ch_at(kEntangled, fig2, 0.05) -
                              linearized_ch(kEntangled, fig2, 0.05));
  const double e2 = std::fabs(ch_at(kEntangled, fig2, 0.025) -
                              linearized_ch(kEntangled, fig2, 0.025));
  CHECK(std::log2(e1 / e2) >= 1.9);
}
