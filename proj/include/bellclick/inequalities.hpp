#pragma once

// Clauser-Horne combination of click probabilities, its low-intensity
// linearization, and the nonlinear criterion that separates entangled from
// separable pure field states.

#include <cmath>
#include <utility>

#include "bellclick/errors.hpp"
#include "bellclick/field_model.hpp"

namespace bellclick {

inline constexpr double kDefaultTolerance = 1e-12;

/// C = P_xu - P_xv + P_yu + P_yv - P_y - P_u.  Local realism: -1 <= C <= 0.
inline double ch_value(const ClickProbabilitySet& p) noexcept {
  return p.p_xu() - p.p_xv() + p.p_yu() + p.p_yv() - p.p_y() - p.p_u();
}

struct ChReport {
  double c_value = 0.0;
  double lower_bound = -1.0;
  double upper_bound = 0.0;
  bool violated_upper = false;
  bool violated_lower = false;
  double kappa = 0.0;
  bool kappa_nominal = false;

  bool violated() const noexcept { return violated_upper || violated_lower; }
};

inline ChReport ch_report_from(const ClickProbabilitySet& p,
                               double tolerance = kDefaultTolerance) {
  if (!(tolerance >= 0.0)) throw DomainError("tolerance must be >= 0");
  ChReport r;
  r.c_value = ch_value(p);
  r.violated_upper = r.c_value > r.upper_bound + tolerance;
  r.violated_lower = r.c_value < r.lower_bound - tolerance;
  r.kappa = p.kappa();
  r.kappa_nominal = p.kappa_nominal();
  return r;
}

inline ChReport ch_report(const FieldState& state,
                          const MeasurementSettings& settings,
                          Detector detector,
                          double tolerance = kDefaultTolerance) {
  return ch_report_from(probability_set(state, settings, detector), tolerance);
}

/// First-order Taylor expansion of C in the mean photocounts,
///   kappa * [I_xu - I_xv + I_yu + I_yv - I_y - I_u],
/// with intensities normalized by the state's reference intensity eps^2.
/// For entangled states this is an extension of the separable closed form.
inline double linearized_ch(const FieldState& state,
                            const MeasurementSettings& settings,
                            double kappa) {
  if (!(kappa >= 0.0)) throw DomainError("kappa must be >= 0");
  validate(state);
  const double ref = reference_intensity(state);
  if (kappa == 0.0 || ref == 0.0) return 0.0;
  const auto i = channel_intensities(state, settings);
  const double sum = i[0] - i[1] + i[2] + i[3] - i[4] - i[5];
  return kappa * (sum / ref);
}

inline const char* linearization_label(const FieldState& state) noexcept {
  return is_separable(state) ? "separable linearization"
                             : "entangled linearization (extension)";
}

/// Bounds (-kappa, 0) obeyed by the linearized C of every separable state.
inline std::pair<double, double> linearized_bounds(double kappa) {
  if (!(kappa >= 0.0)) throw DomainError("kappa must be >= 0");
  return {-kappa, 0.0};
}

/// (1-P_xv)(1-P_y)(1-P_u) / [(1-P_xu)(1-P_yu)(1-P_yv)], evaluated as one
/// exponential of the mean-photocount sum.
inline double nonlinear_value(const ClickProbabilitySet& p) {
  const double den_xu = p.mean_count(Channel::xu);
  const double den_yu = p.mean_count(Channel::yu);
  const double den_yv = p.mean_count(Channel::yv);
  if (std::isinf(den_xu) || std::isinf(den_yu) || std::isinf(den_yv)) {
    throw DegenerateInputError(
        "nonlinear criterion undefined: a denominator channel clicks with "
        "probability 1");
  }
  const double numerator = p.mean_count(Channel::xv) +
                           p.mean_count(Channel::y) + p.mean_count(Channel::u);
  const double denominator = den_xu + den_yu + den_yv;
  return std::exp(denominator - numerator);
}

struct NonlinearReport {
  double cnl_value = 1.0;
  double lower_bound = 1.0;
  double upper_bound = 1.0;
  bool violated = false;
  double kappa = 0.0;
  bool kappa_nominal = false;
};

/// Bounds e^{-kappa} <= C_nl <= 1; the lower bound tolerance is relative.
inline NonlinearReport nonlinear_report_from(
    const ClickProbabilitySet& p, double tolerance = kDefaultTolerance) {
  if (!(tolerance >= 0.0)) throw DomainError("tolerance must be >= 0");
  NonlinearReport r;
  r.cnl_value = nonlinear_value(p);
  r.kappa = p.kappa();
  r.kappa_nominal = p.kappa_nominal();
  r.lower_bound = std::exp(-r.kappa);
  r.upper_bound = 1.0;
  r.violated = r.cnl_value > r.upper_bound + tolerance ||
               r.cnl_value < r.lower_bound * (1.0 - tolerance);
  return r;
}

inline NonlinearReport nonlinear_report(const FieldState& state,
                                        const MeasurementSettings& settings,
                                        Detector detector,
                                        double tolerance = kDefaultTolerance) {
  return nonlinear_report_from(probability_set(state, settings, detector),
                               tolerance);
}

}  // namespace bellclick
