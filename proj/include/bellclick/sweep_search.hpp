#pragma once

// kappa sweeps of both inequalities, violation-onset root finding, and a
// derivative-free search over measurement settings.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bellclick/errors.hpp"
#include "bellclick/field_model.hpp"
#include "bellclick/inequalities.hpp"
#include "bellclick/parallel.hpp"

namespace bellclick {

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepScale { linear, logarithmic };

struct SweepSpec {
  double kappa_min = 0.0;
  double kappa_max = 10.0;
  int points = 201;
  SweepScale scale = SweepScale::linear;

  void validate() const {
    if (!std::isfinite(kappa_min) || !std::isfinite(kappa_max)) {
      throw ConfigError("sweep kappa range must be finite");
    }
    if (kappa_min < 0.0) throw ConfigError("kappa_min must be >= 0");
    if (kappa_min > kappa_max) {
      throw ConfigError("kappa_min must not exceed kappa_max");
    }
    if (points < 2) throw ConfigError("sweep needs at least 2 points");
    if (scale == SweepScale::logarithmic && !(kappa_min > 0.0)) {
      throw ConfigError("logarithmic sweep requires kappa_min > 0");
    }
  }

  /// Sample points in increasing order; both ends are hit exactly.
  std::vector<double> kappas() const {
    validate();
    std::vector<double> out(static_cast<std::size_t>(points));
    const double last = static_cast<double>(points - 1);
    for (int i = 0; i < points; ++i) {
      const double t = static_cast<double>(i) / last;
      if (scale == SweepScale::linear) {
        out[i] = kappa_min + (kappa_max - kappa_min) * t;
      } else {
        out[i] = std::exp(std::log(kappa_min) +
                          (std::log(kappa_max) - std::log(kappa_min)) * t);
      }
    }
    out.front() = kappa_min;
    out.back() = kappa_max;
    return out;
  }
};

struct SweepRow {
  double kappa = 0.0;
  double c_value = 0.0;
  double ch_lower = -1.0;
  double ch_upper = 0.0;
  double cnl_value = 1.0;
  double cnl_lower = 1.0;
  double cnl_upper = 1.0;
  bool violated_ch = false;
  bool violated_nl = false;
};

/// Both inequalities at one kappa; the detector gain is set to kappa/eps^2.
inline SweepRow evaluate_at_kappa(const FieldState& state,
                                  const MeasurementSettings& settings,
                                  double kappa,
                                  double tolerance = kDefaultTolerance) {
  const auto probs =
      probability_set(state, settings, Detector::for_kappa(state, kappa));
  const ChReport ch = ch_report_from(probs, tolerance);
  const NonlinearReport nl = nonlinear_report_from(probs, tolerance);
  SweepRow row;
  row.kappa = probs.kappa();
  row.c_value = ch.c_value;
  row.ch_lower = ch.lower_bound;
  row.ch_upper = ch.upper_bound;
  row.cnl_value = nl.cnl_value;
  row.cnl_lower = nl.lower_bound;
  row.cnl_upper = nl.upper_bound;
  row.violated_ch = ch.violated();
  row.violated_nl = nl.violated;
  return row;
}

inline std::vector<SweepRow> kappa_sweep(const FieldState& state,
                                         const MeasurementSettings& settings,
                                         const SweepSpec& spec,
                                         double tolerance = kDefaultTolerance) {
  std::vector<SweepRow> rows;
  for (double kappa : spec.kappas()) {
    rows.push_back(evaluate_at_kappa(state, settings, kappa, tolerance));
  }
  return rows;
}

/// C as a function of kappa for fixed state and settings.
inline double ch_at_kappa(const FieldState& state,
                          const MeasurementSettings& settings, double kappa) {
  return ch_value(
      probability_set(state, settings, Detector::for_kappa(state, kappa)));
}

/// Bisection for C(kappa*) = 0 inside [kappa_lo, kappa_hi].
inline double find_sign_change(const FieldState& state,
                               const MeasurementSettings& settings,
                               double kappa_lo, double kappa_hi) {
  if (!(kappa_lo < kappa_hi)) {
    throw BracketError("bracket must have kappa_lo < kappa_hi");
  }
  double f_lo = ch_at_kappa(state, settings, kappa_lo);
  const double f_hi = ch_at_kappa(state, settings, kappa_hi);
  if (f_lo == 0.0) return kappa_lo;
  if (f_hi == 0.0) return kappa_hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw BracketError("C has the same sign at both ends of the bracket");
  }
  double lo = kappa_lo;
  double hi = kappa_hi;
  for (int iter = 0; iter < 200 && hi - lo >= 1e-12; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = ch_at_kappa(state, settings, mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Settings search

enum class Objective {
  max_ch,             // maximize C
  min_nonlinear_gap,  // minimize C_nl - e^{-kappa}
};

inline const char* objective_name(Objective o) noexcept {
  return o == Objective::max_ch ? "max-C" : "min-(Cnl - exp(-kappa))";
}

struct SearchConfig {
  int grid_points = 24;
  double step_tolerance = 1e-9;
  int max_sweeps = 2000;
  unsigned workers = 1;
  /// Angles (x, y, u, v) held fixed during the search.
  std::array<std::optional<double>, 4> fixed{};

  void validate() const {
    if (grid_points < 1) throw ConfigError("grid_points must be >= 1");
    if (!(step_tolerance > 0.0)) {
      throw ConfigError("step_tolerance must be > 0");
    }
    for (const auto& f : fixed) {
      if (f && !std::isfinite(*f)) throw ConfigError("fixed angle not finite");
    }
  }
};

struct SearchResult {
  MeasurementSettings settings;
  double objective = 0.0;
  Objective objective_kind = Objective::max_ch;
  std::uint64_t evaluations = 0;
  double grid_objective = 0.0;  // best coarse-grid value

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

/// The objective value (not the internal maximization score).
inline double search_objective(const FieldState& state,
                               const MeasurementSettings& settings,
                               Detector detector, Objective kind) {
  const auto probs = probability_set(state, settings, detector);
  if (kind == Objective::max_ch) return ch_value(probs);
  return nonlinear_value(probs) - std::exp(-probs.kappa());
}

namespace detail {

inline double wrap_half_turn(double angle) noexcept {
  double w = std::fmod(angle, std::numbers::pi);
  if (w < 0.0) w += std::numbers::pi;
  if (w >= std::numbers::pi) w = 0.0;
  return w;
}

class SearchProblem {
 public:
  SearchProblem(const FieldState& state, Detector detector, Objective kind)
      : state_(state), detector_(detector), kind_(kind) {}

  // Larger is better.
  double score(const std::array<double, 4>& a) {
    ++evaluations_;
    const double v = search_objective(
        state_, MeasurementSettings::from_angles(a[0], a[1], a[2], a[3]),
        detector_, kind_);
    return kind_ == Objective::max_ch ? v : -v;
  }

  double to_objective(double score) const noexcept {
    return kind_ == Objective::max_ch ? score : -score;
  }

  std::uint64_t evaluations() const noexcept { return evaluations_; }
  void add_evaluations(std::uint64_t n) noexcept { evaluations_ += n; }

 private:
  FieldState state_;
  Detector detector_;
  Objective kind_;
  std::uint64_t evaluations_ = 0;
};

struct GridBest {
  std::array<double, 4> point{};
  double score = -INFINITY;
  bool found = false;
};

}  // namespace detail

/// Coarse grid over [0, pi)^4 followed by coordinate-wise golden-section
/// refinement.  Ties on the grid go to the lexicographically smallest
/// (x, y, u, v); the result does not depend on config.workers.
inline SearchResult search_settings(const FieldState& state, double kappa,
                                    Objective kind,
                                    const SearchConfig& config = {}) {
  config.validate();
  validate(state);
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw ConfigError("search requires finite kappa > 0");
  }
  const Detector detector = Detector::for_kappa(state, kappa);
  const double step = std::numbers::pi / config.grid_points;

  std::array<std::vector<double>, 4> axes;
  for (std::size_t i = 0; i < 4; ++i) {
    if (config.fixed[i]) {
      axes[i] = {*config.fixed[i]};
    } else {
      for (int g = 0; g < config.grid_points; ++g) axes[i].push_back(g * step);
    }
  }
  const std::uint64_t total =
      axes[0].size() * axes[1].size() * axes[2].size() * axes[3].size();

  auto point_at = [&](std::uint64_t index) {
    std::array<double, 4> p{};
    for (int i = 3; i >= 0; --i) {
      const auto n = axes[i].size();
      p[i] = axes[i][index % n];
      index /= n;
    }
    return p;
  };

  // Contiguous chunks in lexicographic order, reduced in chunk order.
  const std::uint64_t chunks =
      std::min<std::uint64_t>(std::max(config.workers, 1u), total);
  std::vector<detail::GridBest> best(chunks);
  detail::parallel_for(chunks, config.workers, [&](std::uint64_t c) {
    detail::SearchProblem local(state, detector, kind);
    const std::uint64_t begin = total * c / chunks;
    const std::uint64_t end = total * (c + 1) / chunks;
    for (std::uint64_t k = begin; k < end; ++k) {
      const auto p = point_at(k);
      const double s = local.score(p);
      if (!best[c].found || s > best[c].score) {
        best[c] = {p, s, true};
      }
    }
  });
  detail::GridBest grid;
  for (const auto& b : best) {
    if (b.found && (!grid.found || b.score > grid.score)) grid = b;
  }

  detail::SearchProblem problem(state, detector, kind);
  problem.add_evaluations(total);

  std::array<double, 4> x = grid.point;
  double fx = grid.score;
  constexpr double kInvPhi = 0.6180339887498949;
  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (config.fixed[i]) continue;
      auto at = [&](double t) {
        auto y = x;
        y[i] = t;
        return problem.score(y);
      };
      double a = x[i] - step;
      double b = x[i] + step;
      double c = b - kInvPhi * (b - a);
      double d = a + kInvPhi * (b - a);
      double fc = at(c);
      double fd = at(d);
      while (b - a > config.step_tolerance) {
        if (fc > fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - kInvPhi * (b - a);
          fc = at(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + kInvPhi * (b - a);
          fd = at(d);
        }
      }
      const double t = fc > fd ? c : d;
      const double ft = std::max(fc, fd);
      if (ft > fx) {
        max_move = std::max(max_move, std::fabs(t - x[i]));
        x[i] = t;
        fx = ft;
      }
    }
    if (max_move < config.step_tolerance) break;
  }

  for (std::size_t i = 0; i < 4; ++i) {
    if (!config.fixed[i]) x[i] = detail::wrap_half_turn(x[i]);
  }
  double final_score = problem.score(x);
  if (!(final_score >= grid.score)) {
    x = grid.point;
    final_score = grid.score;
  }

  SearchResult result;
  result.settings = MeasurementSettings::from_angles(x[0], x[1], x[2], x[3]);
  result.objective = problem.to_objective(final_score);
  result.objective_kind = kind;
  result.evaluations = problem.evaluations();
  result.grid_objective = problem.to_objective(grid.score);
  return result;
}

}  // namespace bellclick
