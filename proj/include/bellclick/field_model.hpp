#pragma once

// Classical two-aperture polarized fields and their photodetection
// statistics.
//
// The field lives in the tensor product of a two-dimensional spatial space
// spanned by the aperture modes |1>, |-1> and a two-dimensional polarization
// space spanned by |up>, |right>.  A measurement is a beam splitter that
// projects onto s = (cos a, sin a) followed by a polarizer that projects onto
// p = (cos b, sin b).  A detector with gain eta*T fires with probability
// 1 - exp(-eta*T*|E|^2).

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <variant>

#include "bellclick/errors.hpp"

namespace bellclick {

/// Real unit 2-vector stored by its orientation angle (radians).
class Analyzer {
 public:
  Analyzer() = default;

  explicit Analyzer(double angle) : angle_(angle) {
    if (!std::isfinite(angle)) {
      throw DomainError("analyzer angle must be finite");
    }
  }

  /// Builds the analyzer along (x, y); the vector is normalized.
  static Analyzer from_vector(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw DomainError("analyzer vector must be finite");
    }
    if (std::hypot(x, y) < 1e-9) {
      throw DomainError("analyzer vector is too close to zero");
    }
    return Analyzer(std::atan2(y, x));
  }

  double angle() const noexcept { return angle_; }

  std::array<double, 2> unit_vector() const noexcept {
    return {std::cos(angle_), std::sin(angle_)};
  }

  friend bool operator==(const Analyzer&, const Analyzer&) = default;

 private:
  double angle_ = 0.0;
};

/// Dot product of two analyzer directions, cos(a - b).
inline double overlap(Analyzer a, Analyzer b) noexcept {
  return std::cos(a.angle() - b.angle());
}

/// E1 |1>|up> + E-1 |-1>|right>.  Maximally entangled when a1 == am1.
struct EntangledState {
  double a1 = 1.0;
  double am1 = 1.0;
};

/// eps |s0>|p0>: the same polarization p0 at both apertures.
struct SeparableState {
  double amp = 1.0;
  double alpha0 = 0.0;
  double beta0 = 0.0;
};

using FieldState = std::variant<EntangledState, SeparableState>;

inline void validate(const FieldState& state) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, EntangledState>) {
          if (!std::isfinite(s.a1) || !std::isfinite(s.am1)) {
            throw DomainError("entangled amplitudes must be finite");
          }
        } else {
          if (!std::isfinite(s.amp) || !std::isfinite(s.alpha0) ||
              !std::isfinite(s.beta0)) {
            throw DomainError("separable state parameters must be finite");
          }
        }
      },
      state);
}

inline bool is_separable(const FieldState& state) noexcept {
  return std::holds_alternative<SeparableState>(state);
}

/// eps^2 used to form kappa.  For unequal entangled amplitudes this is the
/// nominal value max(a1^2, am1^2).
inline double reference_intensity(const FieldState& state) noexcept {
  if (const auto* e = std::get_if<EntangledState>(&state)) {
    return std::fmax(e->a1 * e->a1, e->am1 * e->am1);
  }
  const auto& s = std::get<SeparableState>(state);
  return s.amp * s.amp;
}

/// True when kappa is only a nominal parameter (asymmetric entangled state).
inline bool kappa_is_nominal(const FieldState& state) noexcept {
  if (const auto* e = std::get_if<EntangledState>(&state)) {
    return std::fabs(e->a1) != std::fabs(e->am1);
  }
  return false;
}

class Detector {
 public:
  Detector() = default;

  /// gain is the product eta*T of quantum efficiency and detection time.
  explicit Detector(double gain) : gain_(gain) {
    if (!(gain >= 0.0) || !std::isfinite(gain)) {
      throw DomainError("detector gain must be finite and >= 0");
    }
  }

  double gain() const noexcept { return gain_; }

  /// Detector whose gain realizes the requested kappa for this state.
  static Detector for_kappa(const FieldState& state, double kappa) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
      throw DomainError("kappa must be finite and >= 0");
    }
    if (kappa == 0.0) return Detector(0.0);
    const double ref = reference_intensity(state);
    if (!(ref > 0.0)) {
      throw DomainError("cannot reach kappa > 0 with a zero-amplitude state");
    }
    return Detector(kappa / ref);
  }

 private:
  double gain_ = 0.0;
};

inline double kappa_of(const FieldState& state, Detector detector) noexcept {
  return detector.gain() * reference_intensity(state);
}

/// Spatial directions x, y and polarization directions u, v of a Bell test.
struct MeasurementSettings {
  Analyzer sx;
  Analyzer sy;
  Analyzer pu;
  Analyzer pv;

  static MeasurementSettings from_angles(double x, double y, double u,
                                         double v) {
    return {Analyzer(x), Analyzer(y), Analyzer(u), Analyzer(v)};
  }

  std::array<double, 4> angles() const noexcept {
    return {sx.angle(), sy.angle(), pu.angle(), pv.angle()};
  }

  friend bool operator==(const MeasurementSettings&,
                         const MeasurementSettings&) = default;
};

// ---------------------------------------------------------------------------
// Intensities

/// Amplitude <p|<s|psi> reaching the detector.
inline double joint_amplitude(const FieldState& state, Analyzer s,
                              Analyzer p) noexcept {
  if (const auto* e = std::get_if<EntangledState>(&state)) {
    const double a = s.angle();
    const double b = p.angle();
    return std::cos(a) * std::cos(b) * e->a1 +
           std::sin(a) * std::sin(b) * e->am1;
  }
  const auto& sep = std::get<SeparableState>(state);
  return sep.amp * overlap(s, Analyzer(sep.alpha0)) *
         overlap(p, Analyzer(sep.beta0));
}

/// |<p|<s|psi>|^2, intensity behind beam splitter and polarizer.
inline double joint_intensity(const FieldState& state, Analyzer s,
                              Analyzer p) noexcept {
  const double e = joint_amplitude(state, s, p);
  return e * e;
}

/// Intensity behind the beam splitter alone: the polarization vector is kept
/// and its full norm taken.
inline double spatial_marginal_intensity(const FieldState& state,
                                         Analyzer s) noexcept {
  if (const auto* e = std::get_if<EntangledState>(&state)) {
    const double c = std::cos(s.angle());
    const double sn = std::sin(s.angle());
    return c * c * e->a1 * e->a1 + sn * sn * e->am1 * e->am1;
  }
  const auto& sep = std::get<SeparableState>(state);
  const double d = overlap(s, Analyzer(sep.alpha0));
  return sep.amp * sep.amp * d * d;
}

/// Intensity behind the polarizer alone (Malus' law on the aperture field).
inline double polarization_marginal_intensity(const FieldState& state,
                                              Analyzer p) noexcept {
  if (const auto* e = std::get_if<EntangledState>(&state)) {
    const double c = std::cos(p.angle());
    const double sn = std::sin(p.angle());
    return c * c * e->a1 * e->a1 + sn * sn * e->am1 * e->am1;
  }
  const auto& sep = std::get<SeparableState>(state);
  const double d = overlap(p, Analyzer(sep.beta0));
  return sep.amp * sep.amp * d * d;
}

// ---------------------------------------------------------------------------
// Click probabilities

/// 1 - exp(-mean_count), accurate for small mean counts.
inline double click_probability_from_mean(double mean_count) noexcept {
  return -std::expm1(-mean_count);
}

inline double click_probability(double intensity, Detector detector) {
  if (!(intensity >= 0.0)) {
    throw DomainError("intensity must be >= 0");
  }
  return click_probability_from_mean(detector.gain() * intensity);
}

/// The six measured channels entering the CH combination.
enum class Channel : std::size_t { xu = 0, xv, yu, yv, y, u };

inline constexpr std::size_t kChannelCount = 6;

inline constexpr std::array<Channel, kChannelCount> kAllChannels = {
    Channel::xu, Channel::xv, Channel::yu, Channel::yv, Channel::y,
    Channel::u};

inline const char* channel_name(Channel c) noexcept {
  switch (c) {
    case Channel::xu: return "p_xu";
    case Channel::xv: return "p_xv";
    case Channel::yu: return "p_yu";
    case Channel::yv: return "p_yv";
    case Channel::y: return "p_y";
    case Channel::u: return "p_u";
  }
  return "?";
}

/// Intensities of the six channels, in Channel order.
inline std::array<double, kChannelCount> channel_intensities(
    const FieldState& state, const MeasurementSettings& m) noexcept {
  return {joint_intensity(state, m.sx, m.pu),
          joint_intensity(state, m.sx, m.pv),
          joint_intensity(state, m.sy, m.pu),
          joint_intensity(state, m.sy, m.pv),
          spatial_marginal_intensity(state, m.sy),
          polarization_marginal_intensity(state, m.pu)};
}

/// Click probabilities of the six channels.  The mean photocounts
/// -ln(1 - p) are kept alongside so that quantities built from no-click
/// probabilities stay exact when 1 - p underflows.
class ClickProbabilitySet {
 public:
  ClickProbabilitySet() = default;

  /// From mean photocounts (gain * intensity) per channel.
  static ClickProbabilitySet from_mean_counts(
      const std::array<double, kChannelCount>& mean_counts, double kappa,
      bool kappa_nominal = false) {
    ClickProbabilitySet set;
    for (std::size_t i = 0; i < kChannelCount; ++i) {
      if (!(mean_counts[i] >= 0.0)) {
        throw DomainError("mean photocount must be >= 0");
      }
      set.mean_counts_[i] = mean_counts[i];
      set.probabilities_[i] = click_probability_from_mean(mean_counts[i]);
    }
    set.kappa_ = kappa;
    set.kappa_nominal_ = kappa_nominal;
    return set;
  }

  /// From measured or externally supplied probabilities.
  static ClickProbabilitySet from_probabilities(
      const std::array<double, kChannelCount>& probabilities, double kappa,
      bool kappa_nominal = false) {
    ClickProbabilitySet set;
    for (std::size_t i = 0; i < kChannelCount; ++i) {
      const double p = probabilities[i];
      if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("probability must lie in [0, 1]");
      }
      set.probabilities_[i] = p;
      set.mean_counts_[i] = -std::log1p(-p);
    }
    set.kappa_ = kappa;
    set.kappa_nominal_ = kappa_nominal;
    return set;
  }

  double operator[](Channel c) const noexcept {
    return probabilities_[static_cast<std::size_t>(c)];
  }
  double mean_count(Channel c) const noexcept {
    return mean_counts_[static_cast<std::size_t>(c)];
  }

  double p_xu() const noexcept { return (*this)[Channel::xu]; }
  double p_xv() const noexcept { return (*this)[Channel::xv]; }
  double p_yu() const noexcept { return (*this)[Channel::yu]; }
  double p_yv() const noexcept { return (*this)[Channel::yv]; }
  double p_y() const noexcept { return (*this)[Channel::y]; }
  double p_u() const noexcept { return (*this)[Channel::u]; }

  double kappa() const noexcept { return kappa_; }
  bool kappa_nominal() const noexcept { return kappa_nominal_; }

  const std::array<double, kChannelCount>& probabilities() const noexcept {
    return probabilities_;
  }
  const std::array<double, kChannelCount>& mean_counts() const noexcept {
    return mean_counts_;
  }

 private:
  std::array<double, kChannelCount> probabilities_{};
  std::array<double, kChannelCount> mean_counts_{};
  double kappa_ = 0.0;
  bool kappa_nominal_ = false;
};

inline ClickProbabilitySet probability_set(const FieldState& state,
                                           const MeasurementSettings& settings,
                                           Detector detector) {
  validate(state);
  auto counts = channel_intensities(state, settings);
  for (double& c : counts) c *= detector.gain();
  return ClickProbabilitySet::from_mean_counts(
      counts, kappa_of(state, detector), kappa_is_nominal(state));
}

}  // namespace bellclick
