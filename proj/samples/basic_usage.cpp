// Evaluates both inequalities for the maximally entangled state and a
// separable state at the same measurement settings.

#include <cstdio>

#include "bellclick/bellclick.hpp"

int main() {
  using namespace bellclick;

  const auto settings = presets::fig2_settings();
  const FieldState entangled = EntangledState{1.0, 1.0};
  const FieldState separable = presets::fig3_separable();

  std::printf("%8s %14s %14s %14s %14s\n", "kappa", "C(entangled)",
              "C(separable)", "Cnl(separable)", "exp(-kappa)");
  for (double kappa : {0.01, 0.1, 1.0, 3.0, 5.0, 10.0}) {
    const auto ent = ch_report(entangled, settings,
                               Detector::for_kappa(entangled, kappa));
    const auto sep = ch_report(separable, settings,
                               Detector::for_kappa(separable, kappa));
    const auto nl = nonlinear_report(separable, settings,
                                     Detector::for_kappa(separable, kappa));
    std::printf("%8.3f %14.7f %14.7f %14.7f %14.7f\n", kappa, ent.c_value,
                sep.c_value, nl.cnl_value, nl.lower_bound);
  }

  const double onset = find_sign_change(separable, settings, 1.0, 5.0);
  std::printf("separable state starts violating C <= 0 at kappa = %.10f\n",
              onset);
}
