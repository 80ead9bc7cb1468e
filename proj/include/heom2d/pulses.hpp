// pulses.hpp - Gaussian pulses with envelope-locked carriers. Durations are intensity
// FWHM; the field envelope then has sigma = fwhm / (2 sqrt(ln 2)).
#pragma once

#include <array>
#include <cmath>

#include "heom2d/constants.hpp"

namespace heom2d::pulses {

struct Pulse {
  double center_fs = 0;
  double carrier_cm1 = 0;
  double fwhm_fs = 10.0;       // intensity FWHM
  double amplitude_cm1 = 1.0;  // peak field in energy units (mu * E0)
  double phase_rad = 0;        // phase-cycling offset

  double sigma_fs() const { return fwhm_fs / (2.0 * std::sqrt(std::log(2.0))); }
  double envelope(double s_fs) const {
    const double u = (s_fs - center_fs) / sigma_fs();
    return amplitude_cm1 * std::exp(-0.5 * u * u);
  }
  // Positive-frequency field in a frame rotating at omega_ref: the carrier phase is
  // locked to the envelope center, so moving the pulse does not rotate its phase.
  cplx positive_field(double s_fs, double omega_ref_cm1) const {
    const double det = rad_per_fs(carrier_cm1 - omega_ref_cm1);
    return envelope(s_fs) * std::exp(cplx(0.0, -det * (s_fs - center_fs) + phase_rad));
  }
  // FWHM of the spectral intensity |A(w)|^2 in cm^-1: 4 ln2 / (2 pi c fwhm).
  double spectral_fwhm_cm1() const { return 4.0 * std::log(2.0) / (kTwoPiC * fwhm_fs); }
  // Pulse area for a resonant two-level transition with unit dipole, radians.
  double area_rad() const {
    return 2.0 * kTwoPiC * amplitude_cm1 * sigma_fs() * std::sqrt(2.0 * kPi);
  }
};

// The three-pulse experiment: pulse 0 is conjugated in the detected rephasing signal.
// Centers: T1 = 0, T2 = tau, T3 = tau + T; detection runs from tau + T.
struct Sequence {
  std::array<Pulse, 3> p;
  double omega_ref_cm1 = 0;

  static Sequence delays(const std::array<Pulse, 3>& base, double tau_fs, double T_fs,
                         double omega_ref_cm1) {
    Sequence s{base, omega_ref_cm1};
    s.p[0].center_fs = 0.0;
    s.p[1].center_fs = tau_fs;
    s.p[2].center_fs = tau_fs + T_fs;
    return s;
  }
};

}  // namespace heom2d::pulses
