// constants.hpp - unit system shared by every module: energies in cm^-1, times in fs, hbar = 1.
#pragma once

#include <complex>

namespace heom2d {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};

// 2*pi*c with c = 2.99792458e10 cm/s: converts a wavenumber [cm^-1] to an
// angular frequency [rad/fs]. The only place the speed of light appears.
inline constexpr double kTwoPiC = 1.8836515673088532e-4;

// Boltzmann constant [cm^-1 / K].
inline constexpr double kBoltzmann = 0.6950348;

inline constexpr double rad_per_fs(double cm1) { return cm1 * kTwoPiC; }
inline constexpr double cm1_from_rad_per_fs(double w) { return w / kTwoPiC; }

// Inverse temperature [cm] for T [K].
inline double beta_cm(double temperature_K) { return 1.0 / (kBoltzmann * temperature_K); }

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace heom2d
