// oracles.hpp - independent reference values for tests: direct frequency-domain
// quadrature of the bath correlation and lineshape integrals. Deliberately avoids the
// library's exponential-series machinery; only the spectral density formula is shared.
#pragma once

#include <cmath>
#include <complex>
#include <functional>

#include "heom2d/bath.hpp"
#include "heom2d/constants.hpp"

namespace oracle {

using heom2d::cplx;
using heom2d::kPi;
using heom2d::kTwoPiC;

// Composite Simpson with n panels (n rounded up to even).
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Quadrature cutoff; the slow 1/w Drude tail beyond it is restored analytically.
constexpr double kOmegaCut = 62000.0;

// Piecewise grid sized for a sharp mode resonance near 800 cm^-1 and for the
// oscillatory kernels out to t ~ 500 fs (period 2*pi/(kTwoPiC*t) ~ 67 cm^-1).
inline double bath_integral(const std::function<double(double)>& f) {
  double acc = simpson(f, 1e-6, 2000.0, 32000);
  acc += simpson(f, 2000.0, 12000.0, 40000);
  acc += simpson(f, 12000.0, kOmegaCut, 50000);
  return acc;
}

// Cosine integral Ci(x) = -Int_x^inf cos(u)/u du, asymptotic form for x >~ 10.
inline double cosint(double x) {
  const double s = std::sin(x), c = std::cos(x), x2 = x * x;
  return s / x - c / x2 - 2.0 * s / (x2 * x) + 6.0 * c / (x2 * x2);
}

// Tail sine integral Int_x^inf sin(u)/u du, same asymptotic regime.
inline double sinint_tail(double x) {
  const double s = std::sin(x), c = std::cos(x), x2 = x * x;
  return c / x + s / x2 - 2.0 * c / (x2 * x) - 6.0 * s / (x2 * x2);
}

// C(t) = (1/pi) Int_0^inf dw J(w) [coth(beta w/2) cos(w_r t) - i sin(w_r t)], w_r in rad/fs.
// The Drude part decays only as 1/w, so the truncated real tail (coth -> 1 far above
// k_B T) is added back in closed form; everything else falls off as 1/w^3 or faster.
inline cplx correlation_quadrature(const heom2d::bath::BathSpec& b, double t_fs) {
  const double beta = heom2d::beta_cm(b.temperature_K);
  auto re = [&](double w) {
    return heom2d::bath::spectral_density(b, w) / std::tanh(beta * w / 2.0) *
           std::cos(kTwoPiC * w * t_fs) / kPi;
  };
  auto im = [&](double w) {
    return -heom2d::bath::spectral_density(b, w) * std::sin(kTwoPiC * w * t_fs) / kPi;
  };
  double tail_re = 0.0, tail_im = 0.0;
  const double x = kTwoPiC * kOmegaCut * t_fs;
  if (b.drude_reorg_cm1 > 0.0 && x > 10.0) {
    const double amp = 2.0 * b.drude_reorg_cm1 / (kPi * kTwoPiC * b.drude_relax_fs);
    tail_re = -amp * cosint(x);
    tail_im = -amp * sinint_tail(x);
  }
  return {bath_integral(re) + tail_re, bath_integral(im) + tail_im};
}

// Cumulant lineshape g(t) = (1/pi) Int dw J/w^2 [coth(beta w/2)(1-cos w_r t)
// + i(sin w_r t - w_r t)]; dimensionless, t in fs. The linear -w_r t piece integrates
// exactly to -t_r * lambda_total, so it is split off instead of being left to cancel
// numerically against the slowly converging 1/w Drude tail.
inline cplx lineshape_quadrature(const heom2d::bath::BathSpec& b, double t_fs) {
  const double beta = heom2d::beta_cm(b.temperature_K);
  auto re = [&](double w) {
    const double jw = heom2d::bath::spectral_density(b, w) / (w * w);
    return jw / std::tanh(beta * w / 2.0) * (1.0 - std::cos(kTwoPiC * w * t_fs)) / kPi;
  };
  auto im_osc = [&](double w) {
    const double jw = heom2d::bath::spectral_density(b, w) / (w * w);
    return jw * std::sin(kTwoPiC * w * t_fs) / kPi;
  };
  double lambda = b.drude_reorg_cm1;
  for (const auto& m : b.modes) lambda += m.huang_rhys * m.freq_cm1;
  return {bath_integral(re), bath_integral(im_osc) - kTwoPiC * t_fs * lambda};
}

// Reorganization energy (1/pi) Int dw J/w in cm^-1, with the analytic Drude tail.
inline double reorganization_quadrature(const heom2d::bath::BathSpec& b) {
  auto f = [&](double w) { return heom2d::bath::spectral_density(b, w) / w / kPi; };
  double tail = 0.0;
  if (b.drude_reorg_cm1 > 0.0) {
    tail = 2.0 * b.drude_reorg_cm1 / (kPi * kTwoPiC * b.drude_relax_fs * kOmegaCut);
  }
  return bath_integral(f) + tail;
}

}  // namespace oracle
