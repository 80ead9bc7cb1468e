// spectra.hpp - 2D Fourier transforms of the rephasing signal, peak transients, and
// oscillation metrics on population-time traces.
#pragma once

#include <vector>

#include "heom2d/constants.hpp"
#include "heom2d/response.hpp"

namespace heom2d::spectra {

struct Spectrum2D {
  std::vector<double> w_tau_cm1, w_t_cm1;  // absolute axes (rotating frame added back)
  std::vector<cplx> s;                     // [i_wtau * w_t.size() + i_wt]
  const cplx& at(int i, int j) const { return s[static_cast<std::size_t>(i) * w_t_cm1.size() + j]; }
};

struct TransformOptions {
  int zero_pad_factor = 4;
  double window_fraction = 0.25;  // cosine^2 taper over the trailing fraction of each axis
  double omega_ref_cm1 = 0;
};

// FT kernels e^{-i w_tau tau} and e^{+i w_t t} on uniform grids starting at 0;
// half-weight on the first sample of each axis (one-sided trapezoid).
Spectrum2D transform_2d(const std::vector<cplx>& s_tau_t, int n_tau, int n_t, double dtau_fs,
                        double dt_fs, const TransformOptions& opt);

// Slice a Signal3 at one T index into the [tau][t] plane expected by transform_2d.
std::vector<cplx> signal_slice_at_T(const response::Signal3& sig,
                                    const std::vector<cplx>& values, int iT);

struct Peak {
  double w_tau_cm1 = 0, w_t_cm1 = 0;  // requested position
  double snapped_w_tau_cm1 = 0, snapped_w_t_cm1 = 0;
  cplx value;
  bool found = false;
};

// Local maximum of |S| within a half-width box around the requested coordinates.
Peak locate_peak(const Spectrum2D& sp, double w_tau_cm1, double w_t_cm1, double half_width_cm1);

struct OscillationMetrics {
  double amplitude = 0;       // peak-to-peak of the detrended trace
  double frequency_cm1 = 0;   // dominant frequency of the detrended trace
  double baseline = 0;        // mean of the raw trace over the window
};

// Detrend |trace|(T) by a least-squares quadratic (one reweighting pass), then report
// the peak-to-peak amplitude and the dominant frequency from linear-prediction roots
// (robust near Nyquist, where plain DFT peaks are mirror-biased).
OscillationMetrics oscillation_metrics(const std::vector<double>& T_fs,
                                       const std::vector<double>& values, double T_min_fs,
                                       double T_max_fs);

// Windowed amplitude ratio helper: peak-to-peak of the detrended trace restricted to
// [a,b] versus [c,d] (used for damping checks on transients).
double amplitude_ratio(const std::vector<double>& T_fs, const std::vector<double>& values,
                       double a_fs, double b_fs, double c_fs, double d_fs);

}  // namespace heom2d::spectra
