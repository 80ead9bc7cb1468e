// spectra.cpp - mixed-sign 2D DFT via FFTW (one axis index-reversed), peak search,
// and detrended oscillation metrics for waiting-time traces.
#include "heom2d/spectra.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace heom2d::spectra {

namespace {

// FFTW planning mutates global state; execution does not.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// cos^2 taper over the trailing `frac` of [0, n-1]; 1 elsewhere.
double taper(int i, int n, double frac) {
  if (n < 2 || frac <= 0) return 1.0;
  const double start = (1.0 - frac) * (n - 1);
  if (i <= start) return 1.0;
  const double u = (i - start) / ((n - 1) - start);
  const double c = std::cos(0.5 * kPi * u);
  return c * c;
}

// Ascending frequency axis in cm^-1 for an N-point DFT with spacing d_fs, with the
// sample at bin k representing 2*pi*k/(N*d) rad/fs; shifted so negatives come first.
std::vector<double> shifted_axis(int n, double d_fs, double omega_ref_cm1) {
  std::vector<double> w(n);
  const int half = n / 2;
  for (int i = 0; i < n; ++i) {
    const int k = i - half;
    w[i] = 2.0 * kPi * k / (n * d_fs) / kTwoPiC + omega_ref_cm1;
  }
  return w;
}

struct Fit {
  std::vector<double> residual;
};

// Least-squares quadratic with one robustness reweighting; returns v - fit.
Fit detrend_quadratic(const std::vector<double>& x, const std::vector<double>& v) {
  const int n = static_cast<int>(x.size());
  const double x0 = x.front(), x1 = x.back();
  const double mid = 0.5 * (x0 + x1), scale = std::max(1.0, 0.5 * (x1 - x0));
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const double u = (x[i] - mid) / scale;
    a(i, 0) = 1;
    a(i, 1) = u;
    a(i, 2) = u * u;
    b(i) = v[i];
  }
  Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
  Eigen::VectorXd r = b - a * coef;
  double s2 = r.squaredNorm() / n;
  if (s2 > 0) {
    Eigen::MatrixXd aw = a;
    Eigen::VectorXd bw = b;
    for (int i = 0; i < n; ++i) {
      const double w = 1.0 / std::sqrt(1.0 + r(i) * r(i) / s2);
      aw.row(i) *= w;
      bw(i) *= w;
    }
    coef = aw.colPivHouseholderQr().solve(bw);
    r = b - a * coef;
  }
  Fit f;
  f.residual.assign(r.data(), r.data() + n);
  return f;
}

struct WindowSlice {
  std::vector<double> x, v;
};

WindowSlice slice(const std::vector<double>& t, const std::vector<double>& v, double lo,
                  double hi) {
  if (t.size() != v.size())
    throw std::invalid_argument("spectra: trace and time axis differ in length");
  WindowSlice w;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= lo - 1e-9 && t[i] <= hi + 1e-9) {
      w.x.push_back(t[i]);
      w.v.push_back(v[i]);
    }
  return w;
}

double peak_to_peak(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

// Dominant damped-cosine frequency of a uniformly sampled residual, via least-squares
// linear prediction (Prony) and companion-matrix roots. Windowed-DFT peaks are biased
// near Nyquist by the negative-frequency mirror lobe; root estimates are not.
double prony_frequency_cm1(const std::vector<double>& r, double d_fs) {
  const int n = static_cast<int>(r.size());
  const int p = std::min(8, n / 3);
  const int rows = n - p;
  double scale = 0;
  for (double v : r) scale = std::max(scale, std::abs(v));
  if (p < 2 || rows < p || scale <= 0) return 0.0;

  Eigen::MatrixXd A(rows, p);
  Eigen::VectorXd b(rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < p; ++j) A(i, j) = r[static_cast<std::size_t>(i + j)];
    b(i) = r[static_cast<std::size_t>(i + p)];
  }
  const Eigen::VectorXd a = A.colPivHouseholderQr().solve(b);

  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) comp(0, j) = a(p - 1 - j);
  for (int j = 1; j < p; ++j) comp(j, j - 1) = 1.0;
  const Eigen::VectorXcd z = Eigen::EigenSolver<Eigen::MatrixXd>(comp, false).eigenvalues();

  // Residues by complex least squares, then pick the most energetic oscillating root.
  Eigen::MatrixXcd V(n, p);
  for (int k = 0; k < p; ++k) {
    cplx zk(1, 0);
    for (int i = 0; i < n; ++i) {
      V(i, k) = zk;
      zk *= z(k);
      if (!std::isfinite(std::abs(zk))) zk = cplx(0, 0);
    }
  }
  Eigen::VectorXd rv(n);
  for (int i = 0; i < n; ++i) rv(i) = r[static_cast<std::size_t>(i)];
  const Eigen::VectorXcd c = V.colPivHouseholderQr().solve(rv.cast<cplx>());

  double best_energy = 0, best_freq = 0;
  for (int k = 0; k < p; ++k) {
    const double w = std::abs(std::arg(z(k)));
    if (w < 1e-3 || w > kPi - 1e-9) continue;  // non-oscillating or sign-alternating
    if (!(std::abs(z(k)) < 1.2)) continue;     // numerically exploding root
    double energy = 0;
    cplx zk(1, 0);
    for (int i = 0; i < n; ++i) {
      energy += std::norm(c(k) * zk);
      zk *= z(k);
    }
    if (energy > best_energy) {
      best_energy = energy;
      best_freq = w / (d_fs * kTwoPiC);
    }
  }
  return best_freq;
}

}  // namespace

Spectrum2D transform_2d(const std::vector<cplx>& s_tau_t, int n_tau, int n_t, double dtau_fs,
                        double dt_fs, const TransformOptions& opt) {
  if (n_tau < 2 || n_t < 2) throw std::invalid_argument("spectra: need at least 2x2 samples");
  if (s_tau_t.size() != static_cast<std::size_t>(n_tau) * n_t)
    throw std::invalid_argument("spectra: sample count does not match the grid");
  if (dtau_fs <= 0 || dt_fs <= 0) throw std::invalid_argument("spectra: spacings must be positive");
  if (opt.zero_pad_factor < 1) throw std::invalid_argument("spectra: zero_pad_factor must be >= 1");

  const int ntau = opt.zero_pad_factor * n_tau;
  const int nt = opt.zero_pad_factor * n_t;
  std::vector<cplx> buf(static_cast<std::size_t>(ntau) * nt, cplx(0, 0));

  // The t axis wants e^{+i w t}; index-reversing it turns the forward 2D transform
  // into forward-in-tau, backward-in-t.
  for (int i = 0; i < n_tau; ++i) {
    const double wi = (i == 0 ? 0.5 : 1.0) * taper(i, n_tau, opt.window_fraction);
    for (int j = 0; j < n_t; ++j) {
      const double wj = (j == 0 ? 0.5 : 1.0) * taper(j, n_t, opt.window_fraction);
      const int jr = j == 0 ? 0 : nt - j;
      buf[static_cast<std::size_t>(i) * nt + jr] =
          s_tau_t[static_cast<std::size_t>(i) * n_t + j] * (wi * wj);
    }
  }

  {
    fftw_plan plan;
    auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
    {
      std::lock_guard<std::mutex> lock(plan_mutex());
      plan = fftw_plan_dft_2d(ntau, nt, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("spectra: FFTW planning failed");
    fftw_execute(plan);
    {
      std::lock_guard<std::mutex> lock(plan_mutex());
      fftw_destroy_plan(plan);
    }
  }

  Spectrum2D sp;
  sp.w_tau_cm1 = shifted_axis(ntau, dtau_fs, opt.omega_ref_cm1);
  sp.w_t_cm1 = shifted_axis(nt, dt_fs, opt.omega_ref_cm1);
  sp.s.resize(buf.size());
  const double vol = dtau_fs * dt_fs;
  const int htau = ntau / 2, ht = nt / 2;
  for (int i = 0; i < ntau; ++i) {
    const int ki = (i - htau + ntau) % ntau;  // unshifted bin for shifted row i
    for (int j = 0; j < nt; ++j) {
      const int kj = (j - ht + nt) % nt;
      sp.s[static_cast<std::size_t>(i) * nt + j] =
          vol * buf[static_cast<std::size_t>(ki) * nt + kj];
    }
  }
  return sp;
}

std::vector<cplx> signal_slice_at_T(const response::Signal3& sig, const std::vector<cplx>& values,
                                    int iT) {
  const std::size_t ntau = sig.taus_fs.size(), nT = sig.Ts_fs.size(), nt = sig.ts_fs.size();
  if (values.size() != ntau * nT * nt)
    throw std::invalid_argument("spectra: values do not match the signal grid");
  if (iT < 0 || static_cast<std::size_t>(iT) >= nT)
    throw std::invalid_argument("spectra: waiting-time index out of range");
  std::vector<cplx> out(ntau * nt);
  for (std::size_t a = 0; a < ntau; ++a)
    for (std::size_t c = 0; c < nt; ++c) out[a * nt + c] = values[(a * nT + iT) * nt + c];
  return out;
}

Peak locate_peak(const Spectrum2D& sp, double w_tau_cm1, double w_t_cm1, double half_width_cm1) {
  Peak p;
  p.w_tau_cm1 = w_tau_cm1;
  p.w_t_cm1 = w_t_cm1;
  const int ntau = static_cast<int>(sp.w_tau_cm1.size());
  const int nt = static_cast<int>(sp.w_t_cm1.size());
  double best = -1;
  for (int i = 0; i < ntau; ++i) {
    if (std::abs(sp.w_tau_cm1[i] - w_tau_cm1) > half_width_cm1) continue;
    for (int j = 0; j < nt; ++j) {
      if (std::abs(sp.w_t_cm1[j] - w_t_cm1) > half_width_cm1) continue;
      const double mag = std::abs(sp.at(i, j));
      if (mag > best) {
        best = mag;
        p.snapped_w_tau_cm1 = sp.w_tau_cm1[i];
        p.snapped_w_t_cm1 = sp.w_t_cm1[j];
        p.value = sp.at(i, j);
        p.found = true;
      }
    }
  }
  return p;
}

OscillationMetrics oscillation_metrics(const std::vector<double>& T_fs,
                                       const std::vector<double>& values, double T_min_fs,
                                       double T_max_fs) {
  const WindowSlice w = slice(T_fs, values, T_min_fs, T_max_fs);
  const int n = static_cast<int>(w.x.size());
  if (n < 6) throw std::invalid_argument("spectra: oscillation window holds fewer than 6 samples");
  const double d = (w.x.back() - w.x.front()) / (n - 1);
  for (int i = 0; i + 1 < n; ++i)
    if (std::abs(w.x[i + 1] - w.x[i] - d) > 1e-6 * d)
      throw std::invalid_argument("spectra: oscillation metrics need a uniform waiting grid");

  OscillationMetrics m;
  for (double v : w.v) m.baseline += v;
  m.baseline /= n;

  const Fit fit = detrend_quadratic(w.x, w.v);
  m.amplitude = peak_to_peak(fit.residual);
  m.frequency_cm1 = prony_frequency_cm1(fit.residual, d);
  return m;
}

double amplitude_ratio(const std::vector<double>& T_fs, const std::vector<double>& values,
                       double a_fs, double b_fs, double c_fs, double d_fs) {
  const WindowSlice wa = slice(T_fs, values, a_fs, b_fs);
  const WindowSlice wc = slice(T_fs, values, c_fs, d_fs);
  if (wa.x.size() < 4 || wc.x.size() < 4)
    throw std::invalid_argument("spectra: amplitude windows hold fewer than 4 samples");
  const double num = peak_to_peak(detrend_quadratic(wa.x, wa.v).residual);
  const double den = peak_to_peak(detrend_quadratic(wc.x, wc.v).residual);
  return num / den;
}

}  // namespace heom2d::spectra
