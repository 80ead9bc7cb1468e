// bath.cpp - contour-integral exponential decomposition of the bath correlation function.
//
// C(t>0) = (1/pi) * Int dω J(ω) (n_B(ω)+1) e^{-iωt} closed in the lower half plane:
// the Drude pole at -i*gt gives lambda*gt*(cot(beta*gt/2) - i); each underdamped mode
// contributes the residue pair at ±zeta - i*gt/2; the Bose poles at -i*nu_k give the
// Matsubara series, merged across bath components at each shared rate.
#include "heom2d/bath.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace heom2d::bath {

namespace {

void fail(const std::string& msg) { throw std::invalid_argument("bath: " + msg); }

// Bose function at complex argument (cm^-1), beta in cm.
cplx bose(cplx omega_cm1, double beta) {
  return 1.0 / (std::exp(beta * omega_cm1) - 1.0);
}

void check(const BathSpec& b) {
  if (b.drude_reorg_cm1 < 0) fail("Drude reorganization energy must be non-negative");
  if (b.drude_reorg_cm1 > 0 && b.drude_relax_fs <= 0) fail("Drude relaxation time must be positive");
  if (b.temperature_K <= 0) fail("temperature must be positive");
  for (const auto& m : b.modes) {
    if (m.freq_cm1 <= 0 || m.damping_fs <= 0 || m.huang_rhys < 0) fail("invalid mode parameters");
    const double gt = 1.0 / (kTwoPiC * m.damping_fs);
    if (m.freq_cm1 <= gt / 2)
      fail("mode at " + std::to_string(m.freq_cm1) + " cm^-1 is not underdamped");
  }
}

// Sum_{k>=1} 1/(k^2 - a^2) = (1 - pi*a*cot(pi*a)) / (2 a^2), the closed form behind
// the exact Drude Matsubara tail.
double inverse_square_sum(double a) {
  if (a == 0) return kPi * kPi / 6.0;
  const double pa = kPi * a;
  return (1.0 - pa / std::tan(pa)) / (2.0 * a * a);
}

double drude_matsubara_c(const BathSpec& b, double gt, double beta, double nu_k) {
  return 4.0 * b.drude_reorg_cm1 * gt / beta * nu_k / (nu_k * nu_k - gt * gt);
}

double mode_matsubara_c(const model::Mode& m, double beta, double nu_k) {
  const double gt = 1.0 / (kTwoPiC * m.damping_fs);
  const double nu2 = m.freq_cm1 * m.freq_cm1;
  const double den = (nu2 + nu_k * nu_k) * (nu2 + nu_k * nu_k) - gt * gt * nu_k * nu_k;
  return -4.0 * m.reorg_cm1() * nu2 * gt / beta * nu_k / den;
}

// Signed integral of the dropped Matsubara remainder, sum_{k>K} c_k/nu_k / (2 pi c),
// in cm^-2 fs. Drude part in closed form; mode parts decay as k^-5 and are summed.
double tail_integral(const BathSpec& b, double beta, int K) {
  double acc = 0;  // sum_k c_k/nu_k in cm^-1; divided by 2*pi*c below to give cm^-2 fs
  if (b.drude_reorg_cm1 > 0) {
    const double gt = 1.0 / (kTwoPiC * b.drude_relax_fs);
    const double a = beta * gt / (2.0 * kPi);
    double full = 4.0 * b.drude_reorg_cm1 * gt / beta * (beta / (2.0 * kPi)) * (beta / (2.0 * kPi)) *
                  inverse_square_sum(a);
    for (int k = 1; k <= K; ++k) {
      const double nu_k = 2.0 * kPi * k / beta;
      full -= drude_matsubara_c(b, gt, beta, nu_k) / nu_k;
    }
    acc += full;
  }
  for (const auto& m : b.modes) {
    double s = 0;
    for (int k = K + 1; k <= K + 200000; ++k) {
      const double nu_k = 2.0 * kPi * k / beta;
      const double term = mode_matsubara_c(m, beta, nu_k) / nu_k;
      s += term;
      if (std::abs(term) < 1e-18 * (std::abs(s) + 1e-300)) break;
    }
    acc += s;
  }
  return acc / kTwoPiC;
}

}  // namespace

double spectral_density(const BathSpec& b, double w) {
  check(b);
  double j = 0;
  if (b.drude_reorg_cm1 > 0) {
    const double gt = 1.0 / (kTwoPiC * b.drude_relax_fs);
    j += 2.0 * b.drude_reorg_cm1 * gt * w / (w * w + gt * gt);
  }
  for (const auto& m : b.modes) {
    const double gt = 1.0 / (kTwoPiC * m.damping_fs);
    const double nu2 = m.freq_cm1 * m.freq_cm1;
    const double den = (w * w - nu2) * (w * w - nu2) + gt * gt * w * w;
    j += 2.0 * m.reorg_cm1() * nu2 * gt * w / den;
  }
  return j;
}

CorrelationExpansion correlation_expansion(const BathSpec& b, int K) {
  check(b);
  if (K < 0) fail("Matsubara count must be non-negative");
  const double beta = beta_cm(b.temperature_K);

  CorrelationExpansion e;
  e.beta_cm = beta;
  e.n_matsubara = K;

  if (b.drude_reorg_cm1 > 0) {
    const double gt = 1.0 / (kTwoPiC * b.drude_relax_fs);
    const double a = beta * gt / (2.0 * kPi);
    if (std::abs(a - std::round(a)) < 1e-9 && std::round(a) > 0)
      fail("Drude rate degenerate with a Matsubara frequency at this temperature");
    const double cot = 1.0 / std::tan(beta * gt / 2.0);
    e.terms.push_back({b.drude_reorg_cm1 * gt * cplx(cot, -1.0), cplx(1.0 / b.drude_relax_fs, 0.0),
                       static_cast<int>(e.terms.size())});
  }
  for (const auto& m : b.modes) {
    const double gt = 1.0 / (kTwoPiC * m.damping_fs);
    const double zeta = std::sqrt(m.freq_cm1 * m.freq_cm1 - gt * gt / 4.0);
    const double pref = m.reorg_cm1() * m.freq_cm1 * m.freq_cm1 / zeta;
    const cplx w1{zeta, -gt / 2.0};
    const cplx w2{-zeta, -gt / 2.0};
    const int i0 = static_cast<int>(e.terms.size());
    e.terms.push_back({pref * (bose(w1, beta) + 1.0), rad_per_fs(gt) / 2.0 + kI * rad_per_fs(zeta), i0 + 1});
    e.terms.push_back({-pref * (bose(w2, beta) + 1.0), rad_per_fs(gt) / 2.0 - kI * rad_per_fs(zeta), i0});
  }
  for (int k = 1; k <= K; ++k) {
    const double nu_k = 2.0 * kPi * k / beta;
    double c = 0;
    if (b.drude_reorg_cm1 > 0) c += drude_matsubara_c(b, 1.0 / (kTwoPiC * b.drude_relax_fs), beta, nu_k);
    for (const auto& m : b.modes) c += mode_matsubara_c(m, beta, nu_k);
    e.terms.push_back({cplx(c, 0.0), cplx(rad_per_fs(nu_k), 0.0), static_cast<int>(e.terms.size())});
  }

  e.delta_cm2fs = tail_integral(b, beta, K);
  for (const auto& t : e.terms) e.kept_memory_cm2fs += std::abs(t.c_cm2 / t.rate_fs);
  e.residual_cm2fs = std::abs(e.delta_cm2fs);
  e.matsubara_ok = e.residual_cm2fs <= 0.05 * e.kept_memory_cm2fs;
  int k = 0;
  double kept = e.kept_memory_cm2fs;
  for (; k <= 64; ++k) {
    const double r = std::abs(tail_integral(b, beta, k));
    if (r <= 0.05 * kept) break;
  }
  e.suggested_K = k;
  return e;
}

cplx correlation_series(const CorrelationExpansion& e, double t_fs) {
  if (t_fs < 0) throw std::invalid_argument("bath: correlation_series is defined for t >= 0");
  cplx c = 0;
  for (const auto& t : e.terms) c += t.c_cm2 * std::exp(-t.rate_fs * t_fs);
  return c;
}

}  // namespace heom2d::bath
