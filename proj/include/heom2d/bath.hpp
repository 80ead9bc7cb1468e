// bath.hpp - harmonic environment per site: Drude-Lorentz background plus damped
// (underdamped Brownian) intramolecular modes, and the matching exponential expansion
// of the finite-temperature correlation function.
#pragma once

#include <vector>

#include "heom2d/constants.hpp"
#include "heom2d/model.hpp"

namespace heom2d::bath {

// One site's environment. Mode entries must belong to this site conceptually;
// the site index inside model::Mode is not consulted here.
struct BathSpec {
  double drude_reorg_cm1 = 0;
  double drude_relax_fs = 0;
  double temperature_K = 0;
  std::vector<model::Mode> modes;
};

// Spectral density J(omega) in cm^-1 for omega in cm^-1; odd in omega.
double spectral_density(const BathSpec& b, double omega_cm1);

// One exponential of C(t>=0) = sum_j c_j exp(-rate_j t):
// amplitude in cm^-2, rate in fs^-1 (complex; Re > 0). partner points to the term
// whose rate is the complex conjugate, so C(-t) = conj(C(t)) is representable
// term by term; self-conjugate (real-rate) terms point to themselves.
struct ExpTerm {
  cplx c_cm2;
  cplx rate_fs;
  int partner;
};

struct CorrelationExpansion {
  std::vector<ExpTerm> terms;  // principal (Drude + mode pairs) first, then Matsubara
  int n_matsubara = 0;
  double beta_cm = 0;

  // Integral of the truncated Matsubara remainder, sum_{k>K} c_k / rate_k, in
  // cm^-2 fs. Feeds the Markovian closure of the hierarchy.
  double delta_cm2fs = 0;

  // Diagnostics: integrated memory kept vs dropped. The dropped fraction decides
  // matsubara_ok; suggested_K is the smallest count meeting the 5% gate.
  double kept_memory_cm2fs = 0;
  double residual_cm2fs = 0;
  bool matsubara_ok = true;
  int suggested_K = 0;
};

// Exponential decomposition with K Matsubara terms (poles of coth at 2*pi*k/beta,
// merged across the Drude and mode contributions at each shared rate).
CorrelationExpansion correlation_expansion(const BathSpec& b, int K);

// Evaluate the truncated series at t >= 0 fs, in cm^-2.
cplx correlation_series(const CorrelationExpansion& e, double t_fs);

}  // namespace heom2d::bath
