// test_bath.cpp - spectral density, exponential decomposition, exact sum rules,
// and reconstruction against direct quadrature.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "heom2d/bath.hpp"
#include "heom2d/constants.hpp"
#include "support/oracles.hpp"

using namespace heom2d;
using bath::BathSpec;

namespace {

BathSpec reference_bath() {
  BathSpec b;
  b.drude_reorg_cm1 = 50.0;
  b.drude_relax_fs = 100.0;
  b.temperature_K = 300.0;
  b.modes = {{0, 800.0, 0.05, 1000.0}};
  return b;
}

}  // namespace

TEST_CASE("spectral density shape") {
  auto b = reference_bath();
  const double gt_d = 1.0 / (kTwoPiC * 100.0);
  const double gt_v = 1.0 / (kTwoPiC * 1000.0);
  CHECK(gt_d == doctest::Approx(53.088374589).epsilon(1e-9));

  // Odd function.
  CHECK(bath::spectral_density(b, -350.0) == doctest::Approx(-bath::spectral_density(b, 350.0)).epsilon(1e-13));

  // Sharp mode resonance: J(nu) ~ 2*lambda_v*nu/gt_v on top of the Drude background.
  const double drude_at_nu = 2.0 * 50.0 * gt_d * 800.0 / (800.0 * 800.0 + gt_d * gt_d);
  CHECK(bath::spectral_density(b, 800.0) ==
        doctest::Approx(2.0 * 40.0 * 800.0 / gt_v + drude_at_nu).epsilon(1e-9));
  CHECK(2.0 * 40.0 * 800.0 / gt_v == doctest::Approx(12055.3700).epsilon(1e-7));

  // Drude peak at gt_d: J = lambda_D.
  BathSpec d = b;
  d.modes.clear();
  CHECK(bath::spectral_density(d, gt_d) == doctest::Approx(50.0).epsilon(1e-12));

  // Total reorganization energy from quadrature.
  CHECK(oracle::reorganization_quadrature(b) == doctest::Approx(90.0).epsilon(1e-3));
}

TEST_CASE("decomposition term structure (merged Matsubara convention)") {
  auto b = reference_bath();

  auto e0 = bath::correlation_expansion(b, 0);
  CHECK(e0.terms.size() == 3);  // Drude + mode pole pair
  auto e2 = bath::correlation_expansion(b, 2);
  CHECK(e2.terms.size() == 5);

  BathSpec drude_only = b;
  drude_only.modes.clear();
  CHECK(bath::correlation_expansion(drude_only, 0).terms.size() == 1);
  CHECK(bath::correlation_expansion(drude_only, 3).terms.size() == 4);

  // Conjugate-pair bookkeeping: partner rate is the complex conjugate.
  for (size_t j = 0; j < e2.terms.size(); ++j) {
    const auto& t = e2.terms[j];
    const auto& p = e2.terms[t.partner];
    CHECK(std::abs(p.rate_fs - std::conj(t.rate_fs)) < 1e-15);
    CHECK(e2.terms[p.partner].partner == t.partner);
  }

  // First Matsubara frequency 2*pi/beta = 1310.1 cm^-1 at 300 K.
  const double nu1 = 2.0 * kPi / beta_cm(300.0);
  CHECK(nu1 == doctest::Approx(1310.1).epsilon(1e-4));
  CHECK(std::abs(e2.terms[3].rate_fs.imag()) < 1e-15);
  CHECK(e2.terms[3].rate_fs.real() == doctest::Approx(rad_per_fs(nu1)).epsilon(1e-12));
}

TEST_CASE("exact sum rules of the decomposition") {
  auto b = reference_bath();

  for (int K : {0, 2, 8}) {
    auto e = bath::correlation_expansion(b, K);

    // Short-time imaginary part: only the Drude pole survives at t -> 0+
    // (the mode's residue pair cancels there; its J falls off as w^-3).
    cplx csum = 0;
    for (const auto& t : e.terms) csum += t.c_cm2;
    const double gt_d = 1.0 / (kTwoPiC * 100.0);
    CHECK(csum.imag() == doctest::Approx(-50.0 * gt_d).epsilon(1e-10));

    // Reorganization sum rule: Int_0^inf Im C dt = -lambda_total/(2 pi c),
    // exact at every K because Matsubara amplitudes are real.
    cplx integral = 0;
    for (const auto& t : e.terms) integral += t.c_cm2 / t.rate_fs;
    CHECK(integral.imag() == doctest::Approx(-90.0 / kTwoPiC).epsilon(1e-12));
  }
}

TEST_CASE("mode contribution has the exact damped-sine imaginary part") {
  BathSpec b;
  b.drude_reorg_cm1 = 0.0;
  b.temperature_K = 300.0;
  b.modes = {{0, 800.0, 0.05, 1000.0}};
  auto e = bath::correlation_expansion(b, 3);

  const double gt = 1.0 / (kTwoPiC * 1000.0);
  const double zeta = std::sqrt(800.0 * 800.0 - gt * gt / 4.0);
  for (double t : {1.0, 10.0, 41.4, 250.0, 750.0}) {
    const double expect = -40.0 * 800.0 * 800.0 / zeta * std::exp(-rad_per_fs(gt) * t / 2.0) *
                          std::sin(rad_per_fs(zeta) * t);
    CHECK(bath::correlation_series(e, t).imag() == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("classical limit of the Drude amplitude") {
  BathSpec b;
  b.drude_reorg_cm1 = 50.0;
  b.drude_relax_fs = 100.0;
  b.temperature_K = 3000.0;
  auto e = bath::correlation_expansion(b, 0);
  const double classical = 2.0 * 50.0 / beta_cm(3000.0);
  CHECK(e.terms[0].c_cm2.real() == doctest::Approx(classical).epsilon(2e-3));
}

TEST_CASE("series reconstruction tracks the quadrature correlation function") {
  auto b = reference_bath();
  auto e = bath::correlation_expansion(b, 2);

  // The exact Drude Re C(t) has an integrable log feature at t -> 0 that no finite
  // exponential series reproduces pointwise; beyond ~4 fs, K=2 is inside 1%.
  double worst = 0;
  for (double t = 4.0; t <= 500.0; t += 4.0) {
    const cplx ref = oracle::correlation_quadrature(b, t);
    const cplx got = bath::correlation_series(e, t);
    worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
  }
  CHECK(worst < 0.01);

  // With a generous Matsubara count the short-time agreement tightens sharply
  // (the dropped tail at t = 4 fs falls from ~8e-4 relative at K=2 to ~1e-6 at K=8).
  auto e8 = bath::correlation_expansion(b, 8);
  const cplx ref = oracle::correlation_quadrature(b, 4.0);
  CHECK(std::abs(bath::correlation_series(e8, 4.0) - ref) / std::abs(ref) < 1e-4);
}

TEST_CASE("truncation residual and closure strength") {
  auto b = reference_bath();

  // Drude tail in closed form vs direct summation of the Matsubara series.
  BathSpec d = b;
  d.modes.clear();
  const double beta = beta_cm(300.0);
  const double gt = 1.0 / (kTwoPiC * 100.0);
  auto delta_numeric = [&](int K) {
    double s = 0;
    for (int k = K + 1; k <= 4000000; ++k) {
      const double nu_k = 2.0 * kPi * k / beta;
      s += 4.0 * 50.0 * gt / beta * nu_k / (nu_k * nu_k - gt * gt) / nu_k;
    }
    return s / kTwoPiC;
  };
  for (int K : {0, 2}) {
    const double closed = bath::correlation_expansion(d, K).delta_cm2fs;
    CHECK(closed == doctest::Approx(delta_numeric(K)).epsilon(1e-5));
  }

  // At 300 K the dropped memory is well under the 5% gate already at K=0.
  auto e0 = bath::correlation_expansion(b, 0);
  CHECK(e0.matsubara_ok);
  CHECK(e0.suggested_K == 0);
  CHECK(e0.residual_cm2fs < 0.05 * e0.kept_memory_cm2fs);
  CHECK(e0.residual_cm2fs > 0.0);

  // Colder bath demands more terms.
  BathSpec cold = b;
  cold.temperature_K = 30.0;
  auto ec = bath::correlation_expansion(cold, 0);
  CHECK(ec.suggested_K > 0);
}

TEST_CASE("parameter validation") {
  auto b = reference_bath();
  b.modes[0].damping_fs = 2.0;  // gt = 2654 > 2*nu: overdamped
  CHECK_THROWS_AS(bath::correlation_expansion(b, 0), std::invalid_argument);

  b = reference_bath();
  b.temperature_K = 0.0;
  CHECK_THROWS_AS(bath::correlation_expansion(b, 0), std::invalid_argument);

  b = reference_bath();
  CHECK_THROWS_AS(bath::correlation_expansion(b, -1), std::invalid_argument);
  CHECK_THROWS_AS(bath::correlation_series(bath::correlation_expansion(b, 0), -1.0),
                  std::invalid_argument);
}
