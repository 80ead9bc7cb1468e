// test_pulses.cpp - Gaussian pulse invariants: FWHM conventions, spectral width,
// envelope-locked carrier phase, and the pulse-area theorem on a driven two-level system.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "heom2d/constants.hpp"
#include "heom2d/heom.hpp"
#include "heom2d/model.hpp"
#include "heom2d/pulses.hpp"
#include "support/oracles.hpp"

using namespace heom2d;

namespace {

model::SystemOps two_level(double e_cm1) {
  model::AggregateParams p;
  p.site_energies_cm1 = {e_cm1};
  p.coupling_cm1 = Eigen::MatrixXd::Zero(1, 1);
  p.dipoles = {1.0};
  return model::electronic_system(p);
}

// Full-space propagation of |g><g| through one resonant-frame pulse; returns the
// excited-state population after the field has passed.
double driven_excited_population(const pulses::Pulse& p, double omega_ref_cm1) {
  const model::SystemOps sys = two_level(omega_ref_cm1);
  const heom::Hierarchy h(sys, {bath::CorrelationExpansion{}},
                          heom::HierarchyOptions{1, omega_ref_cm1});
  heom::BlockGenerator gen(h, heom::Block{});
  const Eigen::MatrixXcd up = sys.dip_up_full();
  const Eigen::MatrixXcd dn = up.adjoint();
  gen.set_drive([&](double t, Eigen::MatrixXcd& hint) {
    const cplx fp = p.positive_field(t, omega_ref_cm1);
    hint.noalias() = -(fp * up + std::conj(fp) * dn);
  });
  const double span = 5.0 * p.sigma_fs();
  const double dt = 0.05;
  const int n = static_cast<int>(std::ceil(2.0 * span / dt));
  std::vector<cplx> x(4, cplx(0));
  x[0] = 1.0;
  gen.propagate(p.center_fs - span, dt, n, x.data());
  return x[3].real();  // element (e,e)
}

}  // namespace

TEST_CASE("duration is the intensity FWHM of the envelope") {
  pulses::Pulse p;
  p.fwhm_fs = 10.0;
  p.amplitude_cm1 = 3.0;
  const double half = p.envelope(p.center_fs + 5.0);
  CHECK(half * half == doctest::Approx(0.5 * 9.0).epsilon(1e-12));
  CHECK(p.sigma_fs() == doctest::Approx(10.0 / (2.0 * std::sqrt(std::log(2.0)))).epsilon(1e-15));
  CHECK(p.envelope(p.center_fs) == doctest::Approx(3.0));
}

TEST_CASE("spectral intensity FWHM matches the numeric Fourier transform") {
  pulses::Pulse p;
  p.fwhm_fs = 10.0;
  p.amplitude_cm1 = 1.0;
  // 10 fs intensity FWHM <-> 4 ln2 / (2 pi c * 10 fs) = 1471.9 cm^-1.
  CHECK(p.spectral_fwhm_cm1() == doctest::Approx(1471.92).epsilon(1e-4));

  const double span = 8.0 * p.sigma_fs();
  auto amp_at = [&](double w_cm1) {
    auto re = [&](double t) { return p.envelope(t) * std::cos(kTwoPiC * w_cm1 * t); };
    return oracle::simpson(re, -span, span, 4000);
  };
  const double a0 = amp_at(0.0);
  const double ah = amp_at(0.5 * p.spectral_fwhm_cm1());
  CHECK(ah * ah / (a0 * a0) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("carrier phase is locked to the envelope center") {
  pulses::Pulse p;
  p.fwhm_fs = 12.0;
  p.carrier_cm1 = 17500.0;
  p.center_fs = 0.0;
  const cplx at_center = p.positive_field(0.0, 17000.0);
  CHECK(std::arg(at_center) == doctest::Approx(0.0).epsilon(1e-12));
  p.center_fs = 37.5;  // moving the pulse must not rotate its phase
  CHECK(std::arg(p.positive_field(37.5, 17000.0)) == doctest::Approx(0.0).epsilon(1e-12));
  // One fs after the center the phase advances by minus the detuning.
  const double det = kTwoPiC * 500.0;
  CHECK(std::arg(p.positive_field(38.5, 17000.0)) == doctest::Approx(-det).epsilon(1e-9));
}

TEST_CASE("area formula integrates the Rabi rate") {
  pulses::Pulse p;
  p.fwhm_fs = 10.0;
  p.amplitude_cm1 = 7.0;
  const double span = 8.0 * p.sigma_fs();
  auto rabi = [&](double t) { return 2.0 * kTwoPiC * p.envelope(t); };
  const double numeric = oracle::simpson(rabi, -span, span, 4000);
  CHECK(p.area_rad() == doctest::Approx(numeric).epsilon(1e-10));
}

TEST_CASE("pi pulse inverts a resonant two-level system") {
  pulses::Pulse p;
  p.fwhm_fs = 10.0;
  p.carrier_cm1 = 17400.0;
  p.center_fs = 0.0;
  p.amplitude_cm1 = kPi / (2.0 * kTwoPiC * p.sigma_fs() * std::sqrt(2.0 * kPi));
  CHECK(p.area_rad() == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(driven_excited_population(p, 17400.0) == doctest::Approx(1.0).epsilon(1e-4));

  p.amplitude_cm1 *= 0.5;  // pi/2: half inversion
  CHECK(driven_excited_population(p, 17400.0) == doctest::Approx(0.5).epsilon(2e-4));

  p.amplitude_cm1 *= 2.0;  // detuned pi pulse: incomplete inversion
  p.carrier_cm1 = 17900.0;
  CHECK(driven_excited_population(p, 17400.0) < 0.9);
}

TEST_CASE("sequence places centers at 0, tau, tau plus T") {
  pulses::Pulse base;
  base.fwhm_fs = 10.0;
  const pulses::Sequence s =
      pulses::Sequence::delays({base, base, base}, 35.0, 210.0, 17400.0);
  CHECK(s.p[0].center_fs == 0.0);
  CHECK(s.p[1].center_fs == 35.0);
  CHECK(s.p[2].center_fs == 245.0);
  CHECK(s.omega_ref_cm1 == 17400.0);
}
