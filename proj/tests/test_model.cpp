// test_model.cpp - aggregate Hamiltonian assembly, exciton structure, vibronic basis.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "heom2d/constants.hpp"
#include "heom2d/model.hpp"

using namespace heom2d;
using model::AggregateParams;
using model::Mode;

namespace {

AggregateParams dimer() {
  AggregateParams p;
  p.site_energies_cm1 = {17050.0, 17750.0};
  p.coupling_cm1 = Eigen::MatrixXd::Zero(2, 2);
  p.coupling_cm1(0, 1) = p.coupling_cm1(1, 0) = 200.0;
  p.dipoles = {1.0, 1.0};
  return p;
}

}  // namespace

TEST_CASE("manifold dimensions") {
  auto p = dimer();
  auto sys = model::electronic_system(p);
  CHECK(sys.dims == std::vector<int>{1, 2, 1});

  p.site_energies_cm1 = {17050.0, 17750.0, 17400.0};
  p.coupling_cm1 = Eigen::MatrixXd::Zero(3, 3);
  p.dipoles = {1.0, 1.0, 1.0};
  CHECK(model::electronic_system(p).dims == std::vector<int>{1, 3, 3});

  p.site_energies_cm1 = {17400.0};
  p.coupling_cm1 = Eigen::MatrixXd::Zero(1, 1);
  p.dipoles = {1.0};
  auto mono = model::electronic_system(p);
  CHECK(mono.dims == std::vector<int>{1, 1, 0});
  CHECK(model::diagonalize_manifold(mono, 2).values.size() == 0);
}

TEST_CASE("dimer exciton energies and mixing angle") {
  auto sys = model::electronic_system(dimer());
  auto es = model::diagonalize_manifold(sys, 1);

  const double split = std::sqrt(700.0 * 700.0 + 4.0 * 200.0 * 200.0);
  CHECK(split == doctest::Approx(806.2257748298549).epsilon(1e-12));
  CHECK(es.values(0) == doctest::Approx(17400.0 - split / 2).epsilon(1e-12));
  CHECK(es.values(1) == doctest::Approx(17400.0 + split / 2).epsilon(1e-12));

  // Lower exciton is mostly the lower-energy site: weight cos^2(theta),
  // theta = atan2(2J, dE)/2.
  const double theta = 0.5 * std::atan2(400.0, 700.0);
  CHECK(theta == doctest::Approx(0.25957305712326146).epsilon(1e-14));
  CHECK(std::abs(es.vectors(0, 0)) == doctest::Approx(std::cos(theta)).epsilon(1e-12));
  CHECK(std::abs(es.vectors(1, 0)) == doctest::Approx(std::sin(theta)).epsilon(1e-12));
}

TEST_CASE("exciton transition dipoles") {
  const double theta = 0.5 * std::atan2(400.0, 700.0);

  SUBCASE("equal site dipoles: upper exciton is the bright one for J > 0") {
    auto d = model::eigenbasis_dipoles(model::electronic_system(dimer()), 0);
    CHECK(d(0, 0) == doctest::Approx(std::cos(theta) - std::sin(theta)).epsilon(1e-12));
    CHECK(d(1, 0) == doctest::Approx(std::cos(theta) + std::sin(theta)).epsilon(1e-12));
    CHECK(d(1, 0) == doctest::Approx(1.2231676).epsilon(1e-6));
    CHECK(d(0, 0) == doctest::Approx(0.7098318).epsilon(1e-6));
  }

  SUBCASE("J < 0 swaps the bright state") {
    auto p = dimer();
    p.coupling_cm1(0, 1) = p.coupling_cm1(1, 0) = -200.0;
    auto d = model::eigenbasis_dipoles(model::electronic_system(p), 0);
    CHECK(d(0, 0) > d(1, 0));
  }

  SUBCASE("anti-parallel dipoles on a symmetric dimer give one dark state") {
    auto p = dimer();
    p.site_energies_cm1 = {17400.0, 17400.0};
    p.dipoles = {1.0, -1.0};
    auto d = model::eigenbasis_dipoles(model::electronic_system(p), 0);
    // Antisymmetric combination at 17200 carries everything.
    CHECK(d(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(d(1, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  }
}

TEST_CASE("double-excitation manifold") {
  auto p = dimer();
  p.dipoles = {1.0, 0.7};
  auto sys = model::electronic_system(p);
  CHECK(sys.h[2](0, 0).real() == doctest::Approx(17050.0 + 17750.0));
  // |f> couples to the singles with the partner site's dipole.
  CHECK(sys.dip_up[1](0, 0).real() == doctest::Approx(0.7));
  CHECK(sys.dip_up[1](0, 1).real() == doctest::Approx(1.0));

  SUBCASE("trimer pair couplings move the unshared excitation") {
    AggregateParams t;
    t.site_energies_cm1 = {17000.0, 17300.0, 17600.0};
    t.coupling_cm1 = Eigen::MatrixXd::Zero(3, 3);
    t.coupling_cm1(0, 1) = t.coupling_cm1(1, 0) = 100.0;
    t.coupling_cm1(0, 2) = t.coupling_cm1(2, 0) = 50.0;
    t.coupling_cm1(1, 2) = t.coupling_cm1(2, 1) = 25.0;
    t.dipoles = {1.0, 1.0, 1.0};
    auto s3 = model::electronic_system(t);
    // Pair basis (01),(02),(12).
    CHECK(s3.h[2](0, 1).real() == doctest::Approx(25.0));   // (01)->(02): moves 1->2 via J_12
    CHECK(s3.h[2](0, 2).real() == doctest::Approx(50.0));   // (01)->(12): moves 0->2 via J_02
    CHECK(s3.h[2](1, 2).real() == doctest::Approx(100.0));  // (02)->(12): moves 0->1 via J_01
    CHECK(s3.h[2](0, 0).real() == doctest::Approx(34300.0));
  }
}

TEST_CASE("site-projector couplings") {
  auto sys = model::electronic_system(dimer());
  CHECK(sys.coupling[0][0](0) == 0.0);
  CHECK(sys.coupling[0][1](0) == 1.0);
  CHECK(sys.coupling[0][1](1) == 0.0);
  CHECK(sys.coupling[0][2](0) == 1.0);  // double exc. contains site 0 once
  CHECK(sys.coupling[1][2](0) == 1.0);
}

TEST_CASE("thermal exciton population ratio at 300 K") {
  auto sys = model::electronic_system(dimer());
  auto es = model::diagonalize_manifold(sys, 1);
  const double kT = kBoltzmann * 300.0;
  CHECK(kT == doctest::Approx(208.51044).epsilon(1e-12));
  const double ratio = std::exp(-(es.values(1) - es.values(0)) / kT);
  CHECK(ratio == doctest::Approx(0.020929).epsilon(1e-3));
}

TEST_CASE("vibronic monomer reproduces the displaced oscillator") {
  AggregateParams p;
  p.site_energies_cm1 = {17400.0};
  p.coupling_cm1 = Eigen::MatrixXd::Zero(1, 1);
  p.dipoles = {1.0};
  p.modes = {{0, 800.0, 0.05, 1000.0}};
  auto sys = model::vibronic_system(p, 8);
  CHECK(sys.dims == std::vector<int>{9, 9, 0});

  // Ground manifold: bare harmonic ladder.
  auto g = model::diagonalize_manifold(sys, 0);
  CHECK(g.values(0) == doctest::Approx(0.0).scale(1e4).epsilon(1e-12));
  CHECK(g.values(1) == doctest::Approx(800.0).epsilon(1e-12));

  // Excited manifold: E - S*nu + n*nu, exact up to n_max truncation (tiny at S=0.05).
  auto e = model::diagonalize_manifold(sys, 1);
  for (int n = 0; n < 3; ++n)
    CHECK(e.values(n) == doctest::Approx(17400.0 - 0.05 * 800.0 + n * 800.0).epsilon(1e-9));

  // Franck-Condon 0-0 intensity e^{-S/2}: |<e,0|mu|g,0>| = exp(-S/2).
  auto d = model::eigenbasis_dipoles(sys, 0);
  CHECK(d(0, 0) == doctest::Approx(std::exp(-0.025)).epsilon(1e-8));
}

TEST_CASE("vibronic dimer block matches an independently assembled Hamiltonian") {
  auto p = dimer();
  p.modes = {{0, 800.0, 0.05, 1000.0}};
  const int nmax = 1;
  auto sys = model::vibronic_system(p, nmax);
  CHECK(sys.dims == std::vector<int>{2, 4, 2});

  // Hand-built one-exciton block, basis |site, v>: (1,0),(1,1),(2,0),(2,1) ordered
  // as site-major to match the library convention.
  const double gq = std::sqrt(0.05) * 800.0;
  Eigen::MatrixXcd h(4, 4);
  h.setZero();
  h(0, 0) = 17050.0;        h(1, 1) = 17050.0 + 800.0;
  h(2, 2) = 17750.0;        h(3, 3) = 17750.0 + 800.0;
  h(0, 2) = h(2, 0) = 200.0; h(1, 3) = h(3, 1) = 200.0;
  h(0, 1) = h(1, 0) = gq;   // mode sits on site 1 only
  CHECK((sys.h[1] - h).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("vibronic exciton splittings near the mode resonance") {
  // Near-degeneracy of |lower exciton, v=1> and |upper exciton, v=0>:
  // delta = 6.23 cm^-1, per-exciton vibronic coupling g = sqrt(S)*nu*sin*cos = 44.38.
  auto p = dimer();

  SUBCASE("mode on one site: gap ~ sqrt(delta^2 + 4 g^2) ~ 89") {
    p.modes = {{0, 800.0, 0.05, 1000.0}};
    auto e = model::diagonalize_manifold(model::vibronic_system(p, 6), 1);
    const double gap = e.values(2) - e.values(1);
    CHECK(gap > 84.0);
    CHECK(gap < 94.0);
  }

  SUBCASE("modes on both sites: gap enhanced by sqrt(2) to ~ 126") {
    p.modes = {{0, 800.0, 0.05, 1000.0}, {1, 800.0, 0.05, 1000.0}};
    auto e = model::diagonalize_manifold(model::vibronic_system(p, 4), 1);
    // The antisymmetric one-quantum combination decouples and sits between the two
    // split vibronic excitons, so the bright-bright gap is values(3) - values(1).
    const double gap = e.values(3) - e.values(1);
    const double mid = e.values(2) - e.values(1);
    CHECK(gap > 119.0);
    CHECK(gap < 132.0);
    CHECK(mid > 0.25 * gap);  // dark state near the middle of the split pair
    CHECK(mid < 0.75 * gap);
  }
}

TEST_CASE("parameter validation") {
  auto p = dimer();
  p.coupling_cm1(0, 1) = 150.0;  // asymmetric
  CHECK_THROWS_AS(model::electronic_system(p), std::invalid_argument);

  p = dimer();
  p.site_energies_cm1[0] = -5.0;
  CHECK_THROWS_AS(model::electronic_system(p), std::invalid_argument);

  p = dimer();
  p.dipoles = {1.0};
  CHECK_THROWS_AS(model::electronic_system(p), std::invalid_argument);

  p = dimer();
  p.modes = {{5, 800.0, 0.05, 1000.0}};
  CHECK_THROWS_AS(model::vibronic_system(p, 2), std::invalid_argument);
}
