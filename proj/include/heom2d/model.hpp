// model.hpp - Frenkel exciton aggregate: manifold-blocked Hamiltonian, transition dipoles,
// site-projector couplings, and the optional explicit-vibration (vibronic) basis.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "heom2d/constants.hpp"

namespace heom2d::model {

// One intramolecular vibration. site is a 0-based index; expansion of "all sites"
// shorthand happens at config load, so here site must be concrete.
struct Mode {
  int site = 0;
  double freq_cm1 = 0;
  double huang_rhys = 0;
  double damping_fs = 0;
  double reorg_cm1() const { return huang_rhys * freq_cm1; }
};

struct AggregateParams {
  std::vector<double> site_energies_cm1;
  Eigen::MatrixXd coupling_cm1;  // symmetric, zero diagonal
  std::vector<double> dipoles;   // scalar strengths (fixed lab orientation)
  std::vector<Mode> modes;
  int n_sites() const { return static_cast<int>(site_energies_cm1.size()); }
};

// Throws std::invalid_argument with a field-specific message.
void validate(const AggregateParams& p);

// Operators blocked by excitation manifold m = 0,1,...; block m of an operator
// raising the excitation number maps manifold m to m+1. Energies in cm^-1.
struct SystemOps {
  std::vector<int> dims;
  std::vector<Eigen::MatrixXcd> h;                      // [m]: dims[m] x dims[m]
  std::vector<Eigen::MatrixXcd> dip_up;                 // [m]: dims[m+1] x dims[m]
  std::vector<std::vector<Eigen::VectorXd>> coupling;   // [site][m]: diagonal of the site projector
  int n_sites = 0;

  int n_manifolds() const { return static_cast<int>(dims.size()); }
  int dim_total() const;
  std::vector<int> offsets() const;  // manifold start in the stacked basis

  // Stacked operators on the full space. omega_ref_cm1 subtracts m*omega_ref from
  // manifold m (rotating frame).
  Eigen::MatrixXcd h_full(double omega_ref_cm1 = 0) const;
  Eigen::MatrixXcd dip_up_full() const;
  Eigen::VectorXd coupling_full(int site) const;
};

// Purely electronic ground/single/double manifolds. Double-excitation energies are
// additive (no exciton-exciton shift); a monomer gets an empty double manifold.
SystemOps electronic_system(const AggregateParams& p);

// Electronic manifolds tensored with explicit harmonic modes truncated at
// n_max quanta each; linear (Huang-Rhys) coupling on the mode's site, Condon dipoles.
SystemOps vibronic_system(const AggregateParams& p, int n_max);

struct Eigensystem {
  Eigen::VectorXd values;   // ascending, cm^-1
  Eigen::MatrixXcd vectors; // columns
};

Eigensystem diagonalize_manifold(const SystemOps& sys, int manifold);

// Transition dipole magnitudes |<manifold-1 eigenstate j | mu | ground>|... generalized:
// dipoles from eigenstates of manifold m to eigenstates of manifold m+1.
Eigen::MatrixXd eigenbasis_dipoles(const SystemOps& sys, int manifold_from);

}  // namespace heom2d::model
