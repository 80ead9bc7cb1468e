// response.hpp - third-order rephasing response: pathway enumeration, HEOM response
// kernels on (t1,t2,t3) grids, pulse-envelope convolution, and the non-perturbative
// phase-cycled signal used for cross-validation.
#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "heom2d/heom.hpp"
#include "heom2d/pulses.hpp"

namespace heom2d::response {

enum class PathwayClass { gsb, se, esa, dqc };
const char* to_string(PathwayClass c);

// Ground-bleach pathways ride through ground-state populations during t2; everything
// else carries excited-state character.
inline bool ground_class(PathwayClass c) { return c == PathwayClass::gsb; }

struct Interaction {
  heom::Side side;
  heom::Part part;
};

// Time-ordered superoperator sequence; the slot holding the conjugated pulse is fixed
// by the sequence itself (exactly one slot is a ket-lower or bra-raise).
struct Shape {
  PathwayClass cls;
  std::array<Interaction, 3> ops;
  int conjugated_slot;
  cplx prefactor;  // i^3 per commutator, (-1) per bra-side interaction
  std::string name;
};

// One Liouville pathway of the rephasing experiment: shape plus the assignment of
// physical pulses (0 = conjugated) to time-ordered slots.
struct Diagram {
  int shape = 0;
  std::array<int, 3> pulse{0, 1, 2};
};

// All RWA-consistent shapes reachable on the manifold ladder (8 with a double
// manifold, 4 without), and the diagrams obtained by assigning pulses to slots.
std::vector<Shape> rephasing_shapes(bool has_double_manifold);
std::vector<Diagram> enumerate_diagrams(const std::vector<Shape>& shapes);

struct KernelGrid {
  double step_fs = 2.0;
  double t2_first_fs = 0.0;
  int n1 = 0, n2 = 0, n3 = 0;
  bool empty() const { return n1 == 0 || n2 == 0 || n3 == 0; }
  double t1(int i) const { return i * step_fs; }
  double t2(int i) const { return t2_first_fs + i * step_fs; }
  double t3(int i) const { return i * step_fs; }
};

struct ShapeKernel {
  KernelGrid grid;
  std::vector<cplx> r;  // [(i1*n2 + i2)*n3 + i3]
  const cplx& at(int i1, int i2, int i3) const {
    return r[(static_cast<std::size_t>(i1) * grid.n2 + i2) * grid.n3 + i3];
  }
};

struct KernelSet {
  std::vector<Shape> shapes;
  std::vector<ShapeKernel> kernels;  // parallel to shapes; empty grid = not computed
  double omega_ref_cm1 = 0;
  double dt_fs = 0.25;
};

// Requested experimental grid; support_fs is the half-width of the pulse overlap
// window (rounded outward to the kernel lattice).
struct ScanGrid {
  std::vector<double> taus_fs, Ts_fs, ts_fs;
  double support_fs = 16.0;
};

// Interval-arithmetic feasibility: the (t1,t2,t3) boxes each shape must cover for the
// given diagrams over the scan; infeasible shapes get an empty grid.
std::vector<KernelGrid> plan_kernel_grids(const std::vector<Shape>& shapes,
                                          const std::vector<Diagram>& diagrams,
                                          const ScanGrid& scan, double step_fs);

struct KernelOptions {
  double step_fs = 2.0;
  double dt_fs = 0.25;
  int workers = 1;
  std::function<void(const std::string&)> log;
};

// HEOM kernels from a ground-state start. The t3 axis is collapsed by propagating two
// window states per shape family against the transposed generator, which agrees with
// the forward kernels to RK4 roundoff.
KernelSet compute_kernels(const heom::Hierarchy& h, const std::vector<Shape>& shapes,
                          const std::vector<KernelGrid>& grids, const KernelOptions& opt);

// Per-class and total signals on the scan grid.
struct Signal3 {
  std::vector<double> taus_fs, Ts_fs, ts_fs;
  std::map<PathwayClass, std::vector<cplx>> by_class;  // [(itau*nT + iT)*nt + it]
  std::vector<cplx> total;
  std::size_t idx(int itau, int iT, int it) const {
    return (static_cast<std::size_t>(itau) * Ts_fs.size() + iT) * ts_fs.size() + it;
  }
};

// Triple lattice convolution of kernels with pulse envelopes (trapezoid weights,
// simplex-boundary halving). Throws std::runtime_error("kernel coverage ...") if a
// needed kernel sample is missing.
Signal3 convolve(const KernelSet& ks, const std::vector<Diagram>& diagrams,
                 const std::array<pulses::Pulse, 3>& base, const ScanGrid& scan,
                 int workers = 1);

// Impulsive limit: kernel samples relabelled as the signal (tau,T,t) = (t1,t2,t3),
// summed per class over diagrams with the canonical pulse order.
Signal3 impulsive_signal(const KernelSet& ks, const ScanGrid& scan);

// Non-perturbative rephasing extraction: propagate the driven HEOM over an
// (n1 x n2 x n3) phase cycle and project onto the -phi1+phi2+phi3 component.
struct PhaseCycle {
  std::array<int, 3> counts{4, 3, 3};
};

std::vector<cplx> phase_cycled_signal(const heom::Hierarchy& h,
                                      const std::array<pulses::Pulse, 3>& base,
                                      const ScanGrid& scan, const PhaseCycle& pc, double dt_fs,
                                      int workers = 1,
                                      const std::function<void(const std::string&)>& log = {});

}  // namespace heom2d::response
