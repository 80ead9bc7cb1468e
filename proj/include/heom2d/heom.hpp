// heom.hpp - hierarchical equations of motion with amplitude-scaled auxiliary density
// operators (ADOs), triangular truncation, and a Markovian closure for the dropped
// Matsubara tail. States are blocked by (ket manifold, bra manifold): field-free
// evolution never mixes blocks, so most propagations carry 1-4 complex numbers per ADO
// instead of the full density matrix.
#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "heom2d/bath.hpp"
#include "heom2d/constants.hpp"
#include "heom2d/model.hpp"

namespace heom2d::heom {

struct HierarchyOptions {
  int depth = 5;
  double omega_ref_cm1 = 0;  // manifold m is shifted by -m*omega_ref (rotating frame)
};

// Number of ADOs for M exponential terms at triangular depth L: C(M+L, L).
std::size_t ado_count(int n_terms, int depth);

// Index tables for the coupled ADO lattice. Internal units: rad/fs for energies and
// rates, rad^2/fs^2 for correlation amplitudes; conversion from the cm^-1 bath
// expansion happens once, here.
class Hierarchy {
 public:
  // One expansion per site (size must equal sys.n_sites).
  Hierarchy(const model::SystemOps& sys, const std::vector<bath::CorrelationExpansion>& site_exp,
            const HierarchyOptions& opt);

  const model::SystemOps& sys() const { return *sys_; }
  int depth() const { return depth_; }
  int n_terms() const { return n_terms_; }
  std::size_t n_ados() const { return n_ados_; }
  double omega_ref_cm1() const { return omega_ref_; }

  int term_site(int j) const { return term_site_[j]; }
  cplx term_c(int j) const { return c_[j]; }       // rad^2/fs^2
  cplx term_d(int j) const { return d_[j]; }       // conj-partner amplitude
  cplx term_rate(int j) const { return rate_[j]; } // fs^-1
  double site_delta(int s) const { return delta_[s]; }  // rad/fs

  const std::uint8_t* occupation(std::size_t a) const { return occ_.data() + a * n_terms_; }
  std::int32_t up(std::size_t a, int j) const { return up_[a * n_terms_ + j]; }
  std::int32_t down(std::size_t a, int j) const { return down_[a * n_terms_ + j]; }
  cplx decay(std::size_t a) const { return n_dot_rate_[a]; }

  // Scaled-ADO coupling magnitudes sqrt((n_j+1)|c_j|) and sqrt(n_j/|c_j|).
  double s_up(std::size_t a, int j) const { return s_up_[a * n_terms_ + j]; }
  double s_down(std::size_t a, int j) const { return s_down_[a * n_terms_ + j]; }

  std::size_t index_of(const std::vector<std::uint8_t>& occ) const;  // throws if absent

 private:
  const model::SystemOps* sys_;
  int depth_, n_terms_;
  double omega_ref_;
  std::size_t n_ados_;
  std::vector<int> term_site_;
  std::vector<cplx> c_, d_, rate_;
  std::vector<double> delta_;
  std::vector<std::uint8_t> occ_;
  std::vector<std::int32_t> up_, down_;
  std::vector<cplx> n_dot_rate_;
  std::vector<double> s_up_, s_down_;
};

// A (ket manifold, bra manifold) sector; {-1,-1} selects the full stacked space
// (needed when an explicit drive mixes manifolds).
struct Block {
  int ket = -1;
  int bra = -1;
  bool full() const { return ket < 0; }
};

// Right-hand side and RK4 stepper for one block, either the forward generator L or
// its transpose-adjoint ("window") variant W with d Phi/dt = L^T Phi, used to collapse
// the detection-time axis of response kernels into inner products.
class BlockGenerator {
 public:
  enum class Mode { forward, window };

  BlockGenerator(const Hierarchy& h, Block b, Mode mode = Mode::forward);

  int dim_ket() const { return dk_; }
  int dim_bra() const { return db_; }
  int block_elems() const { return dk_ * db_; }
  std::size_t state_size() const { return n_ados_ * dk_ * db_; }
  Block block() const { return block_; }

  // Optional drive: H_int(t) in cm^-1 on the block's ket/bra spaces (normally the
  // full space). Evaluated 4x per RK4 step.
  using Drive = std::function<void(double t_fs, Eigen::MatrixXcd& h_int_cm1)>;
  void set_drive(Drive d) { drive_ = std::move(d); }

  void rhs(double t_fs, const cplx* x, cplx* dx) const;
  void step(double& t_fs, double dt_fs, cplx* x);  // one RK4 step, t advances

  // Fixed-step propagation; on_sample(step_index, state) fires at step 0, every
  // `sample_every` steps, and at the final step. Throws std::runtime_error on NaN.
  // RK4 stability requires dt * depth * max_j Re(rate_j) < 2.78 (deepest ADO decay);
  // the NaN guard catches violations.
  void propagate(double t0_fs, double dt_fs, int n_steps, cplx* x, int sample_every = 0,
                 const std::function<void(int, const cplx*)>& on_sample = {});

  // Bytes needed to propagate one state of this block (state + RK4 workspace).
  std::size_t working_bytes() const;

 private:
  void local_rhs(const cplx* x, cplx* dx) const;

  const Hierarchy* h_;
  Block block_;
  Mode mode_;
  int dk_, db_;
  std::size_t n_ados_;
  Eigen::MatrixXcd hk_, hb_;            // rad/fs, rotating frame
  Eigen::VectorXd w_;                   // Markovian closure weights per element, 1/fs
  std::vector<cplx> coupling_;          // folded per-entry element vectors, length B each
  std::vector<std::int32_t> nbr_;       // neighbor ADO per entry
  std::vector<std::int32_t> row_;       // CSR offsets per ADO
  Drive drive_;
  mutable std::vector<cplx> k1_, k2_, k3_, k4_, tmp_;
  mutable Eigen::MatrixXcd hdrv_;
};

// Dipole superoperator application: maps a state in block `from` to block `to`
// (same hierarchy layout). Raising/lowering beyond the manifold ladder yields an
// empty result (to.ket/bra = -1) rather than an error.
enum class Side { ket, bra };
enum class Part { raise_op, lower_op };

struct BlockState {
  Block block;
  std::vector<cplx> x;  // [ado][ket][bra], bra fastest
};

BlockState apply_dipole(const Hierarchy& h, const BlockState& in, Side side, Part part);

// Physical-ADO observables (ADO 0).
cplx trace_block(const Hierarchy& h, const BlockState& s);
double hermiticity_defect(const Hierarchy& h, const BlockState& s);  // full block only
Eigen::MatrixXcd physical_matrix(const Hierarchy& h, const BlockState& s);

// Ground-state initial condition in the full space (all ADOs zero except ADO 0).
BlockState ground_state(const Hierarchy& h);

}  // namespace heom2d::heom
