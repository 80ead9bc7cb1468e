// response.cpp - pathway tables, kernel grid planning, the shared-trajectory kernel
// engine, lattice convolution with pulse envelopes, and phase-cycled extraction.
#include "heom2d/response.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heom2d/threading.hpp"

namespace heom2d::response {

namespace {

using heom::Block;
using heom::BlockGenerator;
using heom::BlockState;
using heom::Hierarchy;
using heom::Part;
using heom::Side;

using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr Interaction kKetUp{Side::ket, Part::raise_op};
constexpr Interaction kKetDown{Side::ket, Part::lower_op};
constexpr Interaction kBraUp{Side::bra, Part::raise_op};
constexpr Interaction kBraDown{Side::bra, Part::lower_op};

bool same_op(Interaction a, Interaction b) { return a.side == b.side && a.part == b.part; }

// Ladder walk from the ground block; returns the block after each interaction. A
// monomer carries an empty double manifold, so dimension zero counts as absent.
std::array<Block, 3> block_walk(const Shape& s, const model::SystemOps& sys) {
  Block b{0, 0};
  std::array<Block, 3> out{};
  for (int k = 0; k < 3; ++k) {
    int& m = s.ops[k].side == Side::ket ? b.ket : b.bra;
    m += s.ops[k].part == Part::raise_op ? 1 : -1;
    if (m < 0 || m >= sys.n_manifolds() || sys.dims[m] == 0)
      throw std::invalid_argument("response: shape " + s.name +
                                  " needs a manifold the model does not have");
    out[k] = b;
  }
  if (out[2].ket != out[2].bra + 1)
    throw std::invalid_argument("response: shape " + s.name +
                                " does not end in an emissive coherence");
  return out;
}

// Forward matrix of one interaction on a state in `from`: ket ops multiply from the
// left, bra ops from the right.
struct OpMatrix {
  Side side;
  Eigen::MatrixXcd m;
};

OpMatrix op_matrix(const model::SystemOps& sys, Block from, Interaction op) {
  if (op.side == Side::ket)
    return {Side::ket, op.part == Part::raise_op
                           ? Eigen::MatrixXcd(sys.dip_up[from.ket])
                           : Eigen::MatrixXcd(sys.dip_up[from.ket - 1].adjoint())};
  return {Side::bra, op.part == Part::raise_op
                         ? Eigen::MatrixXcd(sys.dip_up[from.bra].adjoint())
                         : Eigen::MatrixXcd(sys.dip_up[from.bra - 1])};
}

int lattice(double v_fs, double step_fs, const char* what) {
  const double r = v_fs / step_fs;
  const int i = static_cast<int>(std::lround(r));
  if (std::abs(r - i) > 1e-6)
    throw std::invalid_argument(std::string("response: ") + what + " = " + std::to_string(v_fs) +
                                " fs is off the " + std::to_string(step_fs) + " fs kernel lattice");
  return i;
}

// Overlap half-width rounded outward to whole lattice steps.
int support_steps(double support_fs, double step_fs) {
  return static_cast<int>(std::ceil(support_fs / step_fs - 1e-9));
}

}  // namespace

const char* to_string(PathwayClass c) {
  switch (c) {
    case PathwayClass::gsb: return "gsb";
    case PathwayClass::se: return "se";
    case PathwayClass::esa: return "esa";
    case PathwayClass::dqc: return "dqc";
  }
  return "?";
}

std::vector<Shape> rephasing_shapes(bool has_double_manifold) {
  const cplx neg_i(0, -1), pos_i(0, 1);
  std::vector<Shape> out;
  out.push_back({PathwayClass::gsb, {kBraUp, kBraDown, kKetUp}, 0, neg_i, "gsb_rephasing"});
  out.push_back({PathwayClass::se, {kBraUp, kKetUp, kBraDown}, 0, neg_i, "se_rephasing"});
  if (has_double_manifold)
    out.push_back({PathwayClass::esa, {kBraUp, kKetUp, kKetUp}, 0, pos_i, "esa_rephasing"});
  out.push_back({PathwayClass::gsb, {kKetUp, kKetDown, kKetUp}, 1, neg_i, "gsb_nonrephasing"});
  out.push_back({PathwayClass::se, {kKetUp, kBraUp, kBraDown}, 1, neg_i, "se_nonrephasing"});
  if (has_double_manifold) {
    out.push_back({PathwayClass::esa, {kKetUp, kBraUp, kKetUp}, 1, pos_i, "esa_nonrephasing"});
    out.push_back({PathwayClass::dqc, {kKetUp, kKetUp, kKetDown}, 2, neg_i, "dqc_lower"});
    out.push_back({PathwayClass::dqc, {kKetUp, kKetUp, kBraUp}, 2, pos_i, "dqc_raise"});
  }
  return out;
}

std::vector<Diagram> enumerate_diagrams(const std::vector<Shape>& shapes) {
  std::vector<Diagram> out;
  for (int si = 0; si < static_cast<int>(shapes.size()); ++si) {
    const int cs = shapes[si].conjugated_slot;
    std::array<int, 2> rest{};
    int r = 0;
    for (int k = 0; k < 3; ++k)
      if (k != cs) rest[r++] = k;
    for (int swap = 0; swap < 2; ++swap) {
      Diagram d;
      d.shape = si;
      d.pulse[cs] = 0;
      d.pulse[rest[0]] = swap ? 2 : 1;
      d.pulse[rest[1]] = swap ? 1 : 2;
      out.push_back(d);
    }
  }
  return out;
}

std::vector<KernelGrid> plan_kernel_grids(const std::vector<Shape>& shapes,
                                          const std::vector<Diagram>& diagrams,
                                          const ScanGrid& scan, double step_fs) {
  if (step_fs <= 0) throw std::invalid_argument("response: kernel step must be positive");
  for (double v : scan.taus_fs) lattice(v, step_fs, "tau");
  for (double v : scan.Ts_fs) lattice(v, step_fs, "T");
  for (double v : scan.ts_fs) lattice(v, step_fs, "t");
  const double S = support_steps(scan.support_fs, step_fs) * step_fs;
  double tmax = 0;
  for (double v : scan.ts_fs) tmax = std::max(tmax, v);

  struct Box {
    bool any = false;
    double hi1 = 0, lo2 = 0, hi2 = 0, hi3 = 0;
  };
  std::vector<Box> box(shapes.size());
  for (const auto& d : diagrams) {
    if (d.shape < 0 || d.shape >= static_cast<int>(shapes.size()))
      throw std::invalid_argument("response: diagram references an unknown shape");
    for (double tau : scan.taus_fs) {
      for (double T : scan.Ts_fs) {
        const std::array<double, 3> centers{0.0, tau, tau + T};
        std::array<double, 3> c{};
        for (int k = 0; k < 3; ++k) c[k] = centers[d.pulse[k]];
        const double g1 = c[1] - c[0], g2 = c[2] - c[1];
        // a negative gap beyond the overlap window means the pulses cannot act in
        // slot order at this scan point
        if (g1 + 2 * S < 0 || g2 + 2 * S < 0) continue;
        Box& b = box[d.shape];
        const double hi1 = g1 + 2 * S;
        const double lo2 = std::max(0.0, g2 - 2 * S);
        const double hi2 = g2 + 2 * S;
        const double hi3 = tau + T + tmax - c[2] + S;
        if (!b.any) {
          b = {true, hi1, lo2, hi2, hi3};
        } else {
          b.hi1 = std::max(b.hi1, hi1);
          b.lo2 = std::min(b.lo2, lo2);
          b.hi2 = std::max(b.hi2, hi2);
          b.hi3 = std::max(b.hi3, hi3);
        }
      }
    }
  }

  std::vector<KernelGrid> out(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    KernelGrid g;
    g.step_fs = step_fs;
    if (box[i].any) {
      const int lo2 = static_cast<int>(std::floor(box[i].lo2 / step_fs + 1e-9));
      const int hi2 = static_cast<int>(std::ceil(box[i].hi2 / step_fs - 1e-9));
      g.n1 = static_cast<int>(std::ceil(box[i].hi1 / step_fs - 1e-9)) + 1;
      g.t2_first_fs = lo2 * step_fs;
      g.n2 = hi2 - lo2 + 1;
      g.n3 = static_cast<int>(std::ceil(std::max(0.0, box[i].hi3) / step_fs - 1e-9)) + 1;
    }
    out[i] = g;
  }
  return out;
}

KernelSet compute_kernels(const Hierarchy& h, const std::vector<Shape>& shapes,
                          const std::vector<KernelGrid>& grids, const KernelOptions& opt) {
  if (grids.size() != shapes.size())
    throw std::invalid_argument("response: need one kernel grid per shape");
  const int per = static_cast<int>(std::lround(opt.step_fs / opt.dt_fs));
  if (per < 1 || std::abs(per * opt.dt_fs - opt.step_fs) > 1e-9 * opt.step_fs)
    throw std::invalid_argument("response: kernel step must be an integer multiple of dt");
  const auto& sys = h.sys();
  const std::size_t n_ados = h.n_ados();

  KernelSet ks;
  ks.shapes = shapes;
  ks.omega_ref_cm1 = h.omega_ref_cm1();
  ks.dt_fs = opt.dt_fs;
  ks.kernels.resize(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    ks.kernels[i].grid = grids[i];
    if (!grids[i].empty())
      ks.kernels[i].r.assign(
          static_cast<std::size_t>(grids[i].n1) * grids[i].n2 * grids[i].n3, cplx(0, 0));
  }

  const auto t_begin = std::chrono::steady_clock::now();
  auto seconds = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  };
  auto log = [&](const std::string& s) {
    if (opt.log) opt.log(s);
  };

  // Ladder walks, and the union t3 horizon for each distinct emission block.
  std::vector<std::array<Block, 3>> walk(shapes.size());
  std::map<std::pair<int, int>, int> n3_of_block;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (grids[i].empty()) continue;
    walk[i] = block_walk(shapes[i], sys);
    int& n3 = n3_of_block[{walk[i][2].ket, walk[i][2].bra}];
    n3 = std::max(n3, grids[i].n3);
  }
  if (n3_of_block.empty()) return ks;

  // Detection windows on the t3 lattice: Phi(t3) from d Phi/dt = L^T Phi seeded with
  // the emission functional on the physical ADO, so <Phi(t3), rho> = P(t3).
  std::map<std::pair<int, int>, std::vector<cplx>> window;
  for (const auto& [key, n3] : n3_of_block) {
    const Block b3{key.first, key.second};
    BlockGenerator gen(h, b3, BlockGenerator::Mode::window);
    const std::size_t sz = gen.state_size();
    const int dk = gen.dim_ket(), db = gen.dim_bra();
    std::vector<cplx> phi(sz, cplx(0, 0));
    const Eigen::MatrixXcd& d = sys.dip_up[b3.bra];  // emission pairs rho_il with conj(d(i,l))
    for (int i = 0; i < dk; ++i)
      for (int l = 0; l < db; ++l) phi[static_cast<std::size_t>(i) * db + l] = std::conj(d(i, l));
    auto& store = window[key];
    store.resize(static_cast<std::size_t>(n3) * sz);
    gen.propagate(0.0, opt.dt_fs, (n3 - 1) * per, phi.data(), per, [&](int step, const cplx* x) {
      std::memcpy(store.data() + static_cast<std::size_t>(step / per) * sz, x, sz * sizeof(cplx));
    });
    log("kernels: window (" + std::to_string(b3.ket) + "," + std::to_string(b3.bra) + ") " +
        std::to_string(n3) + " samples, " + std::to_string(static_cast<int>(seconds())) + " s");
  }

  // Pull the third interaction back through the window: Psi(t3) pairs bilinearly with
  // the t2-evolved state and already carries the pathway prefactor.
  std::vector<std::vector<cplx>> psi(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (grids[i].empty()) continue;
    const Block b2 = walk[i][1], b3 = walk[i][2];
    const int dk2 = sys.dims[b2.ket], db2 = sys.dims[b2.bra];
    const int dk3 = sys.dims[b3.ket], db3 = sys.dims[b3.bra];
    const std::size_t e2 = static_cast<std::size_t>(dk2) * db2;
    const std::size_t e3 = static_cast<std::size_t>(dk3) * db3;
    const OpMatrix op3 = op_matrix(sys, b2, shapes[i].ops[2]);
    const Eigen::MatrixXcd mt = op3.m.transpose();
    const auto& w = window.at({b3.ket, b3.bra});
    auto& p = psi[i];
    p.resize(static_cast<std::size_t>(grids[i].n3) * n_ados * e2);
    for (int i3 = 0; i3 < grids[i].n3; ++i3) {
      const cplx* src = w.data() + static_cast<std::size_t>(i3) * n_ados * e3;
      cplx* dst = p.data() + static_cast<std::size_t>(i3) * n_ados * e2;
      for (std::size_t a = 0; a < n_ados; ++a) {
        Eigen::Map<const RowMat> phi(src + a * e3, dk3, db3);
        Eigen::Map<RowMat> out(dst + a * e2, dk2, db2);
        if (op3.side == Side::ket)
          out.noalias() = shapes[i].prefactor * (mt * phi);
        else
          out.noalias() = shapes[i].prefactor * (phi * mt);
      }
    }
  }
  window.clear();

  // Shapes sharing the first interaction share the t1 trajectory; within a family,
  // shapes sharing the second interaction share every t2 propagation.
  struct Member {
    int shape;
    int row0;  // first t2 row of this shape inside the subgroup buffer
  };
  struct Subgroup {
    Interaction op2{};
    int lo2 = 0, hi2 = 0;  // union t2 lattice bounds
    std::vector<Member> members;
    std::unique_ptr<BlockGenerator> gen;
    std::vector<cplx> y;  // [row][ado][ket][bra]
  };
  struct Family {
    Interaction op1{};
    int n1 = 0;
    std::vector<Subgroup> groups;
  };
  std::vector<Family> families;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (grids[i].empty()) continue;
    const Shape& s = shapes[i];
    Family* fam = nullptr;
    for (auto& f : families)
      if (same_op(f.op1, s.ops[0])) fam = &f;
    if (!fam) {
      families.emplace_back();
      fam = &families.back();
      fam->op1 = s.ops[0];
    }
    fam->n1 = std::max(fam->n1, grids[i].n1);
    Subgroup* grp = nullptr;
    for (auto& g : fam->groups)
      if (same_op(g.op2, s.ops[1])) grp = &g;
    const int lo = lattice(grids[i].t2_first_fs, opt.step_fs, "t2 origin");
    if (!grp) {
      fam->groups.emplace_back();
      grp = &fam->groups.back();
      grp->op2 = s.ops[1];
      grp->lo2 = lo;
      grp->hi2 = lo;
    }
    grp->lo2 = std::min(grp->lo2, lo);
    grp->hi2 = std::max(grp->hi2, lo + grids[i].n2 - 1);
    grp->members.push_back({static_cast<int>(i), lo});
  }
  for (auto& f : families)
    for (auto& g : f.groups)
      for (auto& m : g.members) m.row0 -= g.lo2;

  BlockState rho0;
  rho0.block = {0, 0};
  rho0.x.assign(n_ados * static_cast<std::size_t>(sys.dims[0]) * sys.dims[0], cplx(0, 0));
  rho0.x[0] = cplx(1, 0);  // ground population; the decoupled bath is stationary here
  for (auto& fam : families) {
    BlockState x1 = heom::apply_dipole(h, rho0, fam.op1.side, fam.op1.part);
    BlockGenerator g1(h, x1.block);
    const std::size_t sz1 = g1.state_size();
    for (auto& grp : fam.groups) {
      const BlockState probe{x1.block, std::vector<cplx>(sz1, cplx(0, 0))};
      const BlockState after = heom::apply_dipole(h, probe, grp.op2.side, grp.op2.part);
      grp.gen = std::make_unique<BlockGenerator>(h, after.block);
      grp.y.assign(static_cast<std::size_t>(grp.hi2 - grp.lo2 + 1) * grp.gen->state_size(),
                   cplx(0, 0));
    }
    const std::string fam_name = fam.op1.side == Side::bra ? "bra_raise" : "ket_raise";
    log("kernels: family " + fam_name + ", " + std::to_string(fam.n1) + " coherence samples, " +
        std::to_string(fam.groups.size()) + " branch(es)");

    BlockState snap{x1.block, std::vector<cplx>(sz1)};
    g1.propagate(0.0, opt.dt_fs, (fam.n1 - 1) * per, x1.x.data(), per, [&](int step,
                                                                           const cplx* s1) {
      const int i1 = step / per;
      std::copy(s1, s1 + sz1, snap.x.begin());
      auto do_group = [&](Subgroup& grp) {
        BlockState y0 = heom::apply_dipole(h, snap, grp.op2.side, grp.op2.part);
        const std::size_t sz2 = grp.gen->state_size();
        grp.gen->propagate(0.0, opt.dt_fs, grp.hi2 * per, y0.x.data(), per,
                           [&](int st, const cplx* s2) {
                             const int i2 = st / per;
                             if (i2 >= grp.lo2)
                               std::memcpy(grp.y.data() +
                                               static_cast<std::size_t>(i2 - grp.lo2) * sz2,
                                           s2, sz2 * sizeof(cplx));
                           });
        for (const Member& m : grp.members) {
          const KernelGrid& g = grids[m.shape];
          if (i1 >= g.n1) continue;
          Eigen::Map<const RowMat> ym(grp.y.data() + static_cast<std::size_t>(m.row0) * sz2,
                                      g.n2, sz2);
          Eigen::Map<const RowMat> pm(psi[m.shape].data(), g.n3, sz2);
          Eigen::Map<RowMat> km(
              ks.kernels[m.shape].r.data() + static_cast<std::size_t>(i1) * g.n2 * g.n3, g.n2,
              g.n3);
          km.noalias() = ym * pm.transpose();
        }
      };
      if (opt.workers > 1 && fam.groups.size() > 1)
        parallel_for(fam.groups.size(), opt.workers,
                     [&](std::size_t gi) { do_group(fam.groups[gi]); });
      else
        for (auto& grp : fam.groups) do_group(grp);
      if (i1 % 16 == 0 || i1 + 1 == fam.n1)
        log("kernels: " + fam_name + " " + std::to_string(i1 + 1) + "/" +
            std::to_string(fam.n1) + ", " + std::to_string(static_cast<int>(seconds())) + " s");
    });
  }
  return ks;
}

Signal3 convolve(const KernelSet& ks, const std::vector<Diagram>& diagrams,
                 const std::array<pulses::Pulse, 3>& base, const ScanGrid& scan, int workers) {
  double step = 0;
  for (const auto& k : ks.kernels) {
    if (k.grid.empty()) continue;
    if (step == 0)
      step = k.grid.step_fs;
    else if (std::abs(step - k.grid.step_fs) > 1e-12)
      throw std::invalid_argument("response: kernels disagree on the lattice step");
  }
  if (step == 0) throw std::invalid_argument("response: no computed kernels to convolve");
  const int ss = support_steps(scan.support_fs, step);
  if (ss < 1)
    throw std::invalid_argument("response: pulse overlap support is below one lattice step");
  const int nu = 2 * ss + 1;

  const std::size_t ntau = scan.taus_fs.size(), nT = scan.Ts_fs.size(), nt = scan.ts_fs.size();
  Signal3 sig;
  sig.taus_fs = scan.taus_fs;
  sig.Ts_fs = scan.Ts_fs;
  sig.ts_fs = scan.ts_fs;
  sig.total.assign(ntau * nT * nt, cplx(0, 0));
  for (const auto& d : diagrams) {
    if (d.shape < 0 || d.shape >= static_cast<int>(ks.shapes.size()))
      throw std::invalid_argument("response: diagram references an unknown shape");
    sig.by_class[ks.shapes[d.shape].cls].assign(ntau * nT * nt, cplx(0, 0));
  }
  if (sig.total.empty()) return sig;

  std::vector<int> ltau(ntau), lT(nT), lt(nt);
  for (std::size_t i = 0; i < ntau; ++i) ltau[i] = lattice(scan.taus_fs[i], step, "tau");
  for (std::size_t i = 0; i < nT; ++i) lT[i] = lattice(scan.Ts_fs[i], step, "T");
  for (std::size_t i = 0; i < nt; ++i) lt[i] = lattice(scan.ts_fs[i], step, "t");

  // The lattice sum is separable in the sheared scan coordinates m = (tau+T+t, T+t, t):
  // the interaction time of the pulse in slot k differs from detection by its suffix sum
  // of kernel indices, so its field argument is m[pulse] - suffix - t2 origin, and the
  // pulse centers cancel. Contracting i1, then i2, then i3 turns the O(S^3)-per-point
  // sum into three FIR passes per detection-axis slab.
  auto range = [](const std::vector<int>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return std::pair<int, int>(*lo, *hi);
  };
  const auto rt = range(lt), rT = range(lT), rtau = range(ltau);
  // m ranges: index p is the pulse whose window sits m[p] steps before detection.
  const std::array<std::pair<int, int>, 3> mr{
      std::pair<int, int>{rtau.first + rT.first + rt.first, rtau.second + rT.second + rt.second},
      {rT.first + rt.first, rT.second + rt.second},
      {rt.first, rt.second}};

  // Each interaction carries a field in energy units; the generator works in rad/fs,
  // so every vertex contributes one angular conversion along with the du weight.
  const double vol = std::pow(step * kTwoPiC, 3);

  std::mutex merge_mx;
  parallel_for(diagrams.size(), workers < 1 ? 1 : workers, [&](std::size_t di) {
    const Diagram& d = diagrams[di];
    const Shape& shp = ks.shapes[d.shape];
    const ShapeKernel& ker = ks.kernels[d.shape];
    const KernelGrid& g = ker.grid;

    const KernelGrid need = plan_kernel_grids(ks.shapes, {d}, scan, step)[d.shape];
    if (need.empty()) return;  // no (tau,T) point admits this pulse ordering
    if (g.empty()) throw std::runtime_error("kernel coverage missing for shape " + shp.name);
    const int lo2 = lattice(g.t2_first_fs, step, "t2 origin");
    const int nlo2 = lattice(need.t2_first_fs, step, "t2 origin");
    if (need.n1 > g.n1 || need.n3 > g.n3 || nlo2 < lo2 || nlo2 - lo2 + need.n2 > g.n2)
      throw std::runtime_error("kernel coverage hole in " + shp.name);

    // Slot k's field samples relative to its own center, endpoint-halved (trapezoid),
    // conjugated on the conjugated slot; the du^3 volume rides on slot 0.
    std::array<std::vector<cplx>, 3> tap;
    for (int k = 0; k < 3; ++k) {
      pulses::Pulse p = base[d.pulse[k]];
      p.center_fs = 0;
      tap[k].resize(nu);
      for (int j = 0; j < nu; ++j) {
        cplx v = p.positive_field((j - ss) * step, ks.omega_ref_cm1);
        if (k == shp.conjugated_slot) v = std::conj(v);
        tap[k][j] = (j == 0 || j == nu - 1 ? 0.5 : 1.0) * v;
      }
    }
    for (auto& v : tap[0]) v *= vol;

    const auto r0 = mr[d.pulse[0]], r1 = mr[d.pulse[1]], r2 = mr[d.pulse[2]];
    const int W0 = r0.second - r0.first + 1, W1 = r1.second - r1.first + 1;

    using MatrixRM = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    MatrixRM A(g.n2, W0), B(W1, W0);
    std::vector<cplx> slab(static_cast<std::size_t>(g.n1) * g.n2);
    std::vector<cplx> out(ntau * nT * nt, cplx(0, 0));

    for (int i3 = 0; i3 < g.n3; ++i3) {
      if (i3 - ss > r2.second) break;  // past every slot-2 window
      if (i3 + ss < r2.first) continue;

      // Simplex-boundary trapezoid: the i=0 planes are the u2=u1, u3=u2 (only when the
      // grid reaches t2=0) and u3=detection boundaries, each half-weighted.
      const double wc = i3 == 0 ? 0.5 : 1.0;
      for (int i1 = 0; i1 < g.n1; ++i1) {
        const double wa = (i1 == 0 ? 0.5 : 1.0) * wc;
        const cplx* src = ker.r.data() + static_cast<std::size_t>(i1) * g.n2 * g.n3 + i3;
        cplx* dst = slab.data() + i1;
        for (int i2 = 0; i2 < g.n2; ++i2)
          dst[static_cast<std::size_t>(i2) * g.n1] =
              (i2 == 0 && lo2 == 0 ? 0.5 * wa : wa) * src[static_cast<std::size_t>(i2) * g.n3];
      }

      A.setZero();
      for (int i2 = 0; i2 < g.n2; ++i2) {
        const cplx* rs = slab.data() + static_cast<std::size_t>(i2) * g.n1;
        cplx* arow = A.data() + static_cast<std::size_t>(i2) * W0;
        const int vbase = i2 + lo2 + i3 - ss - r0.first;
        for (int i1 = 0; i1 < g.n1; ++i1) {
          const cplx rv = rs[i1];
          const int b = vbase + i1;
          const int j0 = std::max(0, -b), j1 = std::min(nu - 1, W0 - 1 - b);
          for (int j = j0; j <= j1; ++j) arow[b + j] += rv * tap[0][j];
        }
      }

      B.setZero();
      for (int i2 = 0; i2 < g.n2; ++i2) {
        const int vbase = i2 + lo2 + i3 - ss - r1.first;
        const int j0 = std::max(0, -vbase), j1 = std::min(nu - 1, W1 - 1 - vbase);
        for (int j = j0; j <= j1; ++j) B.row(vbase + j) += tap[1][j] * A.row(i2);
      }

      for (std::size_t iT = 0; iT < nT; ++iT)
        for (std::size_t it = 0; it < nt; ++it) {
          std::array<int, 3> m{0, lT[iT] + lt[it], lt[it]};
          const std::size_t base_idx = iT * nt + it;
          for (std::size_t itau = 0; itau < ntau; ++itau) {
            m[0] = ltau[itau] + m[1];
            const int j2 = m[d.pulse[2]] - i3 + ss;
            if (j2 < 0 || j2 >= nu) {
              if (d.pulse[2] != 0) break;  // constant over itau; no contribution
              continue;
            }
            out[(itau * nT) * nt + base_idx] +=
                B(m[d.pulse[1]] - r1.first, m[d.pulse[0]] - r0.first) * tap[2][j2];
          }
        }
    }

    std::scoped_lock lk(merge_mx);
    std::vector<cplx>& cls_out = sig.by_class.find(shp.cls)->second;
    for (std::size_t i = 0; i < out.size(); ++i) {
      cls_out[i] += out[i];
      sig.total[i] += out[i];
    }
  });
  return sig;
}

Signal3 impulsive_signal(const KernelSet& ks, const ScanGrid& scan) {
  const std::size_t ntau = scan.taus_fs.size(), nT = scan.Ts_fs.size(), nt = scan.ts_fs.size();
  Signal3 sig;
  sig.taus_fs = scan.taus_fs;
  sig.Ts_fs = scan.Ts_fs;
  sig.ts_fs = scan.ts_fs;
  sig.total.assign(ntau * nT * nt, cplx(0, 0));

  bool any = false;
  for (std::size_t si = 0; si < ks.shapes.size(); ++si) {
    const Shape& shp = ks.shapes[si];
    if (shp.conjugated_slot != 0) continue;  // only these admit the canonical pulse order
    any = true;
    const ShapeKernel& ker = ks.kernels[si];
    const KernelGrid& g = ker.grid;
    if (g.empty()) throw std::runtime_error("kernel coverage missing for shape " + shp.name);
    const int lo2 = lattice(g.t2_first_fs, g.step_fs, "t2 origin");
    auto& out = sig.by_class[shp.cls];
    if (out.empty()) out.assign(ntau * nT * nt, cplx(0, 0));
    for (std::size_t a = 0; a < ntau; ++a) {
      const int i1 = lattice(scan.taus_fs[a], g.step_fs, "tau");
      for (std::size_t b = 0; b < nT; ++b) {
        const int i2 = lattice(scan.Ts_fs[b], g.step_fs, "T") - lo2;
        for (std::size_t cth = 0; cth < nt; ++cth) {
          const int i3 = lattice(scan.ts_fs[cth], g.step_fs, "t");
          if (i1 < 0 || i1 >= g.n1 || i2 < 0 || i2 >= g.n2 || i3 < 0 || i3 >= g.n3)
            throw std::runtime_error("kernel coverage hole in " + shp.name +
                                     " on the impulsive grid");
          const cplx v = ker.at(i1, i2, i3);
          const std::size_t idx = sig.idx(static_cast<int>(a), static_cast<int>(b),
                                          static_cast<int>(cth));
          out[idx] += v;
          sig.total[idx] += v;
        }
      }
    }
  }
  if (!any) throw std::invalid_argument("response: no shapes with the conjugated pulse first");
  return sig;
}

std::vector<cplx> phase_cycled_signal(const Hierarchy& h,
                                      const std::array<pulses::Pulse, 3>& base,
                                      const ScanGrid& scan, const PhaseCycle& pc, double dt_fs,
                                      int workers,
                                      const std::function<void(const std::string&)>& log) {
  // Third-order components reachable on each pulse are {-1, 0, +1, +2} (first) and
  // {-1, 0, +1, +2} (others); 4x3x3 is the smallest alias-free cycle for (-1,+1,+1).
  if (pc.counts[0] < 4 || pc.counts[1] < 3 || pc.counts[2] < 3)
    throw std::invalid_argument("response: phase cycle must be at least 4x3x3");
  if (dt_fs <= 0) throw std::invalid_argument("response: dt must be positive");

  const auto& sys = h.sys();
  const std::size_t ntau = scan.taus_fs.size(), nT = scan.Ts_fs.size(), nt = scan.ts_fs.size();
  std::vector<cplx> out(ntau * nT * nt, cplx(0, 0));
  if (out.empty()) return out;

  const double t_start = -scan.support_fs;  // the first pulse is centred at zero
  const Eigen::MatrixXcd up = sys.dip_up_full();
  const Eigen::MatrixXcd dn = up.adjoint();
  const int dim = sys.dim_total();
  const auto offs = sys.offsets();
  const int n_tuples = pc.counts[0] * pc.counts[1] * pc.counts[2];

  auto detect = [&](const cplx* x0) {  // P+ on the physical ADO
    cplx p(0, 0);
    for (int m = 0; m + 1 < sys.n_manifolds(); ++m) {
      const auto& d = sys.dip_up[m];
      for (int i = 0; i < sys.dims[m + 1]; ++i)
        for (int l = 0; l < sys.dims[m]; ++l)
          p += std::conj(d(i, l)) *
               x0[static_cast<std::size_t>(offs[m + 1] + i) * dim + offs[m] + l];
    }
    return p;
  };

  parallel_for(ntau * nT, workers < 1 ? 1 : workers, [&](std::size_t w) {
    const std::size_t itau = w / nT, iT = w % nT;
    const double tau = scan.taus_fs[itau], T = scan.Ts_fs[iT];

    std::vector<int> at(nt);
    for (std::size_t k = 0; k < nt; ++k) {
      const double r = (tau + T + scan.ts_fs[k] - t_start) / dt_fs;
      at[k] = static_cast<int>(std::lround(r));
      if (std::abs(r - at[k]) > 1e-6)
        throw std::invalid_argument("response: detection times must sit on the dt lattice");
    }
    const int last_step = *std::max_element(at.begin(), at.end());

    BlockGenerator gen(h, Block{}, BlockGenerator::Mode::forward);
    std::vector<cplx> x(h.n_ados() * static_cast<std::size_t>(dim) * dim);
    std::vector<cplx> acc(nt, cplx(0, 0));
    for (int a = 0; a < pc.counts[0]; ++a) {
      for (int b = 0; b < pc.counts[1]; ++b) {
        for (int c = 0; c < pc.counts[2]; ++c) {
          const double ph1 = 2 * kPi * a / pc.counts[0];
          const double ph2 = 2 * kPi * b / pc.counts[1];
          const double ph3 = 2 * kPi * c / pc.counts[2];
          pulses::Sequence seq = pulses::Sequence::delays(base, tau, T, h.omega_ref_cm1());
          seq.p[0].phase_rad += ph1;
          seq.p[1].phase_rad += ph2;
          seq.p[2].phase_rad += ph3;
          gen.set_drive([seq, &up, &dn](double t, Eigen::MatrixXcd& hint) {
            cplx fp(0, 0);
            for (const auto& p : seq.p) fp += p.positive_field(t, seq.omega_ref_cm1);
            hint.noalias() = -(fp * up + std::conj(fp) * dn);
          });
          std::fill(x.begin(), x.end(), cplx(0, 0));
          x[0] = cplx(1, 0);  // ground population, bath at its decoupled fixed point
          const cplx weight = std::exp(cplx(0, ph1 - ph2 - ph3)) / double(n_tuples);
          double t = t_start;
          for (int stp = 0; stp <= last_step; ++stp) {
            bool want = false;
            for (std::size_t k = 0; k < nt; ++k) want = want || at[k] == stp;
            if (want) {
              const cplx p = weight * detect(x.data());
              for (std::size_t k = 0; k < nt; ++k)
                if (at[k] == stp) acc[k] += p;
            }
            if (stp == last_step) break;
            gen.step(t, dt_fs, x.data());
          }
          if (!std::isfinite(x[0].real()))
            throw std::runtime_error("response: phase-cycled propagation diverged");
        }
      }
    }
    for (std::size_t k = 0; k < nt; ++k) out[(itau * nT + iT) * nt + k] = acc[k];
    if (log)
      log("phase_cycle: point " + std::to_string(w + 1) + "/" + std::to_string(ntau * nT) +
          " done");
  });
  return out;
}

}  // namespace heom2d::response
