// model.cpp - aggregate Hamiltonian assembly in the site basis.
#include "heom2d/model.hpp"

#include <cmath>
#include <stdexcept>

namespace heom2d::model {

namespace {

void fail(const std::string& msg) { throw std::invalid_argument("model: " + msg); }

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

void validate(const AggregateParams& p) {
  const int n = p.n_sites();
  if (n < 1) fail("at least one site is required");
  for (double e : p.site_energies_cm1)
    if (!std::isfinite(e) || e <= 0) fail("site energies must be finite and positive");
  if (p.coupling_cm1.rows() != n || p.coupling_cm1.cols() != n) fail("coupling matrix must be n_sites x n_sites");
  if (!p.coupling_cm1.isApprox(p.coupling_cm1.transpose(), 1e-12)) fail("coupling matrix must be symmetric");
  if (p.coupling_cm1.diagonal().cwiseAbs().maxCoeff() > 0) fail("coupling matrix diagonal must be zero");
  if (static_cast<int>(p.dipoles.size()) != n) fail("one dipole strength per site is required");
  for (const Mode& m : p.modes) {
    if (m.site < 0 || m.site >= n) fail("mode site " + std::to_string(m.site) + " out of range");
    if (m.freq_cm1 <= 0) fail("mode frequency must be positive");
    if (m.huang_rhys < 0) fail("Huang-Rhys factor must be non-negative");
    if (m.damping_fs <= 0) fail("mode damping time must be positive");
  }
}

int SystemOps::dim_total() const {
  int d = 0;
  for (int m : dims) d += m;
  return d;
}

std::vector<int> SystemOps::offsets() const {
  std::vector<int> off(dims.size());
  int acc = 0;
  for (size_t m = 0; m < dims.size(); ++m) { off[m] = acc; acc += dims[m]; }
  return off;
}

Eigen::MatrixXcd SystemOps::h_full(double omega_ref_cm1) const {
  const int d = dim_total();
  const auto off = offsets();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (int m = 0; m < n_manifolds(); ++m) {
    out.block(off[m], off[m], dims[m], dims[m]) = h[m];
    out.block(off[m], off[m], dims[m], dims[m]).diagonal().array() -= m * omega_ref_cm1;
  }
  return out;
}

Eigen::MatrixXcd SystemOps::dip_up_full() const {
  const int d = dim_total();
  const auto off = offsets();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (int m = 0; m + 1 < n_manifolds(); ++m)
    out.block(off[m + 1], off[m], dims[m + 1], dims[m]) = dip_up[m];
  return out;
}

Eigen::VectorXd SystemOps::coupling_full(int site) const {
  const int d = dim_total();
  const auto off = offsets();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (int m = 0; m < n_manifolds(); ++m) out.segment(off[m], dims[m]) = coupling[site][m];
  return out;
}

SystemOps electronic_system(const AggregateParams& p) {
  validate(p);
  const int n = p.n_sites();
  const int nd = n * (n - 1) / 2;

  SystemOps sys;
  sys.n_sites = n;
  sys.dims = {1, n, nd};

  // Double-excitation basis: site pairs (k,l), k < l, lexicographic.
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(nd);
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) pairs.emplace_back(k, l);

  Eigen::MatrixXcd hg = Eigen::MatrixXcd::Zero(1, 1);

  Eigen::MatrixXcd he = p.coupling_cm1.cast<cplx>();
  for (int k = 0; k < n; ++k) he(k, k) = p.site_energies_cm1[k];

  Eigen::MatrixXcd hf = Eigen::MatrixXcd::Zero(nd, nd);
  for (int a = 0; a < nd; ++a) {
    hf(a, a) = p.site_energies_cm1[pairs[a].first] + p.site_energies_cm1[pairs[a].second];
    for (int b = a + 1; b < nd; ++b) {
      // Pairs couple when they share exactly one site; the matrix element moves
      // the unshared excitation.
      const auto [k, l] = pairs[a];
      const auto [u, v] = pairs[b];
      int shared = -1, from = -1, to = -1;
      if (k == u) { shared = k; from = l; to = v; }
      else if (k == v) { shared = k; from = l; to = u; }
      else if (l == u) { shared = l; from = k; to = v; }
      else if (l == v) { shared = l; from = k; to = u; }
      if (shared >= 0) hf(a, b) = hf(b, a) = p.coupling_cm1(from, to);
    }
  }
  sys.h = {hg, he, hf};

  Eigen::MatrixXcd dge(n, 1);
  for (int k = 0; k < n; ++k) dge(k, 0) = p.dipoles[k];
  Eigen::MatrixXcd def = Eigen::MatrixXcd::Zero(nd, n);
  for (int a = 0; a < nd; ++a) {
    def(a, pairs[a].first) = p.dipoles[pairs[a].second];
    def(a, pairs[a].second) = p.dipoles[pairs[a].first];
  }
  sys.dip_up = {dge, def};

  sys.coupling.resize(n);
  for (int s = 0; s < n; ++s) {
    Eigen::VectorXd cg = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd ce = Eigen::VectorXd::Zero(n);
    ce(s) = 1.0;
    Eigen::VectorXd cf = Eigen::VectorXd::Zero(nd);
    for (int a = 0; a < nd; ++a)
      if (pairs[a].first == s || pairs[a].second == s) cf(a) = 1.0;
    sys.coupling[s] = {cg, ce, cf};
  }
  return sys;
}

SystemOps vibronic_system(const AggregateParams& p, int n_max) {
  validate(p);
  if (n_max < 0) fail("n_max must be non-negative");
  SystemOps el = electronic_system(p);
  if (p.modes.empty()) return el;

  const int nm = static_cast<int>(p.modes.size());
  const int nv = n_max + 1;
  int vdim = 1;
  for (int i = 0; i < nm; ++i) {
    if (vdim > 4096 / nv) fail("vibrational space too large; reduce n_max or modes");
    vdim *= nv;
  }

  // Single-mode operators: number operator and b + b^dagger (no zero-point offset;
  // it cancels between manifolds).
  Eigen::MatrixXcd num = Eigen::MatrixXcd::Zero(nv, nv);
  Eigen::MatrixXcd pos = Eigen::MatrixXcd::Zero(nv, nv);
  for (int v = 0; v < nv; ++v) {
    num(v, v) = v;
    if (v + 1 < nv) pos(v, v + 1) = pos(v + 1, v) = std::sqrt(v + 1.0);
  }
  const Eigen::MatrixXcd iv = Eigen::MatrixXcd::Identity(nv, nv);

  auto mode_op = [&](int slot, const Eigen::MatrixXcd& op) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int i = 0; i < nm; ++i) out = kron(out, i == slot ? op : iv);
    return out;
  };

  Eigen::MatrixXcd hvib = Eigen::MatrixXcd::Zero(vdim, vdim);
  for (int i = 0; i < nm; ++i) hvib += p.modes[i].freq_cm1 * mode_op(i, num);

  SystemOps sys;
  sys.n_sites = el.n_sites;
  sys.dims.resize(el.n_manifolds());
  sys.h.resize(el.n_manifolds());
  sys.dip_up.resize(el.n_manifolds() - 1);
  const Eigen::MatrixXcd ivd = Eigen::MatrixXcd::Identity(vdim, vdim);

  for (int m = 0; m < el.n_manifolds(); ++m) {
    const int de = el.dims[m];
    sys.dims[m] = de * vdim;
    Eigen::MatrixXcd hm = kron(el.h[m], ivd) + kron(Eigen::MatrixXcd::Identity(de, de), hvib);
    for (int i = 0; i < nm; ++i) {
      const double g = std::sqrt(p.modes[i].huang_rhys) * p.modes[i].freq_cm1;
      Eigen::MatrixXcd proj = el.coupling[p.modes[i].site][m].asDiagonal().toDenseMatrix().cast<cplx>();
      hm += g * kron(proj, mode_op(i, pos));
    }
    sys.h[m] = hm;
    if (m + 1 < el.n_manifolds()) sys.dip_up[m] = kron(el.dip_up[m], ivd);
  }

  sys.coupling.resize(el.n_sites);
  for (int s = 0; s < el.n_sites; ++s) {
    sys.coupling[s].resize(el.n_manifolds());
    for (int m = 0; m < el.n_manifolds(); ++m) {
      Eigen::VectorXd c(el.dims[m] * vdim);
      for (int e = 0; e < el.dims[m]; ++e) c.segment(e * vdim, vdim).setConstant(el.coupling[s][m](e));
      sys.coupling[s][m] = c;
    }
  }
  return sys;
}

Eigensystem diagonalize_manifold(const SystemOps& sys, int manifold) {
  if (manifold < 0 || manifold >= sys.n_manifolds()) fail("manifold index out of range");
  if (sys.dims[manifold] == 0) return {Eigen::VectorXd(0), Eigen::MatrixXcd(0, 0)};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sys.h[manifold]);
  if (es.info() != Eigen::Success) throw std::runtime_error("model: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

Eigen::MatrixXd eigenbasis_dipoles(const SystemOps& sys, int manifold_from) {
  if (manifold_from < 0 || manifold_from + 1 >= sys.n_manifolds()) fail("manifold index out of range");
  const auto lo = diagonalize_manifold(sys, manifold_from);
  const auto hi = diagonalize_manifold(sys, manifold_from + 1);
  return (hi.vectors.adjoint() * sys.dip_up[manifold_from] * lo.vectors).cwiseAbs();
}

}  // namespace heom2d::model
