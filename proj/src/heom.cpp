// heom.cpp - ADO lattice construction and the block RK4 propagator.
//
// Scaled hierarchy: ado_n couples up with -i*sqrt((n_j+1)|c_j|) [V_j, ado_{n+e_j}] and
// down with -i*sqrt(n_j/|c_j|) (c_j V_j ado_{n-e_j} - d_j ado_{n-e_j} V_j). All V_j are
// diagonal site projectors, so every bath coupling is an elementwise product; the
// per-entry scale and matrix are folded into one complex vector at construction.
#include "heom2d/heom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace heom2d::heom {

namespace {

std::string occ_key(const std::uint8_t* occ, int m) {
  return std::string(reinterpret_cast<const char*>(occ), m);
}

void enumerate(std::vector<std::uint8_t>& cur, int slot, int left, std::vector<std::uint8_t>& out) {
  if (slot == static_cast<int>(cur.size())) {
    out.insert(out.end(), cur.begin(), cur.end());
    return;
  }
  for (int n = 0; n <= left; ++n) {
    cur[slot] = static_cast<std::uint8_t>(n);
    enumerate(cur, slot + 1, left - n, out);
  }
  cur[slot] = 0;
}

}  // namespace

std::size_t ado_count(int n_terms, int depth) {
  // C(n_terms + depth, depth) without overflow for sane inputs.
  std::size_t c = 1;
  for (int i = 1; i <= depth; ++i) c = c * (n_terms + i) / i;
  return c;
}

Hierarchy::Hierarchy(const model::SystemOps& sys,
                     const std::vector<bath::CorrelationExpansion>& site_exp,
                     const HierarchyOptions& opt)
    : sys_(&sys), depth_(opt.depth), omega_ref_(opt.omega_ref_cm1) {
  if (static_cast<int>(site_exp.size()) != sys.n_sites)
    throw std::invalid_argument("heom: one bath expansion per site is required");
  if (depth_ < 0) throw std::invalid_argument("heom: depth must be non-negative");

  delta_.resize(sys.n_sites);
  const double a2 = kTwoPiC * kTwoPiC;  // cm^-2 -> rad^2/fs^2
  for (int s = 0; s < sys.n_sites; ++s) {
    const auto& e = site_exp[s];
    delta_[s] = e.delta_cm2fs * a2;
    const int base = static_cast<int>(term_site_.size());
    for (size_t j = 0; j < e.terms.size(); ++j) {
      term_site_.push_back(s);
      c_.push_back(e.terms[j].c_cm2 * a2);
      d_.push_back(std::conj(e.terms[e.terms[j].partner].c_cm2) * a2);
      rate_.push_back(e.terms[j].rate_fs);
      (void)base;
    }
  }
  n_terms_ = static_cast<int>(term_site_.size());

  n_ados_ = ado_count(n_terms_, depth_);
  occ_.clear();
  occ_.reserve(n_ados_ * n_terms_);
  std::vector<std::uint8_t> cur(n_terms_, 0);
  enumerate(cur, 0, depth_, occ_);
  if (occ_.size() != n_ados_ * static_cast<std::size_t>(n_terms_))
    throw std::logic_error("heom: ADO enumeration mismatch");

  std::unordered_map<std::string, std::size_t> index;
  index.reserve(n_ados_ * 2);
  for (std::size_t a = 0; a < n_ados_; ++a) index.emplace(occ_key(occupation(a), n_terms_), a);

  up_.assign(n_ados_ * n_terms_, -1);
  down_.assign(n_ados_ * n_terms_, -1);
  n_dot_rate_.assign(n_ados_, 0.0);
  s_up_.assign(n_ados_ * n_terms_, 0.0);
  s_down_.assign(n_ados_ * n_terms_, 0.0);

  std::vector<std::uint8_t> probe(n_terms_);
  for (std::size_t a = 0; a < n_ados_; ++a) {
    const std::uint8_t* n = occupation(a);
    int total = 0;
    for (int j = 0; j < n_terms_; ++j) total += n[j];
    for (int j = 0; j < n_terms_; ++j) {
      n_dot_rate_[a] += static_cast<double>(n[j]) * rate_[j];
      const double ac = std::abs(c_[j]);
      if (total < depth_ && ac > 0) {
        std::copy(n, n + n_terms_, probe.begin());
        probe[j]++;
        up_[a * n_terms_ + j] = static_cast<std::int32_t>(index.at(occ_key(probe.data(), n_terms_)));
        s_up_[a * n_terms_ + j] = std::sqrt((n[j] + 1.0) * ac);
      }
      if (n[j] > 0 && ac > 0) {
        std::copy(n, n + n_terms_, probe.begin());
        probe[j]--;
        down_[a * n_terms_ + j] = static_cast<std::int32_t>(index.at(occ_key(probe.data(), n_terms_)));
        s_down_[a * n_terms_ + j] = std::sqrt(n[j] / ac);
      }
    }
  }
}

std::size_t Hierarchy::index_of(const std::vector<std::uint8_t>& occ) const {
  if (static_cast<int>(occ.size()) != n_terms_) throw std::invalid_argument("heom: occupation size");
  for (std::size_t a = 0; a < n_ados_; ++a)
    if (std::equal(occ.begin(), occ.end(), occupation(a))) return a;
  throw std::out_of_range("heom: occupation not in hierarchy");
}

BlockGenerator::BlockGenerator(const Hierarchy& h, Block b, Mode mode)
    : h_(&h), block_(b), mode_(mode), n_ados_(h.n_ados()) {
  const auto& sys = h.sys();
  Eigen::MatrixXcd hk, hb;
  std::vector<Eigen::VectorXd> vk(sys.n_sites), vb(sys.n_sites);
  if (b.full()) {
    dk_ = db_ = sys.dim_total();
    hk = hb = sys.h_full(h.omega_ref_cm1());
    for (int s = 0; s < sys.n_sites; ++s) vk[s] = vb[s] = sys.coupling_full(s);
  } else {
    if (b.ket >= sys.n_manifolds() || b.bra >= sys.n_manifolds())
      throw std::invalid_argument("heom: block manifold out of range");
    dk_ = sys.dims[b.ket];
    db_ = sys.dims[b.bra];
    hk = sys.h[b.ket];
    hk.diagonal().array() -= b.ket * h.omega_ref_cm1();
    hb = sys.h[b.bra];
    hb.diagonal().array() -= b.bra * h.omega_ref_cm1();
    for (int s = 0; s < sys.n_sites; ++s) {
      vk[s] = sys.coupling[s][b.ket];
      vb[s] = sys.coupling[s][b.bra];
    }
  }
  hk_ = hk * kTwoPiC;  // cm^-1 -> rad/fs
  hb_ = hb * kTwoPiC;
  if (mode_ == Mode::window) {
    hk_ = hk_.transpose().eval();
    hb_ = hb_.transpose().eval();
  }

  const int B = dk_ * db_;
  w_ = Eigen::VectorXd::Zero(B);
  for (int s = 0; s < sys.n_sites; ++s)
    for (int i = 0; i < dk_; ++i)
      for (int l = 0; l < db_; ++l) {
        const double dv = vk[s](i) - vb[s](l);
        w_(i * db_ + l) += h.site_delta(s) * dv * dv;
      }

  // Elementwise coupling masks per term: up uses (vk - vb), down uses (c vk - d vb);
  // in window mode the roles of the tables swap and coefficients come from the
  // neighbor's occupation.
  const int M = h.n_terms();
  std::vector<std::vector<cplx>> mask(M), dmat(M);
  for (int j = 0; j < M; ++j) {
    const int s = h.term_site(j);
    mask[j].resize(B);
    dmat[j].resize(B);
    for (int i = 0; i < dk_; ++i)
      for (int l = 0; l < db_; ++l) {
        mask[j][i * db_ + l] = vk[s](i) - vb[s](l);
        dmat[j][i * db_ + l] = h.term_c(j) * vk[s](i) - h.term_d(j) * vb[s](l);
      }
  }
  auto nonzero = [&](const std::vector<cplx>& v) {
    for (const cplx& z : v)
      if (std::abs(z) > 0) return true;
    return false;
  };

  row_.assign(n_ados_ + 1, 0);
  std::vector<std::int32_t> nbr;
  std::vector<cplx> coef;
  for (std::size_t a = 0; a < n_ados_; ++a) {
    for (int j = 0; j < M; ++j) {
      const std::int32_t u = h.up(a, j), d = h.down(a, j);
      if (u >= 0) {
        const cplx scale = (mode_ == Mode::forward) ? -kI * h.s_up(a, j) : -kI * h.s_down(u, j);
        const auto& m = (mode_ == Mode::forward) ? mask[j] : dmat[j];
        if (std::abs(scale) > 0 && nonzero(m)) {
          nbr.push_back(u);
          for (int e = 0; e < B; ++e) coef.push_back(scale * m[e]);
        }
      }
      if (d >= 0) {
        const cplx scale = (mode_ == Mode::forward) ? -kI * h.s_down(a, j) : -kI * h.s_up(d, j);
        const auto& m = (mode_ == Mode::forward) ? dmat[j] : mask[j];
        if (std::abs(scale) > 0 && nonzero(m)) {
          nbr.push_back(d);
          for (int e = 0; e < B; ++e) coef.push_back(scale * m[e]);
        }
      }
    }
    row_[a + 1] = static_cast<std::int32_t>(nbr.size());
  }
  nbr_ = std::move(nbr);
  coupling_ = std::move(coef);
}

void BlockGenerator::local_rhs(const cplx* x, cplx* dx) const {
  const int B = dk_ * db_;
  const cplx* hk = hk_.data();  // column-major
  const cplx* hb = hb_.data();
  for (std::size_t a = 0; a < n_ados_; ++a) {
    const cplx* xa = x + a * B;
    cplx* da = dx + a * B;
    const cplx dec = h_->decay(a);
    for (int i = 0; i < dk_; ++i)
      for (int l = 0; l < db_; ++l) {
        cplx comm = 0;
        for (int p = 0; p < dk_; ++p) comm += hk[i + p * dk_] * xa[p * db_ + l];
        for (int q = 0; q < db_; ++q) comm -= xa[i * db_ + q] * hb[q + l * db_];
        const int e = i * db_ + l;
        da[e] = -kI * comm - (dec + w_(e)) * xa[e];
      }
  }
}

void BlockGenerator::rhs(double t_fs, const cplx* x, cplx* dx) const {
  const int B = dk_ * db_;
  local_rhs(x, dx);
  for (std::size_t a = 0; a < n_ados_; ++a) {
    cplx* da = dx + a * B;
    for (std::int32_t e = row_[a]; e < row_[a + 1]; ++e) {
      const cplx* v = coupling_.data() + static_cast<std::size_t>(e) * B;
      const cplx* xn = x + static_cast<std::size_t>(nbr_[e]) * B;
      for (int el = 0; el < B; ++el) da[el] += v[el] * xn[el];
    }
  }
  if (drive_) {
    drive_(t_fs, hdrv_);
    if (hdrv_.rows() != dk_ || hdrv_.cols() != dk_ || dk_ != db_)
      throw std::invalid_argument("heom: drive must be square on the full block");
    Eigen::MatrixXcd hd = hdrv_ * kTwoPiC;
    if (mode_ == Mode::window) hd.transposeInPlace();
    const cplx* hdp = hd.data();
    for (std::size_t a = 0; a < n_ados_; ++a) {
      const cplx* xa = x + a * B;
      cplx* da = dx + a * B;
      for (int i = 0; i < dk_; ++i)
        for (int l = 0; l < db_; ++l) {
          cplx comm = 0;
          for (int p = 0; p < dk_; ++p) comm += hdp[i + p * dk_] * xa[p * db_ + l];
          for (int q = 0; q < db_; ++q) comm -= xa[i * db_ + q] * hdp[q + l * db_];
          da[i * db_ + l] -= kI * comm;
        }
    }
  }
}

void BlockGenerator::step(double& t_fs, double dt_fs, cplx* x) {
  const std::size_t n = state_size();
  if (k1_.size() != n) {
    k1_.resize(n); k2_.resize(n); k3_.resize(n); k4_.resize(n); tmp_.resize(n);
  }
  rhs(t_fs, x, k1_.data());
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt_fs * k1_[i];
  rhs(t_fs + 0.5 * dt_fs, tmp_.data(), k2_.data());
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * dt_fs * k2_[i];
  rhs(t_fs + 0.5 * dt_fs, tmp_.data(), k3_.data());
  for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + dt_fs * k3_[i];
  rhs(t_fs + dt_fs, tmp_.data(), k4_.data());
  const double w = dt_fs / 6.0;
  for (std::size_t i = 0; i < n; ++i) x[i] += w * (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]);
  t_fs += dt_fs;
}

void BlockGenerator::propagate(double t0_fs, double dt_fs, int n_steps, cplx* x, int sample_every,
                               const std::function<void(int, const cplx*)>& on_sample) {
  double t = t0_fs;
  auto guard = [&](int at) {
    if (!std::isfinite(x[0].real()) || !std::isfinite(std::abs(x[state_size() / 2])))
      throw std::runtime_error("heom: propagation diverged (NaN) at step " + std::to_string(at));
  };
  if (on_sample && sample_every > 0) on_sample(0, x);
  for (int s = 1; s <= n_steps; ++s) {
    step(t, dt_fs, x);
    if (on_sample && sample_every > 0 && (s % sample_every == 0 || s == n_steps)) {
      guard(s);
      on_sample(s, x);
    }
  }
  guard(n_steps);
}

std::size_t BlockGenerator::working_bytes() const {
  return state_size() * sizeof(cplx) * 6 + coupling_.size() * sizeof(cplx) +
         nbr_.size() * sizeof(std::int32_t);
}

BlockState apply_dipole(const Hierarchy& h, const BlockState& in, Side side, Part part) {
  if (in.block.full()) throw std::invalid_argument("heom: apply_dipole needs a manifold block");
  const auto& sys = h.sys();
  const int mk = in.block.ket, mb = in.block.bra;
  const int dk = sys.dims[mk], db = sys.dims[mb];

  int nk = mk, nb = mb;
  if (side == Side::ket) nk += (part == Part::raise_op) ? 1 : -1;
  else nb += (part == Part::raise_op) ? 1 : -1;

  BlockState out;
  out.block = {-1, -1};
  if (nk < 0 || nb < 0 || nk >= sys.n_manifolds() || nb >= sys.n_manifolds()) return out;
  if (sys.dims[nk] == 0 || sys.dims[nb] == 0) return out;

  Eigen::MatrixXcd op;  // ket: out = op * X ; bra: out = X * op
  if (side == Side::ket)
    op = (part == Part::raise_op) ? Eigen::MatrixXcd(sys.dip_up[mk])
                                  : Eigen::MatrixXcd(sys.dip_up[nk].adjoint());
  else
    op = (part == Part::raise_op) ? Eigen::MatrixXcd(sys.dip_up[mb].adjoint())
                                  : Eigen::MatrixXcd(sys.dip_up[nb]);

  const int odk = sys.dims[nk], odb = sys.dims[nb];
  out.block = {nk, nb};
  out.x.assign(h.n_ados() * odk * odb, 0.0);
  using RM = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (std::size_t a = 0; a < h.n_ados(); ++a) {
    Eigen::Map<const RM> X(in.x.data() + a * dk * db, dk, db);
    Eigen::Map<RM> Y(out.x.data() + a * odk * odb, odk, odb);
    if (side == Side::ket) Y = op * X;
    else Y = X * op;
  }
  return out;
}

cplx trace_block(const Hierarchy& h, const BlockState& s) {
  const auto& sys = h.sys();
  if (s.block.full()) {
    const int d = sys.dim_total();
    cplx tr = 0;
    for (int i = 0; i < d; ++i) tr += s.x[i * d + i];
    return tr;
  }
  if (s.block.ket != s.block.bra) throw std::invalid_argument("heom: trace needs ket == bra");
  const int d = sys.dims[s.block.ket];
  cplx tr = 0;
  for (int i = 0; i < d; ++i) tr += s.x[i * d + i];
  return tr;
}

double hermiticity_defect(const Hierarchy& h, const BlockState& s) {
  const auto& sys = h.sys();
  if (!s.block.full() && s.block.ket != s.block.bra)
    throw std::invalid_argument("heom: hermiticity needs a diagonal block");
  const int d = s.block.full() ? sys.dim_total() : sys.dims[s.block.ket];
  double worst = 0;
  for (int i = 0; i < d; ++i)
    for (int l = 0; l < d; ++l)
      worst = std::max(worst, std::abs(s.x[i * d + l] - std::conj(s.x[l * d + i])));
  return worst;
}

Eigen::MatrixXcd physical_matrix(const Hierarchy& h, const BlockState& s) {
  const auto& sys = h.sys();
  const int dk = s.block.full() ? sys.dim_total() : sys.dims[s.block.ket];
  const int db = s.block.full() ? sys.dim_total() : sys.dims[s.block.bra];
  using RM = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RM>(s.x.data(), dk, db);
}

BlockState ground_state(const Hierarchy& h) {
  BlockState s;
  s.block = {-1, -1};
  const int d = h.sys().dim_total();
  s.x.assign(h.n_ados() * d * d, 0.0);
  s.x[0] = 1.0;
  return s;
}

}  // namespace heom2d::heom
