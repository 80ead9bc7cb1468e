// runner.cpp - the work behind the CLI subcommands: trajectory runs, the kernel ->
// convolution -> spectra pipeline, detuning sweeps, plot re-rendering from a finished
// run directory, and CRC-stamped manifest bookkeeping.
#include "heom2d/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heom2d/bath.hpp"
#include "heom2d/heom.hpp"
#include "heom2d/io.hpp"
#include "heom2d/model.hpp"
#include "heom2d/pulses.hpp"
#include "heom2d/response.hpp"
#include "heom2d/spectra.hpp"
#include "heom2d/threading.hpp"
#include "json.hpp"

namespace heom2d::run {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kTool = "heom2d 0.1.0";

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void log_line(const std::string& m) {
  std::fprintf(stderr, "[heom2d] %s\n", m.c_str());
  std::fflush(stderr);
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const config::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  } catch (const ResourceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kResourceError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  } catch (const std::bad_alloc&) {
    std::fprintf(stderr, "error: out of memory\n");
    return kResourceError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumericalError;
  }
}

std::string g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string hex8(unsigned v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

bool read_file(const std::string& path, std::vector<char>& out) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) return false;
  const std::streamsize n = in.tellg();
  in.seekg(0);
  out.resize(static_cast<std::size_t>(n));
  in.read(out.data(), n);
  return static_cast<bool>(in);
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Collects relative paths as they are written; checksums are taken at the end so the
// manifest always describes the bytes actually on disk.
struct Manifest {
  Manifest(std::string d, std::string cmd) : dir(std::move(d)), command(std::move(cmd)) {}

  std::string dir, command;
  json diag = json::object();
  std::vector<std::string> files;

  void add(const std::string& rel) { files.push_back(rel); }

  void write(const config::RunConfig* c, double wall_s) {
    json j;
    j["tool"] = kTool;
    j["command"] = command;
    j["wall_time_s"] = wall_s;
    j["diagnostics"] = diag;
    if (c) j["resolved_config"] = config::dump(*c);
    json f = json::object();
    for (const auto& rel : files) {
      std::vector<char> bytes;
      if (!read_file(dir + "/" + rel, bytes))
        throw std::runtime_error("manifest: missing output file '" + rel + "'");
      f[rel] = hex8(io::crc32(bytes.data(), bytes.size()));
    }
    j["files"] = f;
    io::write_text(dir + "/manifest.json", j.dump(1) + "\n");
  }
};

// Everything derived from the config that the commands share: aggregate parameters,
// manifold-blocked operators, one correlation expansion per site, reference frequency.
struct Setup {
  model::AggregateParams params;
  model::SystemOps sys;
  std::vector<bath::CorrelationExpansion> site_exp;
  double omega_ref = 0;
  int workers = 1;
};

Setup build_setup(const config::RunConfig& c, const std::vector<double>* site_shift = nullptr) {
  Setup su;
  su.params = config::aggregate_params(c);
  if (site_shift) {
    for (std::size_t i = 0; i < su.params.site_energies_cm1.size(); ++i)
      su.params.site_energies_cm1[i] += (*site_shift)[i];
  }
  su.sys = c.model.vib_nmax > 0 ? model::vibronic_system(su.params, c.model.vib_nmax)
                                : model::electronic_system(su.params);
  su.omega_ref = c.prop.omega_ref_cm1.value_or(c.pulses.omega1_cm1);
  su.workers = c.workers > 0 ? c.workers : default_workers();
  const bool modes_in_bath = c.model.vib_nmax == 0;
  for (int site = 0; site < su.params.n_sites(); ++site) {
    bath::BathSpec b;
    b.drude_reorg_cm1 = c.bath.drude_reorg_cm1;
    b.drude_relax_fs = c.bath.drude_relax_fs;
    b.temperature_K = c.bath.temperature_K;
    if (modes_in_bath)
      for (const auto& m : su.params.modes)
        if (m.site == site) b.modes.push_back(m);
    if (b.drude_reorg_cm1 <= 0 && b.modes.empty())
      su.site_exp.emplace_back();  // decoupled site
    else
      su.site_exp.push_back(bath::correlation_expansion(b, c.bath.matsubara_terms));
  }
  return su;
}

void check_budget(const config::RunConfig& c, double bytes, const std::string& what) {
  const double mb = bytes / (1024.0 * 1024.0);
  if (mb > c.prop.memory_budget_mb) {
    throw ResourceError("resource: " + what + " needs about " + g(mb) +
                        " MB, budget is " + g(c.prop.memory_budget_mb) + " MB");
  }
}

// Bytes of one hierarchy state for the largest manifold pair (kernel engine blocks).
double pair_state_bytes(const heom::Hierarchy& h) {
  double mx = 1;
  for (int a : h.sys().dims)
    for (int b : h.sys().dims) mx = std::max(mx, static_cast<double>(a) * b);
  return static_cast<double>(h.n_ados()) * mx * 16.0;
}

heom::BlockState make_initial(const heom::Hierarchy& h, const config::RunConfig& c) {
  const model::SystemOps& sys = h.sys();
  const config::InitialState is = config::parse_initial_state(c.prop.initial_state);
  using Kind = config::InitialState::Kind;
  heom::BlockState s;
  if (is.kind == Kind::ground) {
    s.block = {0, 0};
    const int d = sys.dims[0];
    s.x.assign(h.n_ados() * static_cast<std::size_t>(d) * d, cplx(0));
    s.x[0] = 1.0;
    return s;
  }
  if (sys.n_manifolds() < 2 || sys.dims[1] == 0)
    throw config::ConfigError("config: initial_state requires a single-excitation manifold");
  s.block = {1, 1};
  const int d = sys.dims[1];
  s.x.assign(h.n_ados() * static_cast<std::size_t>(d) * d, cplx(0));
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  if (is.kind == Kind::site) {
    if (is.a < 0 || is.a >= sys.n_sites)
      throw config::ConfigError("config: initial_state site index out of range");
    const int vdim = d / sys.n_sites;
    rho(is.a * vdim, is.a * vdim) = 1.0;
  } else {
    const model::Eigensystem es = model::diagonalize_manifold(sys, 1);
    const int hi = std::max(is.a, is.kind == Kind::coherence ? is.b : is.a);
    if (is.a < 0 || hi >= d)
      throw config::ConfigError("config: initial_state eigenstate index out of range");
    Eigen::VectorXcd v = es.vectors.col(is.a);
    if (is.kind == Kind::coherence)
      v = ((es.vectors.col(is.a) + es.vectors.col(is.b)) / std::sqrt(2.0)).eval();
    rho = v * v.adjoint();
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s.x[static_cast<std::size_t>(i) * d + j] = rho(i, j);
  return s;
}

std::vector<double> uniform_axis(double vmax, double step) {
  const int n = static_cast<int>(std::floor(vmax / step + 1e-9)) + 1;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i * step;
  return v;
}

response::ScanGrid scan_from(const config::RunConfig& c) {
  response::ScanGrid s;
  s.taus_fs = uniform_axis(c.response.tau_max_fs, c.response.tau_step_fs);
  s.Ts_fs = c.response.T_values_fs;
  s.ts_fs = uniform_axis(c.response.t_max_fs, c.response.t_step_fs);
  pulses::Pulse p;
  p.fwhm_fs = c.pulses.duration_fs;
  // Rounded up to the propagation lattice: the phase-cycled path starts at -support.
  const double raw = c.response.support_sigma * 2.0 * p.sigma_fs();
  s.support_fs = std::ceil(raw / c.prop.dt_fs - 1e-9) * c.prop.dt_fs;
  return s;
}

std::array<pulses::Pulse, 3> base_pulses(const config::RunConfig& c, double delta_omega_cm1) {
  pulses::Pulse p;
  p.fwhm_fs = c.pulses.duration_fs;
  p.amplitude_cm1 = c.pulses.amplitude_cm1;
  std::array<pulses::Pulse, 3> b{p, p, p};
  b[0].carrier_cm1 = c.pulses.omega1_cm1;
  b[1].carrier_cm1 = c.pulses.omega1_cm1 + delta_omega_cm1;
  b[2].carrier_cm1 = c.pulses.omega1_cm1 - delta_omega_cm1;
  return b;
}

// Cache identity for a kernel set: everything the kernels depend on (system, bath,
// hierarchy, grids) and nothing they do not (pulse carriers, amplitudes, detunings),
// so one cached set serves a whole detuning sweep.
std::string kernel_fingerprint(const config::RunConfig& c, const Setup& su,
                               const response::ScanGrid& scan,
                               const std::vector<response::Shape>& shapes) {
  std::ostringstream o;
  o.precision(17);
  o << "sites:";
  for (double e : su.params.site_energies_cm1) o << e << ',';
  o << ";J:";
  for (int i = 0; i < su.params.coupling_cm1.rows(); ++i)
    for (int j = 0; j < su.params.coupling_cm1.cols(); ++j) o << su.params.coupling_cm1(i, j) << ',';
  o << ";mu:";
  for (double d : su.params.dipoles) o << d << ',';
  o << ";modes:";
  for (const auto& m : su.params.modes)
    o << m.site << '/' << m.freq_cm1 << '/' << m.huang_rhys << '/' << m.damping_fs << ',';
  o << ";vib:" << c.model.vib_nmax;
  o << ";bath:" << c.bath.drude_reorg_cm1 << ',' << c.bath.drude_relax_fs << ','
    << c.bath.temperature_K << ',' << c.bath.matsubara_terms;
  o << ";heom:" << c.prop.depth << ',' << c.prop.dt_fs << ',' << su.omega_ref;
  o << ";grid:" << c.response.kernel_step_fs << ',' << scan.taus_fs.back() << ','
    << scan.ts_fs.back() << ',' << scan.support_fs << ";T:";
  for (double T : scan.Ts_fs) o << T << ',';
  o << ";shapes:";
  for (const auto& s : shapes) o << s.name << ',';
  return o.str();
}

// Compute (or load from the run-directory cache) the kernel set for this scan.
response::KernelSet kernels_for(const heom::Hierarchy& h, const config::RunConfig& c,
                                const Setup& su, const response::ScanGrid& scan,
                                const std::vector<response::Shape>& shapes,
                                const std::vector<response::Diagram>& diagrams,
                                const std::string& cache_stem) {
  const auto grids = response::plan_kernel_grids(shapes, diagrams, scan, c.response.kernel_step_fs);
  double grid_bytes = 0;
  int n3_max = 0;
  for (const auto& gg : grids) {
    if (gg.empty()) continue;
    grid_bytes += 16.0 * gg.n1 * gg.n2 * gg.n3;
    n3_max = std::max(n3_max, gg.n3);
  }
  const double state = pair_state_bytes(h);
  check_budget(c, grid_bytes + (2.0 * n3_max + 12.0 * su.workers) * state, "kernel computation");

  const std::string fp = kernel_fingerprint(c, su, scan, shapes);
  response::KernelSet ks;
  if (!cache_stem.empty()) {
    ks.shapes = shapes;
    try {
      if (io::load_kernels(cache_stem, ks, fp)) {
        log_line("kernel cache hit: " + cache_stem);
        return ks;
      }
    } catch (const std::exception& e) {
      log_line(std::string("kernel cache rejected: ") + e.what());
    }
  }
  response::KernelOptions ko;
  ko.step_fs = c.response.kernel_step_fs;
  ko.dt_fs = c.prop.dt_fs;
  ko.workers = su.workers;
  ko.log = log_line;
  ks = response::compute_kernels(h, shapes, grids, ko);
  if (!cache_stem.empty()) io::save_kernels(cache_stem, ks, fp);
  return ks;
}

void axpy(std::vector<cplx>& acc, const std::vector<cplx>& v, double w) {
  if (acc.empty()) acc.assign(v.size(), cplx(0));
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += w * v[i];
}

void accumulate_signal(response::Signal3& acc, const response::Signal3& s, double w) {
  if (acc.total.empty()) {
    acc.taus_fs = s.taus_fs;
    acc.Ts_fs = s.Ts_fs;
    acc.ts_fs = s.ts_fs;
  }
  axpy(acc.total, s.total, w);
  for (const auto& [k, v] : s.by_class) axpy(acc.by_class[k], v, w);
}

int axis_index(const std::vector<double>& ax, double v) {
  int best = 0;
  double bd = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const double d = std::abs(ax[i] - v);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

struct PeakReport {
  std::string label;
  double req_wtau = 0, req_wt = 0;
  double snap_wtau = 0, snap_wt = 0;
  int i_tau = 0, i_t = 0;
  std::vector<double> tot, gnd, exc;  // |S| at the peak per population time
  spectra::OscillationMetrics m_tot, m_gnd, m_exc;
  double suppression = std::numeric_limits<double>::quiet_NaN();
};

struct AnalysisResult {
  double intensity = 0;     // grid sum of |S_total|^2 at the T closest to 100 fs
  double intensity_T = 0;   // that T
  std::vector<PeakReport> peaks;
};

// Spectra at the snapshot T values, peak transients over all T, oscillation metrics,
// and the data files for all of it. `classes` is false for phase-cycle-only signals,
// where no pathway decomposition exists.
AnalysisResult analyze_signal(const config::RunConfig& c, const Setup& su,
                              const response::Signal3& sig, bool classes,
                              const std::string& dir, const std::string& rel, Manifest& mf) {
  const int ntau = static_cast<int>(sig.taus_fs.size());
  const int nT = static_cast<int>(sig.Ts_fs.size());
  const int nt = static_cast<int>(sig.ts_fs.size());
  spectra::TransformOptions opt;
  opt.zero_pad_factor = c.spectra.zero_pad_factor;
  opt.window_fraction = c.spectra.window_fraction;
  opt.omega_ref_cm1 = su.omega_ref;
  const auto slice_tf = [&](const std::vector<cplx>& v, int iT) {
    return spectra::transform_2d(spectra::signal_slice_at_T(sig, v, iT), ntau, nt,
                                 c.response.tau_step_fs, c.response.t_step_fs, opt);
  };

  // Class groups: ground = bleach pathways, excited = everything else.
  const std::vector<cplx> zero(sig.total.size(), cplx(0));
  const std::vector<cplx>* gnd = &zero;
  std::vector<cplx> exc;
  if (classes) {
    for (const auto& [k, v] : sig.by_class) {
      if (response::ground_class(k))
        gnd = &v;
      else
        axpy(exc, v, 1.0);
    }
  }
  if (exc.empty()) exc = zero;

  // Snapshot spectra per series.
  std::vector<std::pair<std::string, const std::vector<cplx>*>> series;
  series.emplace_back("total", &sig.total);
  if (classes) {
    for (const auto& [k, v] : sig.by_class) series.emplace_back(response::to_string(k), &v);
    series.emplace_back("excited", &exc);
  }
  for (double Ts : c.spectra.spectrum_T_snapshots_fs) {
    const int iT = axis_index(sig.Ts_fs, Ts);
    for (const auto& [name, vec] : series) {
      const spectra::Spectrum2D sp = slice_tf(*vec, iT);
      const std::string stem = "spectrum_" + name + "_T" + g(Ts);
      io::save_spectrum(dir + "/" + stem, sp);
      mf.add(rel + stem + ".bin");
      mf.add(rel + stem + ".json");
      if (c.output.write_csv && name == "total") {
        io::write_spectrum_csv(dir + "/" + stem + ".csv", sp);
        mf.add(rel + stem + ".csv");
      }
      if (c.output.write_plots) {
        io::write_spectrum_ppm(dir + "/" + stem + "_abs.ppm", sp, true);
        io::write_spectrum_ppm(dir + "/" + stem + "_re.ppm", sp, false);
        mf.add(rel + stem + "_abs.ppm");
        mf.add(rel + stem + "_re.ppm");
      }
    }
  }

  // Peak positions: snapped once on the first-snapshot total spectrum, then held
  // fixed so transients sample one grid point across T.
  AnalysisResult res;
  const int iT0 = axis_index(sig.Ts_fs, c.spectra.spectrum_T_snapshots_fs.front());
  const spectra::Spectrum2D sp0 = slice_tf(sig.total, iT0);
  for (std::size_t k = 0; k < c.spectra.peaks_cm1.size(); ++k) {
    const auto& pk = c.spectra.peaks_cm1[k];
    const spectra::Peak p = spectra::locate_peak(sp0, pk[0], pk[1], c.spectra.peak_halfwidth_cm1);
    PeakReport r;
    r.label = "p" + std::to_string(k);
    r.req_wtau = pk[0];
    r.req_wt = pk[1];
    r.snap_wtau = p.snapped_w_tau_cm1;
    r.snap_wt = p.snapped_w_t_cm1;
    r.i_tau = axis_index(sp0.w_tau_cm1, p.snapped_w_tau_cm1);
    r.i_t = axis_index(sp0.w_t_cm1, p.snapped_w_t_cm1);
    r.tot.resize(static_cast<std::size_t>(nT));
    r.gnd.resize(static_cast<std::size_t>(nT));
    r.exc.resize(static_cast<std::size_t>(nT));
    res.peaks.push_back(std::move(r));
  }

  // Transients: one transform per (T, group).
  res.intensity_T = sig.Ts_fs[static_cast<std::size_t>(axis_index(sig.Ts_fs, 100.0))];
  for (int iT = 0; iT < nT; ++iT) {
    const spectra::Spectrum2D st = slice_tf(sig.total, iT);
    if (sig.Ts_fs[static_cast<std::size_t>(iT)] == res.intensity_T) {
      double sum = 0;
      for (const cplx& v : st.s) sum += std::norm(v);
      res.intensity = sum;
    }
    for (auto& r : res.peaks) r.tot[static_cast<std::size_t>(iT)] = std::abs(st.at(r.i_tau, r.i_t));
    if (classes) {
      const spectra::Spectrum2D sg = slice_tf(*gnd, iT);
      const spectra::Spectrum2D se = slice_tf(exc, iT);
      for (auto& r : res.peaks) {
        r.gnd[static_cast<std::size_t>(iT)] = std::abs(sg.at(r.i_tau, r.i_t));
        r.exc[static_cast<std::size_t>(iT)] = std::abs(se.at(r.i_tau, r.i_t));
      }
    }
  }

  // Oscillation metrics over the configured window, per peak and group. A T grid too
  // thin for the window yields empty metrics instead of aborting the run.
  std::vector<std::vector<double>> mrows;
  bool metrics_ok = true;
  for (auto& r : res.peaks) {
    try {
      r.m_tot = spectra::oscillation_metrics(sig.Ts_fs, r.tot, c.spectra.metrics_T_min_fs,
                                             c.spectra.metrics_T_max_fs);
      r.m_gnd = spectra::oscillation_metrics(sig.Ts_fs, r.gnd, c.spectra.metrics_T_min_fs,
                                             c.spectra.metrics_T_max_fs);
      r.m_exc = spectra::oscillation_metrics(sig.Ts_fs, r.exc, c.spectra.metrics_T_min_fs,
                                             c.spectra.metrics_T_max_fs);
    } catch (const std::exception& e) {
      if (metrics_ok) log_line(std::string("oscillation metrics skipped: ") + e.what());
      metrics_ok = false;
    }
    if (r.m_exc.amplitude > 0) r.suppression = r.m_gnd.amplitude / r.m_exc.amplitude;
    const std::string stem = "transient_" + r.label;
    io::write_csv(dir + "/" + stem + ".csv", {"T_fs", "total_abs", "ground_abs", "excited_abs"},
                  [&] {
                    std::vector<std::vector<double>> rows;
                    for (int iT = 0; iT < nT; ++iT)
                      rows.push_back({sig.Ts_fs[static_cast<std::size_t>(iT)],
                                      r.tot[static_cast<std::size_t>(iT)],
                                      r.gnd[static_cast<std::size_t>(iT)],
                                      r.exc[static_cast<std::size_t>(iT)]});
                    return rows;
                  }());
    mf.add(rel + stem + ".csv");
    if (c.output.write_plots) {
      io::write_trace_ppm(dir + "/" + stem + ".ppm", sig.Ts_fs, {r.tot, r.gnd, r.exc});
      mf.add(rel + stem + ".ppm");
    }
    mrows.push_back({static_cast<double>(mrows.size()), r.req_wtau, r.req_wt, r.snap_wtau,
                     r.snap_wt, r.m_tot.baseline, r.m_gnd.amplitude, r.m_gnd.frequency_cm1,
                     r.m_exc.amplitude, r.m_exc.frequency_cm1, r.suppression});
  }
  io::write_csv(dir + "/metrics.csv",
                {"peak", "req_w_tau_cm1", "req_w_t_cm1", "snapped_w_tau_cm1", "snapped_w_t_cm1",
                 "total_baseline", "ground_amp", "ground_freq_cm1", "excited_amp",
                 "excited_freq_cm1", "suppression_ratio"},
                mrows);
  mf.add(rel + "metrics.csv");
  return res;
}

double crosscheck_rel_rms(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0 ? std::sqrt(num / den) : 0.0;
}

// Shared body of spectra2d and sweep: produce the perturbative (and/or phase-cycled)
// signal for one detuning, honoring disorder averaging.
struct SignalOutcome {
  response::Signal3 sig;
  bool classes = true;
  double crosscheck = -1;  // < 0: not performed
};

SignalOutcome one_signal(const config::RunConfig& c, const Setup& su, const heom::Hierarchy& h,
                         const response::KernelSet* ks,
                         const std::vector<response::Diagram>& diagrams,
                         const response::ScanGrid& scan, double dw) {
  const auto base = base_pulses(c, dw);
  SignalOutcome out;
  const bool want_conv = c.response.method != "phasecycle";
  const bool want_pc = c.response.method != "perturbative";
  if (want_conv)
    out.sig = response::convolve(*ks, diagrams, base, scan, su.workers);
  if (want_pc) {
    const double full_state =
        static_cast<double>(h.n_ados()) * su.sys.dim_total() * su.sys.dim_total() * 16.0;
    check_budget(c, (7.0 * su.workers + 3.0) * full_state, "phase-cycled propagation");
    response::PhaseCycle pc;
    pc.counts = c.response.phase_cycle;
    std::vector<cplx> v =
        response::phase_cycled_signal(h, base, scan, pc, c.prop.dt_fs, su.workers, log_line);
    if (want_conv) {
      out.crosscheck = crosscheck_rel_rms(v, out.sig.total);
    } else {
      out.sig.taus_fs = scan.taus_fs;
      out.sig.Ts_fs = scan.Ts_fs;
      out.sig.ts_fs = scan.ts_fs;
      out.sig.total = std::move(v);
      out.classes = false;
    }
  }
  return out;
}

// Disorder loop around one_signal: fresh system, hierarchy, and kernels per sample of
// Gaussian site-energy offsets; results are averaged.
SignalOutcome disorder_signal(const config::RunConfig& c, const response::ScanGrid& scan,
                              const std::vector<response::Shape>& shapes,
                              const std::vector<response::Diagram>& diagrams, double dw) {
  std::mt19937_64 rng(c.spectra.seed);
  std::normal_distribution<double> gauss(0.0, c.model.disorder_sigma_cm1);
  const int n = c.spectra.disorder_samples;
  const double w = 1.0 / n;
  SignalOutcome avg;
  double cross_acc = 0;
  bool any_cross = false;
  for (int s = 0; s < n; ++s) {
    std::vector<double> shift(c.model.site_energies_cm1.size());
    for (double& v : shift) v = gauss(rng);
    const Setup su = build_setup(c, &shift);
    heom::Hierarchy h(su.sys, su.site_exp, {c.prop.depth, su.omega_ref});
    response::KernelSet ks;
    if (c.response.method != "phasecycle") ks = kernels_for(h, c, su, scan, shapes, diagrams, "");
    log_line("disorder sample " + std::to_string(s + 1) + "/" + std::to_string(n));
    SignalOutcome one = one_signal(c, su, h, &ks, diagrams, scan, dw);
    accumulate_signal(avg.sig, one.sig, w);
    avg.classes = one.classes;
    if (one.crosscheck >= 0) {
      cross_acc += one.crosscheck * w;
      any_cross = true;
    }
  }
  if (any_cross) avg.crosscheck = cross_acc;
  return avg;
}

void write_summary_csv(const std::string& path, const std::vector<PeakReport>& peaks,
                       const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> cols{"delta_omega_cm1", "intensity_T_fs", "total_intensity",
                                "intensity_over_first"};
  for (const auto& p : peaks) cols.push_back("sup_" + p.label);
  io::write_csv(path, cols, rows);
}

std::vector<double> summary_row(double dw, const AnalysisResult& ar, double first_intensity) {
  std::vector<double> row{dw, ar.intensity_T, ar.intensity,
                          first_intensity > 0 ? ar.intensity / first_intensity : 1.0};
  for (const auto& p : ar.peaks) row.push_back(p.suppression);
  return row;
}

int propagate_impl(const config::RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Setup su = build_setup(c);
  fs::create_directories(c.output.directory);
  Manifest mf{c.output.directory, "propagate"};

  heom::Hierarchy h(su.sys, su.site_exp, {c.prop.depth, su.omega_ref});
  heom::BlockState st = make_initial(h, c);
  heom::BlockGenerator gen(h, st.block);
  check_budget(c, static_cast<double>(gen.working_bytes()), "trajectory propagation");

  const double dt = c.prop.dt_fs;
  if (c.prop.pre_equilibration_fs > 0) {
    const int pre = static_cast<int>(std::lround(c.prop.pre_equilibration_fs / dt));
    log_line("pre-equilibrating for " + g(pre * dt) + " fs");
    gen.propagate(-pre * dt, dt, pre, st.x.data());
  }

  const int n_steps = static_cast<int>(std::lround(c.prop.t_max_fs / dt));
  const int every = std::max(1, static_cast<int>(std::lround(c.prop.record_every_fs / dt)));
  const int d = gen.dim_ket();
  std::vector<std::string> cols{"t_fs", "trace_re", "trace_im", "herm_defect"};
  for (int i = 0; i < d; ++i) cols.push_back("pop_" + std::to_string(i));
  const bool coh = d <= 6;
  if (coh)
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        cols.push_back("re_" + std::to_string(i) + "_" + std::to_string(j));
        cols.push_back("im_" + std::to_string(i) + "_" + std::to_string(j));
      }

  std::vector<std::vector<double>> rows;
  cplx trace0;
  double max_drift = 0, max_defect = 0;
  gen.propagate(0.0, dt, n_steps, st.x.data(), every, [&](int step, const cplx* x) {
    heom::BlockState view{st.block, std::vector<cplx>(x, x + gen.state_size())};
    const Eigen::MatrixXcd m = heom::physical_matrix(h, view);
    const cplx tr = m.trace();
    if (rows.empty()) trace0 = tr;
    max_drift = std::max(max_drift, std::abs(tr - trace0));
    const double defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
    max_defect = std::max(max_defect, defect);
    std::vector<double> row{step * dt, tr.real(), tr.imag(), defect};
    for (int i = 0; i < d; ++i) row.push_back(m(i, i).real());
    if (coh)
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          row.push_back(m(i, j).real());
          row.push_back(m(i, j).imag());
        }
    rows.push_back(std::move(row));
  });

  io::write_csv(c.output.directory + "/trajectory.csv", cols, rows);
  mf.add("trajectory.csv");
  if (c.output.write_plots && !rows.empty()) {
    std::vector<double> t;
    std::vector<std::vector<double>> pops(static_cast<std::size_t>(d));
    for (const auto& row : rows) {
      t.push_back(row[0]);
      for (int i = 0; i < d; ++i) pops[static_cast<std::size_t>(i)].push_back(row[static_cast<std::size_t>(4 + i)]);
    }
    io::write_trace_ppm(c.output.directory + "/trajectory.ppm", t, pops);
    mf.add("trajectory.ppm");
  }
  io::write_text(c.output.directory + "/resolved.cfg", config::dump(c));
  mf.add("resolved.cfg");

  mf.diag["n_ados"] = h.n_ados();
  mf.diag["n_terms"] = h.n_terms();
  mf.diag["block_dim"] = d;
  mf.diag["trace_drift"] = max_drift;
  mf.diag["hermiticity_defect"] = max_defect;
  mf.write(&c, elapsed_s(t0));
  std::printf("trajectory: %zu samples, trace drift %.3g, hermiticity defect %.3g\n",
              rows.size(), max_drift, max_defect);
  std::printf("wrote %s\n", c.output.directory.c_str());
  return kOk;
}

int spectra2d_impl(const config::RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Setup su = build_setup(c);
  fs::create_directories(c.output.directory);
  Manifest mf{c.output.directory, "spectra2d"};

  const bool dbl = su.sys.n_manifolds() > 2 && su.sys.dims[2] > 0;
  const auto shapes = response::rephasing_shapes(dbl);
  const auto diagrams = response::enumerate_diagrams(shapes);
  const response::ScanGrid scan = scan_from(c);
  const bool disordered = c.spectra.disorder_samples > 0 && c.model.disorder_sigma_cm1 > 0;

  SignalOutcome out;
  if (disordered) {
    out = disorder_signal(c, scan, shapes, diagrams, c.pulses.delta_omega_cm1);
  } else {
    heom::Hierarchy h(su.sys, su.site_exp, {c.prop.depth, su.omega_ref});
    mf.diag["n_ados"] = h.n_ados();
    response::KernelSet ks;
    if (c.response.method != "phasecycle") {
      const std::string stem =
          c.output.write_kernels ? c.output.directory + "/kernels" : std::string();
      ks = kernels_for(h, c, su, scan, shapes, diagrams, stem);
      if (!stem.empty()) {
        mf.add("kernels.bin");
        mf.add("kernels.json");
      }
    }
    out = one_signal(c, su, h, &ks, diagrams, scan, c.pulses.delta_omega_cm1);
  }
  if (out.crosscheck >= 0) {
    mf.diag["crosscheck_rel_rms"] = out.crosscheck;
    log_line("phase-cycle cross-check rel RMS = " + g(out.crosscheck));
  }

  const AnalysisResult ar = analyze_signal(c, su, out.sig, out.classes, c.output.directory, "", mf);
  write_summary_csv(c.output.directory + "/summary.csv", ar.peaks,
                    {summary_row(c.pulses.delta_omega_cm1, ar, 0)});
  mf.add("summary.csv");
  io::write_text(c.output.directory + "/resolved.cfg", config::dump(c));
  mf.add("resolved.cfg");
  mf.diag["total_intensity"] = ar.intensity;
  mf.diag["intensity_T_fs"] = ar.intensity_T;
  mf.write(&c, elapsed_s(t0));

  std::printf("spectra2d: delta_omega = %s cm^-1, total intensity %.6g at T = %s fs\n",
              g(c.pulses.delta_omega_cm1).c_str(), ar.intensity, g(ar.intensity_T).c_str());
  for (const auto& p : ar.peaks)
    std::printf("  %s at (%s, %s): ground amp %.3g, excited amp %.3g, suppression %.3g\n",
                p.label.c_str(), g(p.snap_wtau).c_str(), g(p.snap_wt).c_str(),
                p.m_gnd.amplitude, p.m_exc.amplitude, p.suppression);
  std::printf("wrote %s\n", c.output.directory.c_str());
  return kOk;
}

int sweep_impl(const config::RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  if (c.pulses.sweep_delta_omega_cm1.empty())
    throw config::ConfigError(
        "config: [pulses]: sweep_delta_omega_cm1 is required for the sweep command");
  const Setup su = build_setup(c);
  fs::create_directories(c.output.directory);
  Manifest mf{c.output.directory, "sweep"};

  const bool dbl = su.sys.n_manifolds() > 2 && su.sys.dims[2] > 0;
  const auto shapes = response::rephasing_shapes(dbl);
  const auto diagrams = response::enumerate_diagrams(shapes);
  const response::ScanGrid scan = scan_from(c);
  const bool disordered = c.spectra.disorder_samples > 0 && c.model.disorder_sigma_cm1 > 0;

  // The kernels are pulse-independent, so the sweep computes them once. The sweep is
  // perturbative by construction; the phase-cycled path cannot reuse anything.
  std::unique_ptr<heom::Hierarchy> h;
  response::KernelSet ks;
  if (!disordered) {
    h = std::make_unique<heom::Hierarchy>(su.sys, su.site_exp,
                                          heom::HierarchyOptions{c.prop.depth, su.omega_ref});
    mf.diag["n_ados"] = h->n_ados();
    const std::string stem =
        c.output.write_kernels ? c.output.directory + "/kernels" : std::string();
    ks = kernels_for(*h, c, su, scan, shapes, diagrams, stem);
    if (!stem.empty()) {
      mf.add("kernels.bin");
      mf.add("kernels.json");
    }
  }
  config::RunConfig cp = c;
  cp.response.method = "perturbative";

  std::vector<std::vector<double>> rows;
  std::vector<PeakReport> peak_shape;
  std::vector<std::vector<double>> sup_by_peak;
  std::ostringstream report;
  double first_intensity = 0;
  for (double dw : c.pulses.sweep_delta_omega_cm1) {
    log_line("sweep: delta_omega = " + g(dw) + " cm^-1");
    SignalOutcome out;
    if (disordered)
      out = disorder_signal(cp, scan, shapes, diagrams, dw);
    else
      out = one_signal(cp, su, *h, &ks, diagrams, scan, dw);
    const std::string sub = "dw" + g(dw);
    fs::create_directories(c.output.directory + "/" + sub);
    const AnalysisResult ar = analyze_signal(cp, su, out.sig, out.classes,
                                             c.output.directory + "/" + sub, sub + "/", mf);
    if (rows.empty()) {
      first_intensity = ar.intensity;
      peak_shape = ar.peaks;
      sup_by_peak.assign(ar.peaks.size(), {});
    }
    rows.push_back(summary_row(dw, ar, first_intensity));
    for (std::size_t k = 0; k < ar.peaks.size(); ++k)
      sup_by_peak[k].push_back(ar.peaks[k].suppression);
  }

  report << "detuning sweep: ground/excited oscillation suppression per peak\n";
  for (std::size_t k = 0; k < sup_by_peak.size(); ++k) {
    bool mono = true;
    for (std::size_t i = 1; i < sup_by_peak[k].size(); ++i)
      if (sup_by_peak[k][i] > sup_by_peak[k][i - 1] * 1.05 + 1e-12) mono = false;
    report << "peak p" << k << " at (" << g(peak_shape[k].req_wtau) << ", "
           << g(peak_shape[k].req_wt) << "):";
    for (double v : sup_by_peak[k]) report << ' ' << g(v);
    report << " -> non-increasing: " << (mono ? "yes" : "no") << '\n';
  }
  report << "total intensity over first:";
  for (const auto& row : rows) report << ' ' << g(row[3]);
  report << '\n';
  io::write_text(c.output.directory + "/sweep_report.txt", report.str());
  mf.add("sweep_report.txt");
  write_summary_csv(c.output.directory + "/sweep_summary.csv", peak_shape, rows);
  mf.add("sweep_summary.csv");
  io::write_text(c.output.directory + "/resolved.cfg", config::dump(c));
  mf.add("resolved.cfg");
  mf.write(&c, elapsed_s(t0));

  std::fputs(report.str().c_str(), stdout);
  std::printf("wrote %s\n", c.output.directory.c_str());
  return kOk;
}

// Minimal reader for the CSVs this tool writes: one header line, numeric rows.
bool read_csv(const std::string& path, std::vector<std::string>& cols,
              std::vector<std::vector<double>>& rows) {
  std::vector<char> bytes;
  if (!read_file(path, bytes)) return false;
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  cols.clear();
  rows.clear();
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      parts.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (header) {
      cols = parts;
      header = false;
    } else {
      std::vector<double> row;
      for (const auto& p : parts) row.push_back(std::strtod(p.c_str(), nullptr));
      rows.push_back(std::move(row));
    }
  }
  return !cols.empty();
}

std::string basename_of(const std::string& rel) {
  const std::size_t slash = rel.find_last_of('/');
  return slash == std::string::npos ? rel : rel.substr(slash + 1);
}

bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

int plotdata_impl(const std::string& run_dir) {
  const std::string mpath = run_dir + "/manifest.json";
  if (!fs::exists(mpath))
    throw config::ConfigError("plotdata: no manifest.json in '" + run_dir + "'");
  json j;
  try {
    j = json::parse(io::read_text(mpath));
  } catch (const json::exception&) {
    throw std::runtime_error("plotdata: corrupt manifest in '" + run_dir + "'");
  }
  if (!j.contains("files") || !j["files"].is_object())
    throw std::runtime_error("plotdata: corrupt manifest in '" + run_dir + "'");

  int checked = 0;
  for (const auto& [rel, crc] : j["files"].items()) {
    std::vector<char> bytes;
    if (!read_file(run_dir + "/" + rel, bytes))
      throw std::runtime_error("plotdata: missing output file '" + rel + "'");
    if (hex8(io::crc32(bytes.data(), bytes.size())) != crc.get<std::string>())
      throw std::runtime_error("plotdata: checksum mismatch in '" + rel + "'");
    ++checked;
  }

  std::vector<std::string> made;
  for (const auto& [rel, crc] : j["files"].items()) {
    const std::string base = basename_of(rel);
    if (base.rfind("spectrum_", 0) == 0 && ends_with(rel, ".json")) {
      const std::string stem = rel.substr(0, rel.size() - 5);
      spectra::Spectrum2D sp;
      if (!io::load_spectrum(run_dir + "/" + stem, sp)) continue;
      io::write_spectrum_ppm(run_dir + "/" + stem + "_abs.ppm", sp, true);
      io::write_spectrum_ppm(run_dir + "/" + stem + "_re.ppm", sp, false);
      made.push_back(stem + "_abs.ppm");
      made.push_back(stem + "_re.ppm");
    } else if (base.rfind("transient_", 0) == 0 && ends_with(rel, ".csv")) {
      std::vector<std::string> cols;
      std::vector<std::vector<double>> rows;
      if (!read_csv(run_dir + "/" + rel, cols, rows) || cols.size() < 2) continue;
      std::vector<double> x;
      std::vector<std::vector<double>> ys(cols.size() - 1);
      for (const auto& row : rows) {
        x.push_back(row.at(0));
        for (std::size_t k = 1; k < cols.size(); ++k) ys[k - 1].push_back(row.at(k));
      }
      const std::string stem = rel.substr(0, rel.size() - 4);
      io::write_trace_ppm(run_dir + "/" + stem + ".ppm", x, ys);
      made.push_back(stem + ".ppm");
    } else if (base == "trajectory.csv") {
      std::vector<std::string> cols;
      std::vector<std::vector<double>> rows;
      if (!read_csv(run_dir + "/" + rel, cols, rows)) continue;
      std::vector<double> x;
      std::vector<std::size_t> keep;
      for (std::size_t k = 0; k < cols.size(); ++k)
        if (cols[k].rfind("pop_", 0) == 0) keep.push_back(k);
      if (keep.empty()) continue;
      std::vector<std::vector<double>> ys(keep.size());
      for (const auto& row : rows) {
        x.push_back(row.at(0));
        for (std::size_t k = 0; k < keep.size(); ++k) ys[k].push_back(row.at(keep[k]));
      }
      const std::string stem = rel.substr(0, rel.size() - 4);
      io::write_trace_ppm(run_dir + "/" + stem + ".ppm", x, ys);
      made.push_back(stem + ".ppm");
    }
  }
  std::printf("verified %d files, rendered %zu plots in %s\n", checked, made.size(),
              run_dir.c_str());
  return kOk;
}

int validate_impl(const config::RunConfig& c) {
  const Setup su = build_setup(c);
  std::fputs(config::dump(c).c_str(), stdout);
  std::printf("# derived\n");
  std::ostringstream dims;
  for (int d : su.sys.dims) dims << ' ' << d;
  std::printf("# manifold dims:%s\n", dims.str().c_str());
  if (su.sys.n_manifolds() > 1 && su.sys.dims[1] > 0) {
    const model::Eigensystem es = model::diagonalize_manifold(su.sys, 1);
    std::ostringstream ev;
    ev.precision(10);
    for (int i = 0; i < es.values.size(); ++i) ev << ' ' << es.values(i);
    std::printf("# one-excitation eigenvalues (cm^-1):%s\n", ev.str().c_str());
  }
  int n_terms = 0;
  double max_rate = 0;
  bool matsu_ok = true;
  int suggested = 0;
  for (const auto& ex : su.site_exp) {
    n_terms += static_cast<int>(ex.terms.size());
    for (const auto& t : ex.terms) max_rate = std::max(max_rate, t.rate_fs.real());
    matsu_ok = matsu_ok && ex.matsubara_ok;
    suggested = std::max(suggested, ex.suggested_K);
  }
  const std::size_t n_ados = heom::ado_count(n_terms, c.prop.depth);
  std::printf("# hierarchy: %zu ADOs (%d exponential terms, depth %d)\n", n_ados, n_terms,
              c.prop.depth);
  std::printf("# matsubara truncation ok: %s (suggested terms: %d)\n", matsu_ok ? "yes" : "no",
              suggested);
  const double stab = c.prop.dt_fs * c.prop.depth * max_rate;
  std::printf("# rk4 stability product dt*depth*max_rate = %.3g (must stay below 2.78)\n", stab);
  double dmax = 0;
  for (int a : su.sys.dims) dmax = std::max(dmax, static_cast<double>(a));
  const double state_mb = static_cast<double>(n_ados) * dmax * dmax * 16.0 / (1024.0 * 1024.0);
  std::printf("# largest blocked state: %.3g MB (budget %g MB)\n", state_mb,
              c.prop.memory_budget_mb);
  std::printf("ok\n");
  return kOk;
}

}  // namespace

int propagate(const config::RunConfig& c) {
  return guarded([&] { return propagate_impl(c); });
}

int spectra2d(const config::RunConfig& c) {
  return guarded([&] { return spectra2d_impl(c); });
}

int sweep(const config::RunConfig& c) {
  return guarded([&] { return sweep_impl(c); });
}

int plotdata(const std::string& run_dir) {
  return guarded([&] { return plotdata_impl(run_dir); });
}

int validate_config(const config::RunConfig& c) {
  return guarded([&] { return validate_impl(c); });
}

}  // namespace heom2d::run
