// config.cpp - strict sectioned key=value parser, defaults, validation, canonical dump.
#include "heom2d/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace heom2d::config {

namespace {

[[noreturn]] void fail(int line, const std::string& where, const std::string& msg) {
  std::ostringstream o;
  o << "config: line " << line << ": " << where << ": " << msg;
  throw ConfigError(o.str());
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& tok, int line, const std::string& where) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    fail(line, where, "expected a number, got '" + tok + "'");
  }
  if (used != tok.size()) fail(line, where, "trailing characters in number '" + tok + "'");
  if (!std::isfinite(v)) fail(line, where, "value must be finite");
  return v;
}

long long to_int(const std::string& tok, int line, const std::string& where) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    fail(line, where, "expected an integer, got '" + tok + "'");
  }
  if (used != tok.size()) fail(line, where, "trailing characters in integer '" + tok + "'");
  return v;
}

unsigned long long to_u64(const std::string& tok, int line, const std::string& where) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!tok.empty() && tok[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(tok, &used);
  } catch (const std::exception&) {
    fail(line, where, "expected an unsigned integer, got '" + tok + "'");
  }
  if (used != tok.size()) fail(line, where, "trailing characters in integer '" + tok + "'");
  return v;
}

bool to_bool(const std::string& tok, int line, const std::string& where) {
  if (tok == "true") return true;
  if (tok == "false") return false;
  fail(line, where, "expected true or false, got '" + tok + "'");
}

std::vector<double> to_doubles(const std::vector<std::string>& toks, int line,
                               const std::string& where) {
  std::vector<double> out;
  out.reserve(toks.size());
  for (const auto& t : toks) out.push_back(to_double(t, line, where));
  return out;
}

// One scalar token only.
const std::string& one(const std::vector<std::string>& toks, int line, const std::string& where) {
  if (toks.size() != 1) fail(line, where, "expected exactly one value");
  return toks[0];
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> default_T_values() {
  std::vector<double> out;
  for (int T = 100; T <= 1000; T += 20) out.push_back(T);
  return out;
}

InitialState parse_initial_state(const std::string& s) {
  InitialState st;
  auto index_after = [&](std::size_t pos, int& out_a, int* out_b) {
    const std::string rest = s.substr(pos);
    const auto comma = rest.find(',');
    try {
      if (out_b) {
        if (comma == std::string::npos) throw std::invalid_argument("missing comma");
        std::size_t ua = 0, ub = 0;
        out_a = std::stoi(rest.substr(0, comma), &ua);
        *out_b = std::stoi(rest.substr(comma + 1), &ub);
        if (ua != comma || ub != rest.size() - comma - 1) throw std::invalid_argument("trailing");
      } else {
        std::size_t ua = 0;
        out_a = std::stoi(rest, &ua);
        if (ua != rest.size()) throw std::invalid_argument("trailing");
      }
    } catch (const std::exception&) {
      throw ConfigError("config: bad initial_state '" + s + "'");
    }
    if (out_a < 0 || (out_b && *out_b < 0))
      throw ConfigError("config: initial_state indices must be non-negative in '" + s + "'");
  };
  if (s == "ground") {
    st.kind = InitialState::Kind::ground;
  } else if (s.rfind("site:", 0) == 0) {
    st.kind = InitialState::Kind::site;
    index_after(5, st.a, nullptr);
  } else if (s.rfind("exciton:", 0) == 0) {
    st.kind = InitialState::Kind::exciton;
    index_after(8, st.a, nullptr);
  } else if (s.rfind("coherence:", 0) == 0) {
    st.kind = InitialState::Kind::coherence;
    index_after(10, st.a, &st.b);
  } else {
    throw ConfigError("config: initial_state must be ground, site:K, exciton:K or coherence:I,J; got '" +
                      s + "'");
  }
  return st;
}

model::AggregateParams aggregate_params(const RunConfig& c) {
  model::AggregateParams p;
  p.site_energies_cm1 = c.model.site_energies_cm1;
  const int n = p.n_sites();
  p.coupling_cm1 = Eigen::MatrixXd::Zero(n, n);
  for (const auto& t : c.model.couplings) {
    const int i = static_cast<int>(t[0]), j = static_cast<int>(t[1]);
    p.coupling_cm1(i, j) = p.coupling_cm1(j, i) = t[2];
  }
  p.dipoles = c.model.dipoles;
  for (const auto& m : c.model.modes) {
    if (m.site >= 0) {
      p.modes.push_back(m);
    } else {
      for (int s = 0; s < n; ++s) {
        model::Mode copy = m;
        copy.site = s;
        p.modes.push_back(copy);
      }
    }
  }
  return p;
}

RunConfig parse(const std::string& text) {
  RunConfig c;
  bool have_dipoles = false;

  static const std::set<std::string> kSections{"model",    "bath",    "propagation", "pulses",
                                               "response", "spectra", "output",      "run"};
  // Keys that may appear more than once; everything else is set-once.
  static const std::set<std::string> kRepeatable{"model.coupling_cm1", "model.mode",
                                                 "spectra.peak_cm1"};

  std::istringstream in(text);
  std::string raw, section;
  std::set<std::string> seen;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') fail(line, s, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!kSections.count(section)) fail(line, "[" + section + "]", "unknown section");
      continue;
    }

    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, s, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) fail(line, key, "key appears before any [section]");
    if (key.empty()) fail(line, s, "empty key");
    const std::string where = "[" + section + "]." + key;
    const std::string qual = section + "." + key;
    if (!kRepeatable.count(qual) && !seen.insert(qual).second) fail(line, where, "duplicate key");
    const std::vector<std::string> toks = split_ws(value);
    if (toks.empty()) fail(line, where, "missing value");

    if (section == "model") {
      if (key == "site_energies_cm1") {
        c.model.site_energies_cm1 = to_doubles(toks, line, where);
      } else if (key == "coupling_cm1") {
        if (toks.size() != 3) fail(line, where, "expected: site_i site_j J_cm1");
        c.model.couplings.push_back({to_double(toks[0], line, where),
                                     to_double(toks[1], line, where),
                                     to_double(toks[2], line, where)});
      } else if (key == "dipoles") {
        c.model.dipoles = to_doubles(toks, line, where);
        have_dipoles = true;
      } else if (key == "mode") {
        if (toks.size() != 4) fail(line, where, "expected: site freq_cm1 huang_rhys damping_fs");
        model::Mode m;
        m.site = static_cast<int>(to_int(toks[0], line, where));
        m.freq_cm1 = to_double(toks[1], line, where);
        m.huang_rhys = to_double(toks[2], line, where);
        m.damping_fs = to_double(toks[3], line, where);
        c.model.modes.push_back(m);
      } else if (key == "vib_nmax") {
        c.model.vib_nmax = static_cast<int>(to_int(one(toks, line, where), line, where));
      } else if (key == "disorder_sigma_cm1") {
        c.model.disorder_sigma_cm1 = to_double(one(toks, line, where), line, where);
      } else {
        fail(line, where, "unknown key");
      }
    } else if (section == "bath") {
      if (key == "drude_reorg_cm1") {
        c.bath.drude_reorg_cm1 = to_double(one(toks, line, where), line, where);
      } else if (key == "drude_relax_fs") {
        c.bath.drude_relax_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "temperature_K") {
        c.bath.temperature_K = to_double(one(toks, line, where), line, where);
      } else if (key == "matsubara_terms") {
        c.bath.matsubara_terms = static_cast<int>(to_int(one(toks, line, where), line, where));
      } else {
        fail(line, where, "unknown key");
      }
    } else if (section == "propagation") {
      if (key == "depth") {
        c.prop.depth = static_cast<int>(to_int(one(toks, line, where), line, where));
      } else if (key == "dt_fs") {
        c.prop.dt_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "omega_ref_cm1") {
        c.prop.omega_ref_cm1 = to_double(one(toks, line, where), line, where);
      } else if (key == "memory_budget_mb") {
        c.prop.memory_budget_mb = to_double(one(toks, line, where), line, where);
      } else if (key == "t_max_fs") {
        c.prop.t_max_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "record_every_fs") {
        c.prop.record_every_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "pre_equilibration_fs") {
        c.prop.pre_equilibration_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "initial_state") {
        c.prop.initial_state = one(toks, line, where);
      } else {
        fail(line, where, "unknown key");
      }
    } else if (section == "pulses") {
      if (key == "omega1_cm1") {
        c.pulses.omega1_cm1 = to_double(one(toks, line, where), line, where);
      } else if (key == "delta_omega_cm1") {
        c.pulses.delta_omega_cm1 = to_double(one(toks, line, where), line, where);
      } else if (key == "duration_fs") {
        c.pulses.duration_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "amplitude_cm1") {
        c.pulses.amplitude_cm1 = to_double(one(toks, line, where), line, where);
      } else if (key == "sweep_delta_omega_cm1") {
        c.pulses.sweep_delta_omega_cm1 = to_doubles(toks, line, where);
      } else {
        fail(line, where, "unknown key");
      }
    } else if (section == "response") {
      if (key == "method") {
        c.response.method = one(toks, line, where);
      } else if (key == "tau_max_fs") {
        c.response.tau_max_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "tau_step_fs") {
        c.response.tau_step_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "T_values_fs") {
        c.response.T_values_fs = to_doubles(toks, line, where);
      } else if (key == "t_max_fs") {
        c.response.t_max_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "t_step_fs") {
        c.response.t_step_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "kernel_step_fs") {
        c.response.kernel_step_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "support_sigma") {
        c.response.support_sigma = to_double(one(toks, line, where), line, where);
      } else if (key == "phase_cycle") {
        if (toks.size() != 3) fail(line, where, "expected three counts");
        for (int k = 0; k < 3; ++k)
          c.response.phase_cycle[k] = static_cast<int>(to_int(toks[k], line, where));
      } else {
        fail(line, where, "unknown key");
      }
    } else if (section == "spectra") {
      if (key == "zero_pad_factor") {
        c.spectra.zero_pad_factor = static_cast<int>(to_int(one(toks, line, where), line, where));
      } else if (key == "window_fraction") {
        c.spectra.window_fraction = to_double(one(toks, line, where), line, where);
      } else if (key == "peak_halfwidth_cm1") {
        c.spectra.peak_halfwidth_cm1 = to_double(one(toks, line, where), line, where);
      } else if (key == "peak_cm1") {
        if (toks.size() != 2) fail(line, where, "expected: w_tau_cm1 w_t_cm1");
        c.spectra.peaks_cm1.push_back(
            {to_double(toks[0], line, where), to_double(toks[1], line, where)});
      } else if (key == "metrics_T_min_fs") {
        c.spectra.metrics_T_min_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "metrics_T_max_fs") {
        c.spectra.metrics_T_max_fs = to_double(one(toks, line, where), line, where);
      } else if (key == "spectrum_T_snapshots_fs") {
        c.spectra.spectrum_T_snapshots_fs = to_doubles(toks, line, where);
      } else if (key == "disorder_samples") {
        c.spectra.disorder_samples = static_cast<int>(to_int(one(toks, line, where), line, where));
      } else if (key == "seed") {
        c.spectra.seed = to_u64(one(toks, line, where), line, where);
      } else {
        fail(line, where, "unknown key");
      }
    } else if (section == "output") {
      if (key == "directory") {
        c.output.directory = one(toks, line, where);
      } else if (key == "write_kernels") {
        c.output.write_kernels = to_bool(one(toks, line, where), line, where);
      } else if (key == "write_plots") {
        c.output.write_plots = to_bool(one(toks, line, where), line, where);
      } else if (key == "write_csv") {
        c.output.write_csv = to_bool(one(toks, line, where), line, where);
      } else {
        fail(line, where, "unknown key");
      }
    } else {  // run
      if (key == "workers") {
        c.workers = static_cast<int>(to_int(one(toks, line, where), line, where));
      } else {
        fail(line, where, "unknown key");
      }
    }
  }

  // Cross-field validation; building the aggregate catches model-shape problems early.
  auto require = [](bool ok, const std::string& where, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + where + ": " + msg);
  };
  require(!c.model.site_energies_cm1.empty(), "[model].site_energies_cm1", "is required");
  const int n = static_cast<int>(c.model.site_energies_cm1.size());
  if (!have_dipoles) c.model.dipoles.assign(n, 1.0);
  for (const auto& t : c.model.couplings) {
    const double fi = t[0], fj = t[1];
    require(fi == std::floor(fi) && fj == std::floor(fj), "[model].coupling_cm1",
            "site indices must be integers");
    const int i = static_cast<int>(fi), j = static_cast<int>(fj);
    require(i >= 0 && i < n && j >= 0 && j < n && i != j, "[model].coupling_cm1",
            "site indices out of range");
  }
  for (const auto& m : c.model.modes) {
    require(m.site >= -1 && m.site < n, "[model].mode", "site must be -1 (all) or a site index");
    require(m.freq_cm1 > 0, "[model].mode", "frequency must be positive");
    require(m.huang_rhys >= 0 && m.damping_fs >= 0, "[model].mode",
            "huang_rhys and damping must be non-negative");
  }
  require(c.model.vib_nmax >= 0, "[model].vib_nmax", "must be non-negative");
  require(c.model.disorder_sigma_cm1 >= 0, "[model].disorder_sigma_cm1", "must be non-negative");
  try {
    model::validate(aggregate_params(c));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: [model]: ") + e.what());
  }

  require(c.bath.drude_reorg_cm1 >= 0, "[bath].drude_reorg_cm1", "must be non-negative");
  require(c.bath.drude_relax_fs > 0, "[bath].drude_relax_fs", "must be positive");
  require(c.bath.temperature_K > 0, "[bath].temperature_K", "must be positive");
  require(c.bath.matsubara_terms >= 0, "[bath].matsubara_terms", "must be non-negative");

  require(c.prop.depth >= 1, "[propagation].depth", "must be at least 1");
  require(c.prop.dt_fs > 0, "[propagation].dt_fs", "must be positive");
  require(c.prop.memory_budget_mb > 0, "[propagation].memory_budget_mb", "must be positive");
  require(c.prop.t_max_fs >= 0, "[propagation].t_max_fs", "must be non-negative");
  require(c.prop.record_every_fs > 0, "[propagation].record_every_fs", "must be positive");
  require(c.prop.pre_equilibration_fs >= 0, "[propagation].pre_equilibration_fs",
          "must be non-negative");
  parse_initial_state(c.prop.initial_state);

  require(c.pulses.omega1_cm1 > 0, "[pulses].omega1_cm1", "must be positive");
  require(c.pulses.duration_fs > 0, "[pulses].duration_fs", "must be positive");
  require(c.pulses.amplitude_cm1 > 0, "[pulses].amplitude_cm1", "must be positive");
  for (double v : c.pulses.sweep_delta_omega_cm1)
    require(v >= 0, "[pulses].sweep_delta_omega_cm1", "values must be non-negative");

  require(c.response.method == "perturbative" || c.response.method == "phasecycle" ||
              c.response.method == "both",
          "[response].method", "must be perturbative, phasecycle or both");
  require(c.response.tau_max_fs >= 0 && c.response.t_max_fs >= 0, "[response]",
          "tau_max_fs and t_max_fs must be non-negative");
  require(c.response.tau_step_fs > 0 && c.response.t_step_fs > 0 && c.response.kernel_step_fs > 0,
          "[response]", "steps must be positive");
  require(c.response.support_sigma > 0, "[response].support_sigma", "must be positive");
  if (c.response.T_values_fs.empty()) c.response.T_values_fs = default_T_values();
  for (double T : c.response.T_values_fs)
    require(T >= 0, "[response].T_values_fs", "values must be non-negative");
  if (c.response.method != "phasecycle") {
    // The convolution engine samples kernels on the kernel_step lattice.
    const auto on_lattice = [&](double v) {
      const double r = v / c.response.kernel_step_fs;
      return std::abs(r - std::round(r)) < 1e-9;
    };
    require(on_lattice(c.response.tau_step_fs) && on_lattice(c.response.t_step_fs),
            "[response]", "tau_step_fs and t_step_fs must be multiples of kernel_step_fs");
    for (double T : c.response.T_values_fs)
      require(on_lattice(T), "[response].T_values_fs",
              "values must be multiples of kernel_step_fs");
  }
  for (int k = 0; k < 3; ++k)
    require(c.response.phase_cycle[k] >= 1, "[response].phase_cycle", "counts must be positive");

  require(c.spectra.zero_pad_factor >= 1, "[spectra].zero_pad_factor", "must be at least 1");
  require(c.spectra.window_fraction >= 0 && c.spectra.window_fraction <= 1,
          "[spectra].window_fraction", "must be in [0, 1]");
  require(c.spectra.peak_halfwidth_cm1 > 0, "[spectra].peak_halfwidth_cm1", "must be positive");
  require(c.spectra.metrics_T_min_fs < c.spectra.metrics_T_max_fs, "[spectra].metrics_T_min_fs",
          "metrics window must be non-empty");
  require(c.spectra.disorder_samples >= 0, "[spectra].disorder_samples", "must be non-negative");
  require(c.workers >= 0, "[run].workers", "must be non-negative");

  // Default peak coordinates: every (eps_i, eps_j) pair of the electronic exciton
  // energies, ordered (1,1), (2,1), (1,2), (2,2), ...
  if (c.spectra.peaks_cm1.empty()) {
    const model::SystemOps sys = model::electronic_system(aggregate_params(c));
    const model::Eigensystem es = model::diagonalize_manifold(sys, 1);
    for (int j = 0; j < es.values.size(); ++j)
      for (int i = 0; i < es.values.size(); ++i)
        c.spectra.peaks_cm1.push_back({es.values(i), es.values(j)});
  }
  if (c.spectra.spectrum_T_snapshots_fs.empty())
    c.spectra.spectrum_T_snapshots_fs = {c.response.T_values_fs.front()};
  for (double T : c.spectra.spectrum_T_snapshots_fs) {
    bool found = false;
    for (double v : c.response.T_values_fs) found = found || std::abs(v - T) < 1e-9;
    require(found, "[spectra].spectrum_T_snapshots_fs",
            "snapshot T values must be members of [response].T_values_fs");
  }
  return c;
}

RunConfig load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (" + path + ")");
  }
}

std::string dump(const RunConfig& c) {
  std::ostringstream o;
  auto list = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s;
  };
  o << "[model]\n";
  o << "site_energies_cm1 = " << list(c.model.site_energies_cm1) << "\n";
  for (const auto& t : c.model.couplings)
    o << "coupling_cm1 = " << static_cast<int>(t[0]) << " " << static_cast<int>(t[1]) << " "
      << fmt(t[2]) << "\n";
  o << "dipoles = " << list(c.model.dipoles) << "\n";
  for (const auto& m : c.model.modes)
    o << "mode = " << m.site << " " << fmt(m.freq_cm1) << " " << fmt(m.huang_rhys) << " "
      << fmt(m.damping_fs) << "\n";
  o << "vib_nmax = " << c.model.vib_nmax << "\n";
  o << "disorder_sigma_cm1 = " << fmt(c.model.disorder_sigma_cm1) << "\n";

  o << "\n[bath]\n";
  o << "drude_reorg_cm1 = " << fmt(c.bath.drude_reorg_cm1) << "\n";
  o << "drude_relax_fs = " << fmt(c.bath.drude_relax_fs) << "\n";
  o << "temperature_K = " << fmt(c.bath.temperature_K) << "\n";
  o << "matsubara_terms = " << c.bath.matsubara_terms << "\n";

  o << "\n[propagation]\n";
  o << "depth = " << c.prop.depth << "\n";
  o << "dt_fs = " << fmt(c.prop.dt_fs) << "\n";
  if (c.prop.omega_ref_cm1) o << "omega_ref_cm1 = " << fmt(*c.prop.omega_ref_cm1) << "\n";
  o << "memory_budget_mb = " << fmt(c.prop.memory_budget_mb) << "\n";
  o << "t_max_fs = " << fmt(c.prop.t_max_fs) << "\n";
  o << "record_every_fs = " << fmt(c.prop.record_every_fs) << "\n";
  o << "pre_equilibration_fs = " << fmt(c.prop.pre_equilibration_fs) << "\n";
  o << "initial_state = " << c.prop.initial_state << "\n";

  o << "\n[pulses]\n";
  o << "omega1_cm1 = " << fmt(c.pulses.omega1_cm1) << "\n";
  o << "delta_omega_cm1 = " << fmt(c.pulses.delta_omega_cm1) << "\n";
  o << "duration_fs = " << fmt(c.pulses.duration_fs) << "\n";
  o << "amplitude_cm1 = " << fmt(c.pulses.amplitude_cm1) << "\n";
  if (!c.pulses.sweep_delta_omega_cm1.empty())
    o << "sweep_delta_omega_cm1 = " << list(c.pulses.sweep_delta_omega_cm1) << "\n";

  o << "\n[response]\n";
  o << "method = " << c.response.method << "\n";
  o << "tau_max_fs = " << fmt(c.response.tau_max_fs) << "\n";
  o << "tau_step_fs = " << fmt(c.response.tau_step_fs) << "\n";
  o << "T_values_fs = " << list(c.response.T_values_fs) << "\n";
  o << "t_max_fs = " << fmt(c.response.t_max_fs) << "\n";
  o << "t_step_fs = " << fmt(c.response.t_step_fs) << "\n";
  o << "kernel_step_fs = " << fmt(c.response.kernel_step_fs) << "\n";
  o << "support_sigma = " << fmt(c.response.support_sigma) << "\n";
  o << "phase_cycle = " << c.response.phase_cycle[0] << " " << c.response.phase_cycle[1] << " "
    << c.response.phase_cycle[2] << "\n";

  o << "\n[spectra]\n";
  o << "zero_pad_factor = " << c.spectra.zero_pad_factor << "\n";
  o << "window_fraction = " << fmt(c.spectra.window_fraction) << "\n";
  o << "peak_halfwidth_cm1 = " << fmt(c.spectra.peak_halfwidth_cm1) << "\n";
  for (const auto& p : c.spectra.peaks_cm1)
    o << "peak_cm1 = " << fmt(p[0]) << " " << fmt(p[1]) << "\n";
  o << "metrics_T_min_fs = " << fmt(c.spectra.metrics_T_min_fs) << "\n";
  o << "metrics_T_max_fs = " << fmt(c.spectra.metrics_T_max_fs) << "\n";
  o << "spectrum_T_snapshots_fs = " << list(c.spectra.spectrum_T_snapshots_fs) << "\n";
  o << "disorder_samples = " << c.spectra.disorder_samples << "\n";
  o << "seed = " << c.spectra.seed << "\n";

  o << "\n[output]\n";
  o << "directory = " << c.output.directory << "\n";
  o << "write_kernels = " << (c.output.write_kernels ? "true" : "false") << "\n";
  o << "write_plots = " << (c.output.write_plots ? "true" : "false") << "\n";
  o << "write_csv = " << (c.output.write_csv ? "true" : "false") << "\n";

  o << "\n[run]\n";
  o << "workers = " << c.workers << "\n";
  return o.str();
}

}  // namespace heom2d::config
