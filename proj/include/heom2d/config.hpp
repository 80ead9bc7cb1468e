// config.hpp - sectioned key=value run configuration with strict validation.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "heom2d/model.hpp"

namespace heom2d::config {

// Thrown for unparseable or invalid input; message carries [section].key and line.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelSection {
  std::vector<double> site_energies_cm1;
  std::vector<std::array<double, 3>> couplings;  // {site_i, site_j, J}
  std::vector<double> dipoles;
  std::vector<model::Mode> modes;  // site == -1 in the file means "every site"
  int vib_nmax = 0;                // 0: modes live in the bath only
  double disorder_sigma_cm1 = 0;
};

struct BathSection {
  double drude_reorg_cm1 = 50.0;
  double drude_relax_fs = 100.0;
  double temperature_K = 300.0;
  int matsubara_terms = 2;
};

struct PropagationSection {
  int depth = 5;
  double dt_fs = 0.25;
  std::optional<double> omega_ref_cm1;  // default: first pulse carrier
  double memory_budget_mb = 4096.0;
  double t_max_fs = 1000.0;
  double record_every_fs = 2.0;
  double pre_equilibration_fs = 0.0;
  std::string initial_state = "ground";  // ground | site:K | exciton:K | coherence:I,J
};

struct PulseSection {
  double omega1_cm1 = 17400.0;
  double delta_omega_cm1 = 0.0;  // pulse2 = omega1 + dw, pulse3 = omega1 - dw
  double duration_fs = 10.0;     // intensity FWHM
  double amplitude_cm1 = 10.0;
  std::vector<double> sweep_delta_omega_cm1;  // used by the sweep command
};

struct ResponseSection {
  std::string method = "perturbative";  // perturbative | phasecycle | both
  double tau_max_fs = 256.0, tau_step_fs = 2.0;
  std::vector<double> T_values_fs;  // default 100:1000:20
  double t_max_fs = 256.0, t_step_fs = 2.0;
  double kernel_step_fs = 2.0;
  double support_sigma = 2.5;  // pulse-overlap half-width in units of sigma (x2 pulses)
  std::array<int, 3> phase_cycle{4, 3, 3};
};

struct SpectraSection {
  int zero_pad_factor = 4;
  double window_fraction = 0.25;
  double peak_halfwidth_cm1 = 250.0;
  // Peak coordinates default to the exciton energies (set at load when absent).
  std::vector<std::array<double, 2>> peaks_cm1;
  double metrics_T_min_fs = 100.0, metrics_T_max_fs = 1000.0;
  std::vector<double> spectrum_T_snapshots_fs;
  int disorder_samples = 0;
  unsigned long long seed = 12345;
};

struct OutputSection {
  std::string directory = "out";
  bool write_kernels = true;
  bool write_plots = true;
  bool write_csv = true;
};

struct RunConfig {
  ModelSection model;
  BathSection bath;
  PropagationSection prop;
  PulseSection pulses;
  ResponseSection response;
  SpectraSection spectra;
  OutputSection output;
  int workers = 0;  // 0: hardware concurrency
};

RunConfig load_file(const std::string& path);
RunConfig parse(const std::string& text);  // also applies defaults + validation

// Canonical text with every default materialized; parse(dump(c)) round-trips exactly.
std::string dump(const RunConfig& c);

// Derived helpers shared by runner and tests.
model::AggregateParams aggregate_params(const RunConfig& c);
std::vector<double> default_T_values();

struct InitialState {
  enum class Kind { ground, site, exciton, coherence } kind = Kind::ground;
  int a = 0, b = 0;
};
InitialState parse_initial_state(const std::string& s);  // syntax check only

}  // namespace heom2d::config
