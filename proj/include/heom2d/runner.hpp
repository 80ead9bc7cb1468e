// runner.hpp - the operations behind the CLI subcommands; each returns a process exit code.
#pragma once

#include <string>

#include "heom2d/config.hpp"

namespace heom2d::run {

inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericalError = 3;
inline constexpr int kResourceError = 4;

// Free or pre-equilibrated trajectory from the configured initial state; CSV of
// populations, coherences, trace and hermiticity checks.
int propagate(const config::RunConfig& c);

// Full pipeline: kernels -> convolution -> 2D spectra at snapshot T values ->
// peak transients and oscillation metrics (plus optional phase-cycled cross-check).
int spectra2d(const config::RunConfig& c);

// Repeat convolution+spectra for each pulses.sweep_delta_omega_cm1 entry, reusing
// the kernel set; writes per-value intensity and suppression-ratio summary.
int sweep(const config::RunConfig& c);

// Re-render plot files (heat maps, transient line plots) from a finished run
// directory, verifying every input against the manifest checksums first.
int plotdata(const std::string& run_dir);

// Parse and validate only; prints the resolved configuration.
int validate_config(const config::RunConfig& c);

}  // namespace heom2d::run
