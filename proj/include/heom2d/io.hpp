// io.hpp - run artifacts: binary kernel cache with JSON sidecars, CSV tables,
// PPM raster plots, CRC32-stamped run manifest.
#pragma once

#include <string>
#include <vector>

#include "heom2d/response.hpp"
#include "heom2d/spectra.hpp"

namespace heom2d::io {

unsigned crc32(const void* data, std::size_t n, unsigned seed = 0);

// Kernel cache: <stem>.bin (raw complex doubles) + <stem>.json (grids, shapes, params
// fingerprint). load returns false on missing file; throws on fingerprint mismatch
// unless ignore_fingerprint.
void save_kernels(const std::string& stem, const response::KernelSet& ks,
                  const std::string& fingerprint);
bool load_kernels(const std::string& stem, response::KernelSet& ks, const std::string& fingerprint,
                  bool ignore_fingerprint = false);

// Spectrum grid cache: <stem>.bin (raw complex doubles) + <stem>.json (axes, checksum).
// load returns false on missing file; throws on checksum mismatch.
void save_spectrum(const std::string& stem, const spectra::Spectrum2D& sp);
bool load_spectrum(const std::string& stem, spectra::Spectrum2D& sp);

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

// Complex 2D table as CSV with axis headers.
void write_spectrum_csv(const std::string& path, const spectra::Spectrum2D& sp);

// Heatmap of Re(s) (diverging palette) or |s| (sequential) to a binary PPM.
void write_spectrum_ppm(const std::string& path, const spectra::Spectrum2D& sp, bool magnitude);

// Simple polyline plot of one or more traces on a white canvas.
void write_trace_ppm(const std::string& path, const std::vector<double>& x,
                     const std::vector<std::vector<double>>& ys);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace heom2d::io
