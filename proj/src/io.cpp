// io.cpp - kernel/spectrum binary caches with JSON sidecars, CSV tables, PPM plots.
#include "heom2d/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace heom2d::io {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_bytes(const std::string& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("io: cannot open '" + path + "' for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw std::runtime_error("io: short write to '" + path + "'");
}

bool read_bytes(const std::string& path, std::vector<char>& out) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) return false;
  const std::streamsize n = in.tellg();
  in.seekg(0);
  out.resize(static_cast<std::size_t>(n));
  in.read(out.data(), n);
  return static_cast<bool>(in);
}

json grid_json(const response::KernelGrid& g) {
  return json{{"step_fs", g.step_fs},
              {"t2_first_fs", g.t2_first_fs},
              {"n1", g.n1},
              {"n2", g.n2},
              {"n3", g.n3}};
}

// Clamped byte for plot shading.
unsigned char level(double v) {
  if (!(v > 0)) return 0;
  if (v >= 1) return 255;
  return static_cast<unsigned char>(v * 255.0 + 0.5);
}

}  // namespace

unsigned crc32(const void* data, std::size_t n, unsigned seed) {
  static const std::array<unsigned, 256> table = [] {
    std::array<unsigned, 256> t{};
    for (unsigned i = 0; i < 256; ++i) {
      unsigned c = i;
      for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (c & 1 ? 0xEDB88320u : 0u);
      t[i] = c;
    }
    return t;
  }();
  const unsigned char* p = static_cast<const unsigned char*>(data);
  unsigned c = seed ^ 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void save_kernels(const std::string& stem, const response::KernelSet& ks,
                  const std::string& fingerprint) {
  std::vector<cplx> payload;
  json shapes = json::array();
  for (std::size_t i = 0; i < ks.shapes.size(); ++i) {
    const response::ShapeKernel& k = ks.kernels.at(i);
    json s{{"name", ks.shapes[i].name},
           {"class", response::to_string(ks.shapes[i].cls)},
           {"grid", grid_json(k.grid)},
           {"offset", payload.size()},
           {"count", k.r.size()}};
    shapes.push_back(std::move(s));
    payload.insert(payload.end(), k.r.begin(), k.r.end());
  }
  write_bytes(stem + ".bin", payload.data(), payload.size() * sizeof(cplx));
  json meta{{"fingerprint", fingerprint},
            {"omega_ref_cm1", ks.omega_ref_cm1},
            {"dt_fs", ks.dt_fs},
            {"payload_crc32", crc32(payload.data(), payload.size() * sizeof(cplx))},
            {"shapes", std::move(shapes)}};
  write_text(stem + ".json", meta.dump(1));
}

bool load_kernels(const std::string& stem, response::KernelSet& ks, const std::string& fingerprint,
                  bool ignore_fingerprint) {
  std::vector<char> raw;
  if (!read_bytes(stem + ".json", raw)) return false;
  json meta;
  try {
    meta = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    throw std::runtime_error("io: corrupt kernel sidecar '" + stem + ".json': " + e.what());
  }
  if (!ignore_fingerprint && meta.at("fingerprint").get<std::string>() != fingerprint)
    throw std::runtime_error("io: kernel cache fingerprint mismatch for '" + stem + "'");
  const json& shapes = meta.at("shapes");
  if (shapes.size() != ks.shapes.size())
    throw std::runtime_error("io: kernel cache shape count mismatch for '" + stem + "'");

  std::vector<char> payload;
  if (!read_bytes(stem + ".bin", payload)) return false;
  if (crc32(payload.data(), payload.size()) != meta.at("payload_crc32").get<unsigned>())
    throw std::runtime_error("io: checksum mismatch in '" + stem + ".bin'");

  ks.omega_ref_cm1 = meta.at("omega_ref_cm1").get<double>();
  ks.dt_fs = meta.at("dt_fs").get<double>();
  ks.kernels.assign(ks.shapes.size(), {});
  const cplx* data = reinterpret_cast<const cplx*>(payload.data());
  const std::size_t total = payload.size() / sizeof(cplx);
  for (std::size_t i = 0; i < ks.shapes.size(); ++i) {
    const json& s = shapes.at(i);
    if (s.at("name").get<std::string>() != ks.shapes[i].name)
      throw std::runtime_error("io: kernel cache shape order mismatch for '" + stem + "'");
    response::KernelGrid g;
    const json& gj = s.at("grid");
    g.step_fs = gj.at("step_fs").get<double>();
    g.t2_first_fs = gj.at("t2_first_fs").get<double>();
    g.n1 = gj.at("n1").get<int>();
    g.n2 = gj.at("n2").get<int>();
    g.n3 = gj.at("n3").get<int>();
    const std::size_t off = s.at("offset").get<std::size_t>();
    const std::size_t cnt = s.at("count").get<std::size_t>();
    if (off + cnt > total)
      throw std::runtime_error("io: kernel cache payload truncated in '" + stem + ".bin'");
    ks.kernels[i].grid = g;
    ks.kernels[i].r.assign(data + off, data + off + cnt);
  }
  return true;
}

void save_spectrum(const std::string& stem, const spectra::Spectrum2D& sp) {
  write_bytes(stem + ".bin", sp.s.data(), sp.s.size() * sizeof(cplx));
  json meta{{"w_tau_cm1", sp.w_tau_cm1},
            {"w_t_cm1", sp.w_t_cm1},
            {"payload_crc32", crc32(sp.s.data(), sp.s.size() * sizeof(cplx))}};
  write_text(stem + ".json", meta.dump(1));
}

bool load_spectrum(const std::string& stem, spectra::Spectrum2D& sp) {
  std::vector<char> raw;
  if (!read_bytes(stem + ".json", raw)) return false;
  json meta;
  try {
    meta = json::parse(raw.begin(), raw.end());
  } catch (const json::exception& e) {
    throw std::runtime_error("io: corrupt spectrum sidecar '" + stem + ".json': " + e.what());
  }
  std::vector<char> payload;
  if (!read_bytes(stem + ".bin", payload)) return false;
  if (crc32(payload.data(), payload.size()) != meta.at("payload_crc32").get<unsigned>())
    throw std::runtime_error("io: checksum mismatch in '" + stem + ".bin'");
  sp.w_tau_cm1 = meta.at("w_tau_cm1").get<std::vector<double>>();
  sp.w_t_cm1 = meta.at("w_t_cm1").get<std::vector<double>>();
  if (payload.size() != sp.w_tau_cm1.size() * sp.w_t_cm1.size() * sizeof(cplx))
    throw std::runtime_error("io: spectrum payload size mismatch in '" + stem + ".bin'");
  const cplx* data = reinterpret_cast<const cplx*>(payload.data());
  sp.s.assign(data, data + payload.size() / sizeof(cplx));
  return true;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  std::ostringstream o;
  for (std::size_t i = 0; i < columns.size(); ++i) o << (i ? "," : "") << columns[i];
  o << "\n";
  for (const auto& r : rows) {
    if (r.size() != columns.size())
      throw std::invalid_argument("io: csv row width does not match the header");
    for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << num(r[i]);
    o << "\n";
  }
  write_text(path, o.str());
}

void write_spectrum_csv(const std::string& path, const spectra::Spectrum2D& sp) {
  std::ostringstream o;
  o << "w_tau_cm1,w_t_cm1,re,im,abs\n";
  for (std::size_t i = 0; i < sp.w_tau_cm1.size(); ++i)
    for (std::size_t j = 0; j < sp.w_t_cm1.size(); ++j) {
      const cplx v = sp.at(static_cast<int>(i), static_cast<int>(j));
      o << num(sp.w_tau_cm1[i]) << "," << num(sp.w_t_cm1[j]) << "," << num(v.real()) << ","
        << num(v.imag()) << "," << num(std::abs(v)) << "\n";
    }
  write_text(path, o.str());
}

void write_spectrum_ppm(const std::string& path, const spectra::Spectrum2D& sp, bool magnitude) {
  const int nx = static_cast<int>(sp.w_tau_cm1.size());
  const int ny = static_cast<int>(sp.w_t_cm1.size());
  if (nx == 0 || ny == 0) throw std::invalid_argument("io: empty spectrum");
  double scale = 0;
  for (const cplx& v : sp.s) scale = std::max(scale, magnitude ? std::abs(v) : std::abs(v.real()));
  if (scale == 0) scale = 1;

  std::vector<unsigned char> img(static_cast<std::size_t>(nx) * ny * 3);
  // Rows top-down = decreasing w_t; columns = increasing w_tau.
  for (int row = 0; row < ny; ++row) {
    const int j = ny - 1 - row;
    for (int i = 0; i < nx; ++i) {
      const cplx v = sp.at(i, j);
      unsigned char* px = &img[(static_cast<std::size_t>(row) * nx + i) * 3];
      if (magnitude) {
        const double u = std::abs(v) / scale;  // black body: black-red-yellow-white
        px[0] = level(3 * u);
        px[1] = level(3 * u - 1);
        px[2] = level(3 * u - 2);
      } else {
        const double u = v.real() / scale;  // diverging: blue-white-red
        px[0] = level(1 + std::min(u, 0.0));
        px[1] = level(1 - std::abs(u));
        px[2] = level(1 - std::max(u, 0.0));
      }
    }
  }
  std::ostringstream head;
  head << "P6\n" << nx << " " << ny << "\n255\n";
  std::string out = head.str();
  out.append(reinterpret_cast<const char*>(img.data()), img.size());
  write_bytes(path, out.data(), out.size());
}

void write_trace_ppm(const std::string& path, const std::vector<double>& x,
                     const std::vector<std::vector<double>>& ys) {
  const int W = 900, H = 540, M = 50;
  if (x.size() < 2) throw std::invalid_argument("io: trace plot needs at least two points");
  for (const auto& y : ys)
    if (y.size() != x.size())
      throw std::invalid_argument("io: trace length does not match the x axis");

  double xlo = x.front(), xhi = x.front(), ylo = 0, yhi = 0;
  bool first = true;
  for (double v : x) xlo = std::min(xlo, v), xhi = std::max(xhi, v);
  for (const auto& y : ys)
    for (double v : y) {
      if (!std::isfinite(v)) continue;
      ylo = first ? v : std::min(ylo, v);
      yhi = first ? v : std::max(yhi, v);
      first = false;
    }
  if (xhi == xlo) xhi = xlo + 1;
  if (first) ylo = 0, yhi = 1;
  if (yhi == ylo) yhi = ylo + 1;
  const double pad = 0.05 * (yhi - ylo);
  ylo -= pad;
  yhi += pad;

  std::vector<unsigned char> img(static_cast<std::size_t>(W) * H * 3, 255);
  auto put = [&](int px, int py, unsigned char r, unsigned char g, unsigned char b) {
    if (px < 0 || px >= W || py < 0 || py >= H) return;
    unsigned char* p = &img[(static_cast<std::size_t>(py) * W + px) * 3];
    p[0] = r, p[1] = g, p[2] = b;
  };
  for (int i = M; i <= W - M; ++i) put(i, H - M, 120, 120, 120);
  for (int i = M; i <= H - M; ++i) put(M, i, 120, 120, 120);

  auto px_of = [&](double v) { return M + static_cast<int>((v - xlo) / (xhi - xlo) * (W - 2 * M) + 0.5); };
  auto py_of = [&](double v) { return H - M - static_cast<int>((v - ylo) / (yhi - ylo) * (H - 2 * M) + 0.5); };
  static const unsigned char palette[][3] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},
                                             {255, 127, 14}, {148, 103, 189}, {140, 86, 75}};
  for (std::size_t s = 0; s < ys.size(); ++s) {
    const unsigned char* col = palette[s % 6];
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      if (!std::isfinite(ys[s][i]) || !std::isfinite(ys[s][i + 1])) continue;
      int x0 = px_of(x[i]), y0 = py_of(ys[s][i]), x1 = px_of(x[i + 1]), y1 = py_of(ys[s][i + 1]);
      const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
      const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
      int err = dx + dy;
      while (true) {
        put(x0, y0, col[0], col[1], col[2]);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) err += dy, x0 += sx;
        if (e2 <= dx) err += dx, y0 += sy;
      }
    }
  }
  std::ostringstream head;
  head << "P6\n" << W << " " << H << "\n255\n";
  std::string out = head.str();
  out.append(reinterpret_cast<const char*>(img.data()), img.size());
  write_bytes(path, out.data(), out.size());
}

void write_text(const std::string& path, const std::string& text) {
  write_bytes(path, text.data(), text.size());
}

std::string read_text(const std::string& path) {
  std::vector<char> raw;
  if (!read_bytes(path, raw)) throw std::runtime_error("io: cannot read '" + path + "'");
  return std::string(raw.begin(), raw.end());
}

}  // namespace heom2d::io
