#include "pluridyn/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "pluridyn/errors.hpp"

namespace pluridyn {

namespace {

constexpr std::size_t kHeaderBytes = 64;

std::array<unsigned char, 3> color(double t, Palette p) {
  t = std::clamp(t, 0.0, 1.0);
  auto byte = [](double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  if (p == Palette::Gray) return {byte(t), byte(t), byte(t)};
  // black -> red -> yellow -> white
  return {byte(3.0 * t), byte(3.0 * t - 1.0), byte(3.0 * t - 2.0)};
}

}  // namespace

ChartGrid::ChartGrid(ChartWindow w, int nx_, int ny_, double fill)
    : window(std::move(w)), nx(nx_), ny(ny_), values(static_cast<std::size_t>(std::max(0, nx_)) * static_cast<std::size_t>(std::max(0, ny_)), fill) {}

double ChartGrid::xmin() const { return window.center[0].real() - window.half_widths[0]; }
double ChartGrid::xmax() const { return window.center[0].real() + window.half_widths[0]; }
double ChartGrid::ymin() const { return window.center[0].imag() - window.half_widths[0]; }
double ChartGrid::ymax() const { return window.center[0].imag() + window.half_widths[0]; }

Complex ChartGrid::point(int ix, int iy) const { return {xmin() + (ix + 0.5) * dx(), ymin() + (iy + 0.5) * dy()}; }

std::string grid_header(const ChartGrid& g) {
  // Drop digits until the header fits in 64 bytes.
  for (int prec = 17; prec >= 3; --prec) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "PDG1 %d %d %.*g %.*g %.*g %.*g f64", g.nx, g.ny, prec, g.xmin(), prec, g.xmax(), prec,
                  g.ymin(), prec, g.ymax());
    std::string s(buf);
    if (s.size() < kHeaderBytes) {
      s.resize(kHeaderBytes - 1, ' ');
      s += '\n';
      return s;
    }
  }
  fail(ErrorKind::IoFailure, "grid header does not fit in 64 bytes");
}

void write_grid(const ChartGrid& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot write " + path);
  out << grid_header(g);
  static_assert(std::endian::native == std::endian::little, "grid files are little-endian");
  out.write(reinterpret_cast<const char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double)));
  if (!out) fail(ErrorKind::IoFailure, "short write on " + path);
}

ChartGrid read_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoFailure, "cannot read " + path);
  std::string header(kHeaderBytes, '\0');
  in.read(header.data(), static_cast<std::streamsize>(kHeaderBytes));
  if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes)) fail(ErrorKind::HeaderMismatch, "truncated grid header");
  std::istringstream hs(header);
  std::string magic, dtype;
  int nx = 0, ny = 0;
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  hs >> magic >> nx >> ny >> x0 >> x1 >> y0 >> y1 >> dtype;
  if (!hs || magic != "PDG1" || dtype != "f64") fail(ErrorKind::HeaderMismatch, "not a PDG1 f64 grid");
  if (nx <= 0 || ny <= 0) fail(ErrorKind::HeaderMismatch, "grid dimensions must be positive");
  if (!(x1 > x0) || !(y1 > y0)) fail(ErrorKind::HeaderMismatch, "grid window is empty");
  ChartWindow w;
  w.chart_index = 0;
  w.center = HVec{Complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))};
  w.half_widths = {0.5 * (x1 - x0)};
  ChartGrid g(w, nx, ny);
  // Non-square windows are kept through explicit extents.
  if (std::abs((x1 - x0) - (y1 - y0)) > 1e-12 * std::abs(x1 - x0)) {
    fail(ErrorKind::HeaderMismatch, "only square windows are supported");
  }
  in.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(g.values.size() * sizeof(double))) {
    fail(ErrorKind::HeaderMismatch, "grid payload shorter than the header declares");
  }
  return g;
}

Palette parse_palette(const std::string& name) {
  if (name == "gray" || name == "grey") return Palette::Gray;
  if (name == "heat") return Palette::Heat;
  fail(ErrorKind::InvalidArgument, "unknown palette '" + name + "'");
}

void render_ppm(const ChartGrid& g, const RenderOptions& opts, const std::string& path) {
  if (g.nx <= 0 || g.ny <= 0) fail(ErrorKind::HeaderMismatch, "cannot render an empty grid");
  auto tr = [&](double v) { return opts.log_scale ? std::log10(std::max(v, 0.0) + 1e-300) : v; };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : g.values) {
    if (!std::isfinite(v)) continue;
    if (opts.log_scale && v <= 0.0) continue;
    lo = std::min(lo, tr(v));
    hi = std::max(hi, tr(v));
  }
  if (!(hi > lo)) {
    hi = lo + 1.0;
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoFailure, "cannot write " + path);
  out << "P6\n" << g.nx << " " << g.ny << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(g.nx) * 3);
  // Image rows go top to bottom, so the largest imaginary part comes first.
  for (int iy = g.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const double v = g.at(ix, iy);
      std::array<unsigned char, 3> c{255, 0, 255};
      if (std::isfinite(v)) {
        const double t = (opts.log_scale && v <= 0.0) ? 0.0 : (tr(v) - lo) / (hi - lo);
        c = color(t, opts.palette);
      }
      std::memcpy(&row[static_cast<std::size_t>(ix) * 3], c.data(), 3);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) fail(ErrorKind::IoFailure, "short write on " + path);
}

void render_field(const std::string& grid_path, const RenderOptions& opts, const std::string& out_path) {
  render_ppm(read_grid(grid_path), opts, out_path);
}

}  // namespace pluridyn
