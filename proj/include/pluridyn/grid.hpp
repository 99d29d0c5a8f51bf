#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pluridyn/projective.hpp"

namespace pluridyn {

/// Scalar samples at cell centers of a 2D lattice over chart axis 0 of a
/// window (real part along x, imaginary part along y). Row-major, y outer.
struct ChartGrid {
  ChartWindow window;
  int nx = 0;
  int ny = 0;
  std::vector<double> values;

  ChartGrid() = default;
  ChartGrid(ChartWindow w, int nx_, int ny_, double fill = 0.0);

  double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix)]; }
  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix)]; }
  double xmin() const;
  double xmax() const;
  double ymin() const;
  double ymax() const;
  double dx() const { return (xmax() - xmin()) / nx; }
  double dy() const { return (ymax() - ymin()) / ny; }
  double cell_area() const { return dx() * dy(); }
  /// Chart coordinate (axis 0) of the center of cell (ix, iy).
  Complex point(int ix, int iy) const;
};

/// 64-byte ASCII header "PDG1 nx ny xmin xmax ymin ymax f64" padded with
/// spaces, then nx*ny little-endian doubles.
void write_grid(const ChartGrid& g, const std::string& path);
ChartGrid read_grid(const std::string& path);
std::string grid_header(const ChartGrid& g);

enum class Palette { Gray, Heat };
Palette parse_palette(const std::string& name);

struct RenderOptions {
  Palette palette = Palette::Heat;
  bool log_scale = false;
};

/// Binary PPM (P6). Non-finite cells get the sentinel color (255, 0, 255).
void render_ppm(const ChartGrid& g, const RenderOptions& opts, const std::string& path);

/// render_field: grid file in, PPM out. Throws HeaderMismatch on bad input.
void render_field(const std::string& grid_path, const RenderOptions& opts, const std::string& out_path);

}  // namespace pluridyn
