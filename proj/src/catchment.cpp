#include "rivex/catchment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rivex/errors.hpp"

namespace rivex {

void ElevationGrid::check() const {
  if (nx <= 0 || ny <= 0) throw InputError("elevation grid must have positive dimensions");
  if (!(cell_km > 0.0)) throw InputError("elevation grid cell size must be positive");
  if (altitude.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny)) {
    throw InputError("elevation grid has " + std::to_string(altitude.size()) + " values, expected " +
                     std::to_string(nx * ny));
  }
}

namespace {

// |grad h| in m per m, central differences inside, one-sided at the raster edge.
double slope_at(const ElevationGrid& g, int ix, int iy) {
  auto deriv = [&](int lo_x, int lo_y, int hi_x, int hi_y, int steps) {
    const double a = g.at(lo_x, lo_y);
    const double b = g.at(hi_x, hi_y);
    if (!std::isfinite(a) || !std::isfinite(b) || steps == 0) return 0.0;
    return (b - a) / (steps * g.cell_km * 1000.0);
  };
  const int xl = std::max(ix - 1, 0);
  const int xh = std::min(ix + 1, g.nx - 1);
  const int yl = std::max(iy - 1, 0);
  const int yh = std::min(iy + 1, g.ny - 1);
  const double dx = deriv(xl, iy, xh, iy, xh - xl);
  const double dy = deriv(ix, yl, ix, yh, yh - yl);
  return std::hypot(dx, dy);
}

}  // namespace

CatchmentSummary catchment_summary(const ElevationGrid& grid, const std::vector<Cell>& mask,
                                   const NetLocation& location) {
  grid.check();
  if (mask.empty()) throw InputError("catchment mask is empty");
  const double cell_area = grid.cell_km * grid.cell_km;
  double volume = 0.0;
  double hx = 0.0;
  double hy = 0.0;
  double slope = 0.0;
  double alt = 0.0;
  for (const Cell& c : mask) {
    if (c.ix < 0 || c.iy < 0 || c.ix >= grid.nx || c.iy >= grid.ny) {
      throw InputError("catchment mask cell (" + std::to_string(c.ix) + ", " + std::to_string(c.iy) +
                       ") lies outside the grid");
    }
    const double h = grid.at(c.ix, c.iy);
    if (!std::isfinite(h)) throw InputError("catchment mask covers a cell without altitude");
    const Point2 p = grid.center(c.ix, c.iy);
    volume += h * cell_area;
    hx += h * p[0];
    hy += h * p[1];
    alt += h;
    slope += slope_at(grid, c.ix, c.iy);
  }
  if (!(volume > 0.0)) throw InputError("integrated altitude of the catchment must be positive");
  const double total_h = volume / cell_area;
  const auto n = static_cast<double>(mask.size());
  CatchmentSummary s;
  s.location = location;
  s.hydro_position = {hx / total_h, hy / total_h};
  s.altitude_volume = volume;
  s.area = n * cell_area;
  s.mean_altitude = alt / n;
  s.mean_slope = slope / n;
  s.centroid_latitude = grid.lat0_deg + s.hydro_position[1] / 111.32;
  return s;
}

std::vector<Cell> catchment_mask(const RiverNetwork& net, const ElevationGrid& grid, const DrainageGrid& drain,
                                 const NetLocation& location) {
  grid.check();
  net.validate(location);
  const std::size_t cells = grid.altitude.size();
  if (drain.segment.size() != cells || drain.offset.size() != cells) {
    throw InputError("drainage grid does not match the elevation grid");
  }
  std::vector<Cell> out;
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const std::size_t i = static_cast<std::size_t>(iy) * grid.nx + ix;
      const int seg = drain.segment[i];
      if (seg < 0) continue;
      if (seg == location.segment_id) {
        if (drain.offset[i] >= location.offset) out.push_back({ix, iy});
      } else if (net.drains_into(seg, location.segment_id)) {
        out.push_back({ix, iy});
      }
    }
  }
  return out;
}

}  // namespace rivex
