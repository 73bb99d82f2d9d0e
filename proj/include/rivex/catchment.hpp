#pragma once

#include <vector>

#include "rivex/network.hpp"

namespace rivex {

/// Regular raster of altitudes (m). Cell (ix, iy) covers
/// [x0 + ix*cell_km, x0 + (ix+1)*cell_km) x [y0 + iy*cell_km, y0 + (iy+1)*cell_km).
struct ElevationGrid {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double cell_km = 1.0;
  double lat0_deg = 0.0;  // latitude of y = 0, used for centroid_latitude
  std::vector<double> altitude;  // row-major, ny rows of nx values

  double at(int ix, int iy) const { return altitude[static_cast<std::size_t>(iy) * nx + ix]; }
  Point2 center(int ix, int iy) const { return {x0 + (ix + 0.5) * cell_km, y0 + (iy + 0.5) * cell_km}; }
  void check() const;
};

struct Cell {
  int ix = 0;
  int iy = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct CatchmentSummary {
  NetLocation location;
  Point2 hydro_position{0.0, 0.0};  // altitude-weighted centroid H(t), km
  double altitude_volume = 0.0;     // km^2 * m
  double area = 0.0;                // km^2
  double mean_altitude = 0.0;       // m
  double mean_slope = 0.0;          // m per m
  double centroid_latitude = 0.0;   // degrees
};

/// Cell-centre Riemann sums over the masked cells.
CatchmentSummary catchment_summary(const ElevationGrid& grid, const std::vector<Cell>& mask,
                                   const NetLocation& location);

/// Flow routing given as input: for every cell, the network location its water enters.
/// Cells with segment id < 0 drain out of the basin.
struct DrainageGrid {
  std::vector<int> segment;     // same layout as ElevationGrid::altitude
  std::vector<double> offset;   // km above the segment's downstream end
};

/// Cells whose drainage point lies upstream of (or at) `location`.
std::vector<Cell> catchment_mask(const RiverNetwork& net, const ElevationGrid& grid, const DrainageGrid& drain,
                                 const NetLocation& location);

}  // namespace rivex
