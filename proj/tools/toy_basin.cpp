#include "toy_basin.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "rivex/simulate.hpp"

namespace rivex::toy {

namespace {

struct Sketch {
  int id;
  std::vector<Point2> line;  // downstream end first
  int down;                  // 0 for the root
};

const std::vector<Sketch>& sketch() {
  static const std::vector<Sketch> s{
      {1, {{100, 4}, {96, 30}, {102, 60}}, 0},
      {2, {{102, 60}, {84, 84}, {62, 110}}, 1},
      {3, {{102, 60}, {124, 80}, {142, 100}}, 1},
      {4, {{62, 110}, {44, 140}, {30, 172}}, 2},
      {5, {{62, 110}, {72, 150}, {80, 190}}, 2},
      {6, {{142, 100}, {160, 128}, {172, 162}}, 3},
      {7, {{142, 100}, {136, 140}, {128, 182}}, 3},
  };
  return s;
}

std::vector<Segment> segments_with(const std::map<int, double>& weights) {
  std::vector<Segment> out;
  for (const Sketch& k : sketch()) {
    Segment s;
    s.id = k.id;
    s.polyline = k.line;
    for (std::size_t i = 1; i < k.line.size(); ++i) {
      s.arc_length += std::hypot(k.line[i][0] - k.line[i - 1][0], k.line[i][1] - k.line[i - 1][1]);
    }
    if (k.down != 0) s.downstream = k.down;
    s.junction_weight = weights.count(k.id) ? weights.at(k.id) : 1.0;
    out.push_back(std::move(s));
  }
  return out;
}

double altitude(double x, double y) {
  return 250.0 + 9.0 * y + 180.0 * std::sin(x / 23.0) * std::cos(y / 31.0) + 0.004 * (x - 100.0) * (x - 100.0);
}

// Nearest polyline point over the whole network.
std::pair<int, double> nearest(const std::vector<Segment>& segs, const Point2& p) {
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, double> out{-1, 0.0};
  for (const Segment& s : segs) {
    double along = 0.0;
    for (std::size_t i = 1; i < s.polyline.size(); ++i) {
      const Point2& a = s.polyline[i - 1];
      const Point2& b = s.polyline[i];
      const double dx = b[0] - a[0];
      const double dy = b[1] - a[1];
      const double len2 = dx * dx + dy * dy;
      const double t = std::clamp(((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2, 0.0, 1.0);
      const double d = std::hypot(a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
      if (d < best) {
        best = d;
        out = {s.id, along + t * std::sqrt(len2)};
      }
      along += std::sqrt(len2);
    }
  }
  if (best > 45.0) return {-1, 0.0};
  return out;
}

const std::vector<std::pair<std::string, NetLocation>>& gauges() {
  static const std::vector<std::pair<std::string, NetLocation>> g{
      {"G01", {1, 6.0}},  {"G02", {1, 40.0}}, {"G03", {2, 12.0}}, {"G04", {3, 20.0}}, {"G05", {4, 10.0}},
      {"G06", {4, 48.0}}, {"G07", {5, 30.0}}, {"G08", {6, 15.0}}, {"G09", {6, 50.0}}, {"G10", {7, 40.0}},
  };
  return g;
}

}  // namespace

Basin make_basin() {
  ElevationGrid grid;
  grid.nx = 100;
  grid.ny = 100;
  grid.x0 = 0.0;
  grid.y0 = 0.0;
  grid.cell_km = 2.0;
  grid.lat0_deg = 47.0;
  grid.altitude.resize(static_cast<std::size_t>(grid.nx * grid.ny));
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const Point2 c = grid.center(ix, iy);
      grid.altitude[static_cast<std::size_t>(iy * grid.nx + ix)] = altitude(c[0], c[1]);
    }
  }

  const std::vector<Segment> provisional = segments_with({{2, 0.5}, {3, 0.5}, {4, 0.5}, {5, 0.5}, {6, 0.5}, {7, 0.5}});
  DrainageGrid drain;
  drain.segment.resize(grid.altitude.size());
  drain.offset.resize(grid.altitude.size());
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const auto i = static_cast<std::size_t>(iy * grid.nx + ix);
      const auto [seg, off] = nearest(provisional, grid.center(ix, iy));
      drain.segment[i] = seg;
      drain.offset[i] = off;
    }
  }

  // Junction shares from integrated altitude of each branch's catchment.
  const RiverNetwork tmp(provisional);
  auto branch_volume = [&](int seg) {
    const std::vector<Cell> mask = catchment_mask(tmp, grid, drain, NetLocation{seg, 0.0});
    return catchment_summary(grid, mask, NetLocation{seg, 0.0}).altitude_volume;
  };
  std::map<int, double> weights;
  for (const auto& [a, b] : std::vector<std::pair<int, int>>{{2, 3}, {4, 5}, {6, 7}}) {
    const std::vector<double> v{branch_volume(a), branch_volume(b)};
    const std::vector<double> w = junction_weights_from_altitude(v);
    weights[a] = w[0];
    weights[b] = w[1];
  }

  Basin basin{RiverNetwork(segments_with(weights)), std::move(grid), std::move(drain), {}};
  for (const auto& [id, loc] : gauges()) {
    Station s;
    s.id = id;
    s.location = loc;
    s.position = basin.network.position(loc);
    s.summary = catchment_summary(basin.grid, catchment_mask(basin.network, basin.grid, basin.drainage, loc), loc);
    basin.stations.push_back(std::move(s));
  }
  return basin;
}

KernelParams truth_params() {
  KernelParams p;
  p.variant = Variant::full;
  p.lambda_riv = 0.73;
  p.lambda_euc = 1.93e-4;
  p.tau = 839.0;
  p.alpha = 1.75;
  p.beta = 1.10;
  p.c = 0.64;
  return p;
}

std::vector<GevParams> truth_daily_margins(const Basin& basin) {
  static const std::map<int, double> shape{{1, 0.03}, {2, 0.145}, {3, 0.028}, {4, 0.145}, {5, 0.145}, {6, 0.294}, {7, 0.028}};
  std::vector<GevParams> out;
  for (const Station& s : basin.stations) {
    GevParams g;
    g.shape = shape.at(s.location.segment_id);
    g.scale = 4.0 + 0.004 * s.summary.area;
    g.loc = 40.0 * g.scale;
    out.push_back(g);
  }
  return out;
}

GevParams annual_from_daily(const GevParams& d, int days) {
  GevParams a = d;
  const double n = static_cast<double>(days);
  if (d.shape == 0.0) {
    a.loc = d.loc + d.scale * std::log(n);
  } else {
    const double f = std::pow(n, d.shape);
    a.scale = d.scale * f;
    a.loc = d.loc + d.scale * (f - 1.0) / d.shape;
  }
  return a;
}

DailyPanel simulate_discharge(const Basin& basin, const KernelParams& params, int years, std::uint64_t seed) {
  constexpr int kDays = 92;
  const HrStructure hr = hr_structure(params, basin.network, basin.stations);
  const int n = years * kDays;
  const Eigen::MatrixXd eta = sample_hr(hr, n, seed);
  const std::vector<GevParams> g = truth_daily_margins(basin);
  const auto m = static_cast<Eigen::Index>(basin.stations.size());
  DailyPanel panel;
  for (const Station& s : basin.stations) panel.station_ids.push_back(s.id);
  panel.values.resize(n, m);
  static const int month_days[3] = {30, 31, 31};
  for (int y = 0; y < years; ++y) {
    int month = 0;
    int day = 1;
    for (int d = 0; d < kDays; ++d) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", 1960 + y, 6 + month, day);
      panel.dates.emplace_back(buf);
      panel.block.push_back(y);
      if (++day > month_days[month]) {
        day = 1;
        ++month;
      }
    }
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const GevParams& p = g[static_cast<std::size_t>(j)];
    for (int i = 0; i < n; ++i) {
      const double v = std::expm1(p.shape * std::log(eta(i, j))) / p.shape;
      panel.values(i, j) = std::max(p.loc + p.scale * v, 0.01);
    }
  }
  return panel;
}

}  // namespace rivex::toy
