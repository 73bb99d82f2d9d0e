#pragma once

#include <vector>

#include "rivex/kernels.hpp"
#include "rivex/network.hpp"

namespace rivex::test {

// Stem 1 (10 km) with branches 2 (pi = 0.25) and 3 (pi = 0.75) at its upper end; branch 2
// carries two tributaries 4 and 5 (pi = 0.25 / 0.75) at 10 km.
inline RiverNetwork small_network() {
  std::vector<Segment> s(5);
  s[0] = {1, {{0, 0}, {0, 10}}, 10.0, std::nullopt, 1.0};
  s[1] = {2, {{0, 10}, {-6, 18}}, 10.0, 1, 0.25};
  s[2] = {3, {{0, 10}, {6, 18}}, 10.0, 1, 0.75};
  s[3] = {4, {{-6, 18}, {-6, 28}}, 10.0, 2, 0.25};
  s[4] = {5, {{-6, 18}, {-14, 24}}, 10.0, 2, 0.75};
  return RiverNetwork(s);
}

inline Station station_at(const RiverNetwork& net, const std::string& id, NetLocation loc, Point2 hydro) {
  Station st;
  st.id = id;
  st.location = loc;
  st.position = net.position(loc);
  st.summary.location = loc;
  st.summary.hydro_position = hydro;
  st.summary.altitude_volume = 1.0;
  st.summary.area = 1.0;
  st.summary.mean_altitude = 500.0;
  st.summary.mean_slope = 0.05;
  st.summary.centroid_latitude = 47.0;
  return st;
}

}  // namespace rivex::test
