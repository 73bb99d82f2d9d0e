#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rivex/catchment.hpp"
#include "rivex/events.hpp"
#include "rivex/kernels.hpp"
#include "rivex/margins.hpp"
#include "rivex/network.hpp"

namespace rivex::toy {

/// Synthetic dendritic basin: 7 segments over a 200 x 200 km raster, 10 gauges.
struct Basin {
  RiverNetwork network;
  ElevationGrid grid;
  DrainageGrid drainage;
  StationSet stations;
};

Basin make_basin();

/// Dependence parameters used for the bundled discharges.
KernelParams truth_params();

/// Daily GEV margins (for unit-Fréchet daily values) of each gauge.
std::vector<GevParams> truth_daily_margins(const Basin& basin);

/// Annual-maximum margins implied by `days` iid daily values per year.
GevParams annual_from_daily(const GevParams& daily, int days);

/// Daily discharges for `years` summers of 92 days (June to August), days independent in time
/// with Hüsler-Reiss dependence across gauges.
DailyPanel simulate_discharge(const Basin& basin, const KernelParams& params, int years, std::uint64_t seed);

}  // namespace rivex::toy
