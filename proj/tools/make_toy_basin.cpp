// Writes the synthetic basin used by the examples and acceptance tests.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "rivex/io.hpp"
#include "toy_basin.hpp"

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "data/toy_basin";
  const int years = argc > 2 ? std::atoi(argv[2]) : 50;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 2016;
  try {
    using namespace rivex;
    const toy::Basin basin = toy::make_basin();
    const KernelParams truth = toy::truth_params();
    io::write_json(dir + "/network.json", io::network_to_json(basin.network));
    io::write_json(dir + "/grid.json", io::grid_to_json(basin.grid, basin.drainage));
    io::write_json(dir + "/catchments.json", io::stations_to_json(basin.stations));
    io::write_discharge_csv(dir + "/discharge.csv", toy::simulate_discharge(basin, truth, years, seed));

    io::Json t;
    t["variant"] = std::string(to_string(truth.variant));
    t["lambda_riv"] = truth.lambda_riv;
    t["lambda_euc"] = truth.lambda_euc;
    t["tau_km"] = truth.tau;
    t["alpha"] = truth.alpha;
    t["beta_rad"] = truth.beta;
    t["c"] = truth.c;
    t["years"] = years;
    t["days_per_year"] = 92;
    t["seed"] = seed;
    io::Json margins = io::Json::array();
    const auto daily = toy::truth_daily_margins(basin);
    for (std::size_t j = 0; j < daily.size(); ++j) {
      const GevParams annual = toy::annual_from_daily(daily[j], 92);
      margins.push_back({{"id", basin.stations[j].id},
                         {"daily", {{"loc", daily[j].loc}, {"scale", daily[j].scale}, {"shape", daily[j].shape}}},
                         {"annual", {{"loc", annual.loc}, {"scale", annual.scale}, {"shape", annual.shape}}}});
    }
    t["margins"] = margins;
    io::write_json(dir + "/truth.json", t);
    std::printf("wrote %s (%d summers, %zu stations)\n", dir.c_str(), years, basin.stations.size());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
