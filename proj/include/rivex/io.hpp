#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "rivex/catchment.hpp"
#include "rivex/events.hpp"
#include "rivex/fit.hpp"
#include "rivex/kernels.hpp"
#include "rivex/margins.hpp"
#include "rivex/network.hpp"

namespace rivex::io {

using Json = nlohmann::ordered_json;

/// IoError when the file cannot be opened, ParseError on malformed JSON.
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest text that reads back to the same double; "NA" for NaN.
std::string format_number(double v);
/// Parses a number field; "NA" and "" give NaN. ParseError otherwise.
double parse_number(const std::string& field, const std::string& where);
std::vector<std::string> split(const std::string& line, char sep);

// {"segments": [{"id", "polyline": [[x, y], ...], "downstream": id | null, "junction_weight"}]}
RiverNetwork network_from_json(const Json& j);
Json network_to_json(const RiverNetwork& net);

// {"nx", "ny", "x0", "y0", "cell_km", "lat0_deg", "altitude": [...],
//  "drain_segment": [...], "drain_offset_km": [...]}
struct GridFile {
  ElevationGrid grid;
  DrainageGrid drainage;
};
GridFile grid_from_json(const Json& j);
Json grid_to_json(const ElevationGrid& grid, const DrainageGrid& drainage);

// {"stations": [{"id", "segment", "offset_km" | ("x", "y"), "x", "y", "catchment": {...}}]}
// Stations given by planar coordinates only are snapped with `snap_km`. Stations without a
// "catchment" block get their summary from `grid` when one is supplied.
StationSet stations_from_json(const Json& j, const RiverNetwork& net, const GridFile* grid = nullptr,
                              double snap_km = 0.1);
Json stations_to_json(const StationSet& stations);
Json summary_to_json(const CatchmentSummary& s);

/// Long format with header station_id,date,discharge_m3s; dates YYYY-MM-DD. Blocks are runs of
/// consecutive calendar days. Missing (station, date) pairs become NaN.
DailyPanel read_discharge_csv(const std::filesystem::path& path);
void write_discharge_csv(const std::filesystem::path& path, const DailyPanel& panel);

/// One row per event: window placement, then raw_<id> and pareto_<id> columns.
void write_events_csv(const std::filesystem::path& path, const EventMatrix& events);
EventMatrix read_events_csv(const std::filesystem::path& path);

struct ModelFile {
  KernelParams params;
  std::vector<std::string> station_ids;
  double events_per_year = 0.0;
  Json report;  // estimation summary, free-form
};
Json model_to_json(const ModelFile& m);
ModelFile model_from_json(const Json& j);

struct MarginsFile {
  std::vector<std::string> station_ids;
  std::vector<StationFit> fits;
  bool has_regional = false;
  RegionalModel regional;
};
Json margins_to_json(const MarginsFile& m);
MarginsFile margins_from_json(const Json& j);

/// Column order of `ids` inside `all`; InputError naming unknown ids.
std::vector<int> select_columns(const std::vector<std::string>& all, const std::vector<std::string>& ids);

}  // namespace rivex::io
