#include "rivex/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rivex/errors.hpp"

namespace rivex::io {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
T field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

double number_or_nan(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

Json nan_or_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// Days since 1970-01-01 for YYYY-MM-DD.
long day_number(const std::string& date, const std::string& where) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (std::sscanf(date.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
    throw ParseError(where + ": date '" + date + "' is not YYYY-MM-DD");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw ParseError(where + ": '" + date + "' is not a calendar date");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::vector<std::string> csv_lines(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  if (out.empty()) throw ParseError(path.string() + ": empty file");
  return out;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& s, const std::string& where) {
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return kNaN;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ParseError(where + ": '" + s + "' is not a number");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (std::string& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

RiverNetwork network_from_json(const Json& j) {
  const Json segs = field<Json>(j, "segments", "network");
  if (!segs.is_array() || segs.empty()) throw ParseError("network: 'segments' must be a nonempty array");
  std::vector<Segment> out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Json& s = segs[i];
    const std::string where = "network segment #" + std::to_string(i + 1);
    Segment seg;
    seg.id = field<int>(s, "id", where);
    for (const Json& p : field<Json>(s, "polyline", where)) {
      if (!p.is_array() || p.size() != 2) throw ParseError(where + ": polyline vertices must be [x, y]");
      seg.polyline.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    for (std::size_t k = 1; k < seg.polyline.size(); ++k) {
      seg.arc_length += std::hypot(seg.polyline[k][0] - seg.polyline[k - 1][0], seg.polyline[k][1] - seg.polyline[k - 1][1]);
    }
    if (s.contains("arc_length_km")) seg.arc_length = field<double>(s, "arc_length_km", where);
    if (s.contains("downstream") && !s.at("downstream").is_null()) seg.downstream = field<int>(s, "downstream", where);
    seg.junction_weight = s.contains("junction_weight") ? field<double>(s, "junction_weight", where) : 1.0;
    out.push_back(std::move(seg));
  }
  return RiverNetwork(std::move(out));
}

Json network_to_json(const RiverNetwork& net) {
  Json segs = Json::array();
  for (const Segment& s : net.segments()) {
    Json line = Json::array();
    for (const Point2& p : s.polyline) line.push_back({p[0], p[1]});
    segs.push_back({{"id", s.id},
                    {"polyline", line},
                    {"arc_length_km", s.arc_length},
                    {"downstream", s.downstream ? Json(*s.downstream) : Json(nullptr)},
                    {"junction_weight", s.junction_weight}});
  }
  return Json{{"segments", segs}};
}

GridFile grid_from_json(const Json& j) {
  GridFile g;
  g.grid.nx = field<int>(j, "nx", "grid");
  g.grid.ny = field<int>(j, "ny", "grid");
  g.grid.x0 = field<double>(j, "x0", "grid");
  g.grid.y0 = field<double>(j, "y0", "grid");
  g.grid.cell_km = field<double>(j, "cell_km", "grid");
  g.grid.lat0_deg = j.contains("lat0_deg") ? field<double>(j, "lat0_deg", "grid") : 0.0;
  for (const Json& v : field<Json>(j, "altitude", "grid")) g.grid.altitude.push_back(number_or_nan(v));
  g.grid.check();
  if (j.contains("drain_segment")) {
    g.drainage.segment = field<std::vector<int>>(j, "drain_segment", "grid");
    g.drainage.offset = field<std::vector<double>>(j, "drain_offset_km", "grid");
    if (g.drainage.segment.size() != g.grid.altitude.size() || g.drainage.offset.size() != g.grid.altitude.size()) {
      throw ParseError("grid: drainage arrays must have nx*ny entries");
    }
  }
  return g;
}

Json grid_to_json(const ElevationGrid& grid, const DrainageGrid& drainage) {
  Json alt = Json::array();
  for (double v : grid.altitude) alt.push_back(nan_or_number(v));
  Json j{{"nx", grid.nx}, {"ny", grid.ny}, {"x0", grid.x0}, {"y0", grid.y0}, {"cell_km", grid.cell_km},
         {"lat0_deg", grid.lat0_deg}, {"altitude", alt}};
  if (!drainage.segment.empty()) {
    j["drain_segment"] = drainage.segment;
    j["drain_offset_km"] = drainage.offset;
  }
  return j;
}

Json summary_to_json(const CatchmentSummary& s) {
  return Json{{"hydro_x", s.hydro_position[0]},     {"hydro_y", s.hydro_position[1]},
              {"altitude_volume", s.altitude_volume}, {"area_km2", s.area},
              {"mean_altitude_m", s.mean_altitude},  {"mean_slope", s.mean_slope},
              {"centroid_latitude", s.centroid_latitude}};
}

StationSet stations_from_json(const Json& j, const RiverNetwork& net, const GridFile* grid, double snap_km) {
  const Json list = field<Json>(j, "stations", "stations");
  if (!list.is_array()) throw ParseError("stations: 'stations' must be an array");
  StationSet out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Json& s = list[i];
    std::string where = "station #" + std::to_string(i + 1);
    Station st;
    st.id = field<std::string>(s, "id", where);
    where = "station " + st.id;
    if (s.contains("segment")) {
      st.location = {field<int>(s, "segment", where), field<double>(s, "offset_km", where)};
      net.validate(st.location);
    } else {
      st.location = net.snap({field<double>(s, "x", where), field<double>(s, "y", where)}, snap_km);
    }
    st.position = s.contains("x") ? Point2{field<double>(s, "x", where), field<double>(s, "y", where)} : net.position(st.location);
    if (s.contains("catchment")) {
      const Json& c = s.at("catchment");
      st.summary.location = st.location;
      st.summary.hydro_position = {field<double>(c, "hydro_x", where), field<double>(c, "hydro_y", where)};
      st.summary.altitude_volume = c.contains("altitude_volume") ? field<double>(c, "altitude_volume", where) : 0.0;
      st.summary.area = c.contains("area_km2") ? field<double>(c, "area_km2", where) : 0.0;
      st.summary.mean_altitude = c.contains("mean_altitude_m") ? field<double>(c, "mean_altitude_m", where) : 0.0;
      st.summary.mean_slope = c.contains("mean_slope") ? field<double>(c, "mean_slope", where) : 0.0;
      st.summary.centroid_latitude = c.contains("centroid_latitude") ? field<double>(c, "centroid_latitude", where) : 0.0;
    } else if (grid && !grid->drainage.segment.empty()) {
      st.summary = catchment_summary(grid->grid, catchment_mask(net, grid->grid, grid->drainage, st.location), st.location);
    } else {
      throw InputError(where + ": no catchment block and no drainage grid to derive one");
    }
    out.push_back(std::move(st));
  }
  validate_stations(net, out);
  return out;
}

Json stations_to_json(const StationSet& stations) {
  Json list = Json::array();
  for (const Station& s : stations) {
    list.push_back({{"id", s.id},
                    {"segment", s.location.segment_id},
                    {"offset_km", s.location.offset},
                    {"x", s.position[0]},
                    {"y", s.position[1]},
                    {"catchment", summary_to_json(s.summary)}});
  }
  return Json{{"stations", list}};
}

DailyPanel read_discharge_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = csv_lines(path);
  const std::vector<std::string> head = split(lines[0], ',');
  if (head.size() < 3 || head[0] != "station_id" || head[1] != "date" || head[2] != "discharge_m3s") {
    throw ParseError(path.string() + ": header must be station_id,date,discharge_m3s");
  }
  std::map<long, std::string> dates;
  std::map<std::string, int> station_col;
  std::vector<std::string> ids;
  std::vector<std::tuple<long, int, double>> obs;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    const std::vector<std::string> f = split(lines[i], ',');
    if (f.size() < 3) throw ParseError(where + ": expected 3 fields");
    const long day = day_number(f[1], where);
    dates.emplace(day, f[1]);
    auto it = station_col.find(f[0]);
    if (it == station_col.end()) {
      it = station_col.emplace(f[0], static_cast<int>(ids.size())).first;
      ids.push_back(f[0]);
    }
    const double v = parse_number(f[2], where);
    if (std::isfinite(v) && v < 0.0) throw InputError(where + ": negative discharge");
    obs.emplace_back(day, it->second, v);
  }
  DailyPanel panel;
  panel.station_ids = ids;
  std::map<long, int> row;
  int block = -1;
  long prev = std::numeric_limits<long>::min();
  for (const auto& [day, text] : dates) {
    if (day != prev + 1) ++block;
    row[day] = static_cast<int>(panel.dates.size());
    panel.dates.push_back(text);
    panel.block.push_back(block);
    prev = day;
  }
  panel.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(panel.dates.size()),
                                           static_cast<Eigen::Index>(ids.size()), kNaN);
  for (const auto& [day, col, v] : obs) {
    double& cell = panel.values(row.at(day), col);
    if (!std::isnan(cell)) throw InputError(path.string() + ": duplicate value for station " + ids[static_cast<std::size_t>(col)] + " on " + dates.at(day));
    cell = v;
  }
  panel.check();
  return panel;
}

void write_discharge_csv(const std::filesystem::path& path, const DailyPanel& panel) {
  std::string out = "station_id,date,discharge_m3s\n";
  for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
      if (std::isnan(panel.values(i, j))) continue;
      out += panel.station_ids[static_cast<std::size_t>(j)] + "," + panel.dates[static_cast<std::size_t>(i)] + "," +
             format_number(panel.values(i, j)) + "\n";
    }
  }
  write_text(path, out);
}

void write_events_csv(const std::filesystem::path& path, const EventMatrix& ev) {
  std::string out = "event,block,start,length,center,start_date,center_date";
  for (const std::string& id : ev.station_ids) out += ",raw_" + id;
  const bool pareto = ev.pareto.rows() == ev.raw.rows() && ev.pareto.cols() == ev.raw.cols() && ev.raw.rows() > 0;
  if (pareto) {
    for (const std::string& id : ev.station_ids) out += ",pareto_" + id;
  }
  out += "\n";
  for (int i = 0; i < ev.size(); ++i) {
    const EventWindow& w = ev.windows[static_cast<std::size_t>(i)];
    out += std::to_string(i + 1) + "," + std::to_string(w.block) + "," + std::to_string(w.start) + "," +
           std::to_string(w.length) + "," + std::to_string(w.center) + "," + ev.start_dates[static_cast<std::size_t>(i)] +
           "," + ev.center_dates[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < ev.raw.cols(); ++j) out += "," + format_number(ev.raw(i, j));
    if (pareto) {
      for (Eigen::Index j = 0; j < ev.raw.cols(); ++j) out += "," + format_number(ev.pareto(i, j));
    }
    out += "\n";
  }
  write_text(path, out);
}

EventMatrix read_events_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = csv_lines(path);
  const std::vector<std::string> head = split(lines[0], ',');
  constexpr std::size_t kFixed = 7;
  if (head.size() <= kFixed || head[0] != "event" || head[6] != "center_date") {
    throw ParseError(path.string() + ": not an events file (expected event,block,start,length,center,start_date,center_date,...)");
  }
  EventMatrix ev;
  std::vector<std::size_t> raw_cols;
  std::vector<std::size_t> par_cols;
  for (std::size_t c = kFixed; c < head.size(); ++c) {
    if (head[c].rfind("raw_", 0) == 0) {
      ev.station_ids.push_back(head[c].substr(4));
      raw_cols.push_back(c);
    } else if (head[c].rfind("pareto_", 0) == 0) {
      par_cols.push_back(c);
    } else {
      throw ParseError(path.string() + ": unexpected column '" + head[c] + "'");
    }
  }
  if (raw_cols.empty()) throw ParseError(path.string() + ": no raw_<station> columns");
  if (!par_cols.empty() && par_cols.size() != raw_cols.size()) {
    throw ParseError(path.string() + ": pareto columns do not match raw columns");
  }
  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  const auto m = static_cast<Eigen::Index>(raw_cols.size());
  ev.raw.resize(n, m);
  if (!par_cols.empty()) ev.pareto.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string where = path.string() + ":" + std::to_string(i + 2);
    const std::vector<std::string> f = split(lines[static_cast<std::size_t>(i) + 1], ',');
    if (f.size() != head.size()) throw ParseError(where + ": expected " + std::to_string(head.size()) + " fields");
    EventWindow w;
    w.block = static_cast<int>(parse_number(f[1], where));
    w.start = static_cast<int>(parse_number(f[2], where));
    w.length = static_cast<int>(parse_number(f[3], where));
    w.center = static_cast<int>(parse_number(f[4], where));
    ev.windows.push_back(w);
    ev.start_dates.push_back(f[5]);
    ev.center_dates.push_back(f[6]);
    for (Eigen::Index j = 0; j < m; ++j) ev.raw(i, j) = parse_number(f[raw_cols[static_cast<std::size_t>(j)]], where);
    for (std::size_t j = 0; j < par_cols.size(); ++j) {
      ev.pareto(i, static_cast<Eigen::Index>(j)) = parse_number(f[par_cols[j]], where);
    }
  }
  return ev;
}

Json model_to_json(const ModelFile& m) {
  const KernelParams p = m.params.normalized();
  return Json{{"variant", std::string(to_string(p.variant))},
              {"lambda_riv", p.lambda_riv},
              {"lambda_euc", p.lambda_euc},
              {"tau_km", p.tau},
              {"alpha", p.alpha},
              {"beta_rad", p.beta},
              {"c", p.c},
              {"events_per_year", m.events_per_year},
              {"station_ids", m.station_ids},
              {"report", m.report.is_null() ? Json::object() : m.report}};
}

ModelFile model_from_json(const Json& j) {
  ModelFile m;
  m.params.variant = variant_from_string(field<std::string>(j, "variant", "model"));
  m.params.lambda_riv = field<double>(j, "lambda_riv", "model");
  m.params.lambda_euc = field<double>(j, "lambda_euc", "model");
  m.params.tau = field<double>(j, "tau_km", "model");
  m.params.alpha = field<double>(j, "alpha", "model");
  m.params.beta = field<double>(j, "beta_rad", "model");
  m.params.c = field<double>(j, "c", "model");
  m.params = m.params.normalized();
  m.params.check();
  m.events_per_year = j.contains("events_per_year") ? field<double>(j, "events_per_year", "model") : 0.0;
  if (j.contains("station_ids")) m.station_ids = field<std::vector<std::string>>(j, "station_ids", "model");
  if (j.contains("report")) m.report = j.at("report");
  return m;
}

Json margins_to_json(const MarginsFile& m) {
  Json st = Json::array();
  for (std::size_t i = 0; i < m.fits.size(); ++i) {
    const StationFit& f = m.fits[i];
    st.push_back({{"id", m.station_ids[i]},
                  {"loc", f.params.loc},
                  {"scale", f.params.scale},
                  {"shape", f.params.shape},
                  {"se_scale", nan_or_number(f.se[0])},
                  {"se_loc", nan_or_number(f.se[1])},
                  {"se_shape", nan_or_number(f.se[2])},
                  {"threshold", f.threshold},
                  {"n_exceed", f.n_exceed},
                  {"n_years", f.n_years},
                  {"nll", f.nll},
                  {"shape_fixed", f.shape_fixed}});
  }
  Json j{{"stations", st}};
  if (m.has_regional) {
    Json regions = Json::array();
    for (const RegionFit& r : m.regional.regions) {
      std::vector<std::string> sc;
      std::vector<std::string> lc;
      for (Covariate c : r.spec.scale_covariates) sc.push_back(covariate_name(c));
      for (Covariate c : r.spec.loc_covariates) lc.push_back(covariate_name(c));
      Json se = Json::array();
      for (Eigen::Index k = 0; k < r.se.size(); ++k) se.push_back(nan_or_number(r.se[k]));
      regions.push_back({{"name", r.spec.name},
                         {"scale_covariates", sc},
                         {"loc_covariates", lc},
                         {"alpha", std::vector<double>(r.alpha.data(), r.alpha.data() + r.alpha.size())},
                         {"beta", std::vector<double>(r.beta.data(), r.beta.data() + r.beta.size())},
                         {"shape", r.shape},
                         {"se", se},
                         {"nll", r.nll}});
    }
    Json seg = Json::object();
    for (const auto& [id, name] : m.regional.segment_region) seg[std::to_string(id)] = name;
    j["regional"] = {{"regions", regions}, {"station_region", m.regional.station_region}, {"segment_region", seg}};
  }
  return j;
}

MarginsFile margins_from_json(const Json& j) {
  MarginsFile m;
  for (const Json& s : field<Json>(j, "stations", "margins")) {
    const std::string id = field<std::string>(s, "id", "margins");
    const std::string where = "margins station " + id;
    StationFit f;
    f.params.loc = field<double>(s, "loc", where);
    f.params.scale = field<double>(s, "scale", where);
    f.params.shape = field<double>(s, "shape", where);
    if (!(f.params.scale > 0.0)) throw InputError(where + ": scale must be positive");
    if (s.contains("se_scale")) f.se = {number_or_nan(s["se_scale"]), number_or_nan(s["se_loc"]), number_or_nan(s["se_shape"])};
    f.threshold = s.contains("threshold") ? field<double>(s, "threshold", where) : -std::numeric_limits<double>::infinity();
    f.n_exceed = s.contains("n_exceed") ? field<int>(s, "n_exceed", where) : 0;
    f.n_years = s.contains("n_years") ? field<double>(s, "n_years", where) : 0.0;
    f.nll = s.contains("nll") ? field<double>(s, "nll", where) : 0.0;
    f.shape_fixed = s.contains("shape_fixed") && field<bool>(s, "shape_fixed", where);
    m.station_ids.push_back(id);
    m.fits.push_back(f);
  }
  if (j.contains("regional")) {
    m.has_regional = true;
    const Json& r = j.at("regional");
    for (const Json& g : field<Json>(r, "regions", "margins regional")) {
      RegionFit fit;
      fit.spec.name = field<std::string>(g, "name", "region");
      fit.spec.scale_covariates.clear();
      fit.spec.loc_covariates.clear();
      for (const auto& c : field<std::vector<std::string>>(g, "scale_covariates", "region")) fit.spec.scale_covariates.push_back(covariate_from_string(c));
      for (const auto& c : field<std::vector<std::string>>(g, "loc_covariates", "region")) fit.spec.loc_covariates.push_back(covariate_from_string(c));
      const auto a = field<std::vector<double>>(g, "alpha", "region");
      const auto b = field<std::vector<double>>(g, "beta", "region");
      if (a.size() != fit.spec.scale_covariates.size() || b.size() != fit.spec.loc_covariates.size()) {
        throw ParseError("region " + fit.spec.name + ": coefficient count does not match covariates");
      }
      fit.alpha = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
      fit.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
      fit.shape = field<double>(g, "shape", "region");
      if (g.contains("se")) {
        fit.se.resize(static_cast<Eigen::Index>(g["se"].size()));
        for (std::size_t k = 0; k < g["se"].size(); ++k) fit.se[static_cast<Eigen::Index>(k)] = number_or_nan(g["se"][k]);
      }
      fit.nll = g.contains("nll") ? field<double>(g, "nll", "region") : 0.0;
      m.regional.regions.push_back(std::move(fit));
    }
    if (r.contains("station_region")) m.regional.station_region = field<std::map<std::string, std::string>>(r, "station_region", "regional");
    if (r.contains("segment_region")) {
      for (const auto& [k, v] : r.at("segment_region").items()) m.regional.segment_region[std::stoi(k)] = v.get<std::string>();
    }
  }
  return m;
}

std::vector<int> select_columns(const std::vector<std::string>& all, const std::vector<std::string>& ids) {
  std::vector<int> out;
  for (const std::string& id : ids) {
    const auto it = std::find(all.begin(), all.end(), id);
    if (it == all.end()) throw InputError("unknown station id '" + id + "'");
    out.push_back(static_cast<int>(it - all.begin()));
  }
  return out;
}

}  // namespace rivex::io
