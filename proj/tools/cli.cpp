#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "rivex/errors.hpp"
#include "rivex/events.hpp"
#include "rivex/fit.hpp"
#include "rivex/hr_core.hpp"
#include "rivex/io.hpp"
#include "rivex/kernels.hpp"
#include "rivex/margins.hpp"
#include "rivex/parallel.hpp"
#include "rivex/risk.hpp"
#include "rivex/simulate.hpp"

namespace rivex::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string join_numbers(const Eigen::VectorXd& v, const char* sep) {
  std::vector<std::string> s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s.push_back(io::format_number(v[i]));
  return join(s, sep);
}

// Type-7 empirical quantile of the finite entries.
double empirical_quantile(std::vector<double> v, double p) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) throw EstimationError("no data for an empirical quantile");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Blocks from the first to the last event; windows are stored in selection order.
int block_span(const EventMatrix& ev) {
  if (ev.windows.empty()) return 0;
  const auto [lo, hi] = std::minmax_element(ev.windows.begin(), ev.windows.end(),
                                            [](const EventWindow& a, const EventWindow& b) { return a.block < b.block; });
  return hi->block - lo->block + 1;
}

struct Common {
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
};

// Records inputs, outputs and timings; written next to the main output.
class Manifest {
 public:
  Manifest(std::string sub, const std::vector<std::string>& argv) : sub_(std::move(sub)), args_(argv) {
    start_ = std::chrono::steady_clock::now();
  }
  void input(const std::string& path) {
    if (path.empty()) return;
    std::string bytes;
    try {
      bytes = io::read_text(path);
    } catch (const IoError&) {
      return;
    }
    inputs_.push_back({{"path", path}, {"bytes", bytes.size()}, {"fnv1a64", hex(fnv1a(bytes))}});
  }
  void output(const std::string& path) { outputs_.push_back(path); }
  void stage(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    timings_[name] = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }
  Json& summary() { return summary_; }
  void write(const Common& c) const {
    if (c.out.empty()) return;
    Json j;
    j["tool"] = "rivex";
    j["version"] = kVersion;
    j["subcommand"] = sub_;
    j["arguments"] = args_;
    j["seed"] = c.seed;
    j["threads"] = thread_count();
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    Json t = Json::object();
    for (const auto& [k, v] : timings_) t[k] = v;
    t["total"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    j["timings_ms"] = t;
    j["summary"] = summary_;
    io::write_json(c.out + ".manifest.json", j);
  }

 private:
  std::string sub_;
  std::vector<std::string> args_;
  std::chrono::steady_clock::time_point start_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  Json inputs_ = Json::array();
  std::vector<std::string> outputs_;
  std::map<std::string, double> timings_;
  Json summary_ = Json::object();
};

struct Inputs {
  std::string network;
  std::string station_file;
  std::string grid;
  std::string discharge;
  std::string events;
  std::string model;
  std::string margins;
  double snap_km = 0.1;
};

// Stations in the order of `ids` (all stations when empty).
StationSet load_stations(const Inputs& in, const RiverNetwork& net, const std::vector<std::string>& ids = {}) {
  std::optional<io::GridFile> grid;
  if (!in.grid.empty()) grid = io::grid_from_json(io::read_json(in.grid));
  StationSet all = io::stations_from_json(io::read_json(in.station_file), net, grid ? &*grid : nullptr, in.snap_km);
  if (ids.empty()) return all;
  std::vector<std::string> have;
  for (const Station& s : all) have.push_back(s.id);
  StationSet out;
  for (int k : io::select_columns(have, ids)) out.push_back(all[static_cast<std::size_t>(k)]);
  return out;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InputError(std::string("missing required option ") + flag);
}

Json params_json(const KernelParams& p) {
  return Json{{"lambda_riv", p.lambda_riv}, {"lambda_euc", p.lambda_euc}, {"tau_km", p.tau},
              {"alpha", p.alpha},           {"beta_rad", p.beta},         {"c", p.c}};
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const Common& c, const Inputs& in, Manifest& man) {
  require(in.network, "--network");
  require(in.station_file, "--station-file");
  const RiverNetwork net = io::network_from_json(io::read_json(in.network));
  man.input(in.network);
  man.input(in.station_file);
  man.input(in.grid);
  const StationSet st = load_stations(in, net);
  man.stage("stations");
  std::cout << "network: " << net.segments().size() << " segments, root " << net.root_id() << "\n";
  std::cout << "stations: " << st.size() << "\n";
  man.summary()["segments"] = net.segments().size();
  man.summary()["stations"] = st.size();
  if (!in.discharge.empty()) {
    man.input(in.discharge);
    const DailyPanel panel = io::read_discharge_csv(in.discharge);
    std::set<int> blocks(panel.block.begin(), panel.block.end());
    const double missing = static_cast<double>(panel.values.array().isNaN().count()) /
                           static_cast<double>(std::max<Eigen::Index>(panel.values.size(), 1));
    std::vector<std::string> known;
    for (const Station& s : st) known.push_back(s.id);
    io::select_columns(known, panel.station_ids);
    std::cout << "discharge: " << panel.days() << " days in " << blocks.size() << " blocks, " << panel.stations()
              << " stations, missing fraction " << missing << "\n";
    man.summary()["days"] = panel.days();
    man.summary()["blocks"] = blocks.size();
    man.summary()["missing_fraction"] = missing;
    man.stage("discharge");
  }
  if (!c.out.empty()) {
    io::write_json(c.out, io::stations_to_json(st));
    man.output(c.out);
  }
  return 0;
}

// ---------------------------------------------------------------- decluster

int cmd_decluster(const Common& c, const Inputs& in, int window, Manifest& man) {
  require(in.discharge, "--discharge");
  require(c.out, "--out");
  man.input(in.discharge);
  const DailyPanel panel = io::read_discharge_csv(in.discharge);
  man.stage("read");
  EventMatrix ev = decluster(panel, DeclusterOptions{window, c.seed});
  attach_pareto(ev);
  man.stage("decluster");
  io::write_events_csv(c.out, ev);
  man.output(c.out);
  std::set<int> all_blocks(panel.block.begin(), panel.block.end());
  const double K = static_cast<double>(ev.size()) / static_cast<double>(all_blocks.size());
  std::cout << "events: " << ev.size() << " in " << all_blocks.size() << " blocks (" << K << " per block)\n";
  man.summary()["events"] = ev.size();
  man.summary()["blocks"] = all_blocks.size();
  man.summary()["events_per_year"] = K;
  man.summary()["window"] = window;
  return 0;
}

// ---------------------------------------------------------------- fit-margins

struct MarginArgs {
  double quantile = 0.9;
  double n_years = 0.0;
  std::optional<double> fixed_shape;
  int bootstrap = 0;
  std::string regions;
};

int cmd_fit_margins(const Common& c, const Inputs& in, const MarginArgs& a, Manifest& man) {
  require(in.events, "--events");
  require(c.out, "--out");
  if (!(a.quantile > 0.0 && a.quantile < 1.0)) throw InputError("--quantile must lie in (0, 1)");
  man.input(in.events);
  const EventMatrix ev = io::read_events_csv(in.events);
  const double n_years = a.n_years > 0.0 ? a.n_years : static_cast<double>(block_span(ev));
  MarginFitOptions opt;
  opt.fixed_shape = a.fixed_shape;
  io::MarginsFile out;
  std::vector<MarginStation> ms;
  std::printf("%-10s %6s %10s %12s %12s %9s %9s\n", "station", "n_exc", "threshold", "scale", "loc", "shape", "se_shape");
  for (Eigen::Index j = 0; j < ev.raw.cols(); ++j) {
    const std::string& id = ev.station_ids[static_cast<std::size_t>(j)];
    std::vector<double> col(ev.raw.col(j).data(), ev.raw.col(j).data() + ev.raw.rows());
    const double q = empirical_quantile(col, a.quantile);
    std::vector<double> exc;
    for (double v : col) {
      if (std::isfinite(v) && v > q) exc.push_back(v);
    }
    StationFit f;
    try {
      f = fit_station(exc, q, n_years, opt);
    } catch (const EstimationError& e) {
      throw EstimationError("station " + id + ": " + e.what());
    }
    if (a.bootstrap > 0) f.se = bootstrap_station_se(exc, q, n_years, a.bootstrap, derive_seed(c.seed, static_cast<std::uint64_t>(j)));
    std::printf("%-10s %6d %10.4g %12.5g %12.5g %9.4f %9.4f\n", id.c_str(), f.n_exceed, q, f.params.scale, f.params.loc,
                f.params.shape, f.se[2]);
    out.station_ids.push_back(id);
    out.fits.push_back(f);
    MarginStation s;
    s.id = id;
    s.exceed = exc;
    s.threshold = q;
    s.n_years = n_years;
    ms.push_back(std::move(s));
  }
  man.stage("stations");
  if (!a.regions.empty()) {
    require(in.network, "--network");
    require(in.station_file, "--station-file");
    man.input(a.regions);
    const RiverNetwork net = io::network_from_json(io::read_json(in.network));
    const StationSet st = load_stations(in, net, ev.station_ids);
    const Json rj = io::read_json(a.regions);
    std::vector<RegionSpec> specs;
    std::map<std::string, std::string> station_region;
    std::map<int, std::string> segment_region;
    for (const Json& r : rj.at("regions")) {
      RegionSpec spec;
      spec.name = r.at("name").get<std::string>();
      if (r.contains("scale_covariates")) {
        spec.scale_covariates.clear();
        for (const auto& n : r.at("scale_covariates")) spec.scale_covariates.push_back(covariate_from_string(n.get<std::string>()));
      }
      if (r.contains("loc_covariates")) {
        spec.loc_covariates.clear();
        for (const auto& n : r.at("loc_covariates")) spec.loc_covariates.push_back(covariate_from_string(n.get<std::string>()));
      }
      for (const auto& id : r.value("stations", Json::array())) station_region[id.get<std::string>()] = spec.name;
      for (const auto& sid : r.value("segments", Json::array())) segment_region[sid.get<int>()] = spec.name;
      specs.push_back(std::move(spec));
    }
    for (std::size_t j = 0; j < ms.size(); ++j) {
      ms[j].summary = st[j].summary;
      const auto it = station_region.find(ms[j].id);
      if (it == station_region.end()) {
        if (specs.size() != 1) throw InputError("station " + ms[j].id + " is not assigned to a region");
        ms[j].region = specs.front().name;
      } else {
        ms[j].region = it->second;
      }
      segment_region.emplace(st[j].location.segment_id, ms[j].region);
    }
    out.regional = fit_regional(ms, specs, opt);
    // Segments without an assignment take the region of the nearest assigned segment downstream.
    for (const Segment& seg : net.segments()) {
      if (segment_region.count(seg.id)) continue;
      for (int d : net.downstream_set(seg.id)) {
        if (segment_region.count(d)) {
          segment_region[seg.id] = segment_region.at(d);
          break;
        }
      }
    }
    out.regional.segment_region = segment_region;
    out.has_regional = true;
    for (const RegionFit& r : out.regional.regions) {
      std::cout << "region " << r.spec.name << ": shape " << r.shape << ", nll " << r.nll << "\n";
    }
    man.stage("regional");
  }
  io::write_json(c.out, io::margins_to_json(out));
  man.output(c.out);
  man.summary()["stations"] = out.fits.size();
  man.summary()["n_years"] = n_years;
  return 0;
}

// ---------------------------------------------------------------- fit-dependence

struct DependenceArgs {
  std::string variant = "full";
  std::string method = "censored";
  double spectral_quantile = 0.9;
  std::optional<double> spectral_threshold;
  std::vector<double> censored_u;
  int grid_points = 4;
  int censored_grid_points = 3;
  int max_evaluations = 2000;
  int mvn_points = 1000;
  int bootstrap = 0;
  std::vector<double> profile_alpha;
  bool allow_nonconverged = false;
};

int cmd_fit_dependence(const Common& c, const Inputs& in, const DependenceArgs& a, Manifest& man) {
  require(in.events, "--events");
  require(in.network, "--network");
  require(in.station_file, "--station-file");
  require(c.out, "--out");
  man.input(in.events);
  man.input(in.network);
  man.input(in.station_file);
  EventMatrix ev = io::read_events_csv(in.events);
  if (ev.pareto.rows() != ev.raw.rows()) attach_pareto(ev);
  const RiverNetwork net = io::network_from_json(io::read_json(in.network));
  const StationSet st = load_stations(in, net, ev.station_ids);
  const StationGeometry geo(net, st);
  man.stage("read");

  FitConfig cfg;
  cfg.method = method_from_string(a.method);
  cfg.spectral_quantile = a.spectral_quantile;
  cfg.spectral_threshold = a.spectral_threshold;
  if (a.censored_u.size() == 1) {
    cfg.censored_default = a.censored_u[0];
  } else if (!a.censored_u.empty()) {
    cfg.censored_u = Eigen::Map<const Eigen::VectorXd>(a.censored_u.data(), static_cast<Eigen::Index>(a.censored_u.size()));
  }
  cfg.grid_points = a.grid_points;
  cfg.censored_grid_points = a.censored_grid_points;
  cfg.max_evaluations = a.max_evaluations;
  cfg.mvn_points = a.mvn_points;
  cfg.seed = c.seed;
  cfg.require_convergence = !a.allow_nonconverged;
  const Variant variant = variant_from_string(a.variant);
  std::optional<KernelParams> start;
  if (!in.model.empty()) {
    man.input(in.model);
    start = io::model_from_json(io::read_json(in.model)).params;
  }
  FitResult fit = fit_dependence(cfg, ev.pareto, geo, variant, start);
  man.stage("fit");
  if (a.bootstrap > 0) {
    bootstrap_se(cfg, ev.pareto, geo, fit, a.bootstrap, derive_seed(c.seed, 0xb007));
    man.stage("bootstrap");
  }
  Json report;
  report["method"] = std::string(to_string(fit.method));
  report["loglik"] = fit.loglik;
  report["n_used"] = fit.n_used;
  report["n_total"] = fit.n_total;
  report["converged"] = fit.converged;
  report["evaluations"] = fit.evaluations;
  report["boundary"] = fit.boundary;
  report["start"] = params_json(fit.start);
  if (fit.method == Method::spectral) {
    report["spectral_threshold"] = fit.spectral_threshold;
  } else {
    report["censored_u"] = std::vector<double>(fit.censored_u.data(), fit.censored_u.data() + fit.censored_u.size());
  }
  report["seed"] = c.seed;
  if (a.bootstrap > 0) {
    report["bootstrap_replicates"] = fit.replicates.rows();
    Json se;
    for (std::size_t k = 0; k < 6; ++k) se[kParamNames[k]] = fit.se[k];
    report["se"] = se;
  }
  if (!a.profile_alpha.empty()) {
    Json prof = Json::array();
    for (const ProfilePoint& p : profile_alpha(cfg, ev.pareto, geo, variant, a.profile_alpha, fit.estimate)) {
      prof.push_back({{"alpha", p.alpha}, {"loglik", p.loglik}, {"params", params_json(p.params)}});
    }
    report["profile_alpha"] = prof;
    man.stage("profile");
  }
  io::ModelFile model;
  model.params = fit.estimate;
  model.station_ids = ev.station_ids;
  const int years = block_span(ev);
  model.events_per_year = static_cast<double>(ev.size()) / static_cast<double>(std::max(years, 1));
  model.report = report;
  io::write_json(c.out, io::model_to_json(model));
  man.output(c.out);

  std::printf("variant %s, method %s\n", a.variant.c_str(), a.method.c_str());
  const std::array<double, 6> est = to_array(fit.estimate);
  for (int k : free_parameters(variant)) {
    const auto i = static_cast<std::size_t>(k);
    if (a.bootstrap > 0) {
      std::printf("  %-11s %12.6g  (%.3g)\n", kParamNames[i], est[i], fit.se[i]);
    } else {
      std::printf("  %-11s %12.6g\n", kParamNames[i], est[i]);
    }
  }
  std::printf("log-likelihood %.6f, events used %d of %d (%s), %d evaluations%s\n", fit.loglik, fit.n_used, fit.n_total,
              fit.method == Method::spectral ? "|I|" : "|J|", fit.evaluations, fit.converged ? "" : ", NOT converged");
  if (!fit.boundary.empty()) std::printf("estimate on the box boundary: %s\n", join(fit.boundary, ", ").c_str());
  man.summary() = report;
  man.summary()["events_per_year"] = model.events_per_year;
  return 0;
}

// ---------------------------------------------------------------- model helpers

struct LoadedModel {
  io::ModelFile model;
  StationSet stations;
  std::vector<std::string> ids;
};

LoadedModel load_model(const Inputs& in, Manifest& man, const std::vector<std::string>& group = {}) {
  require(in.model, "--model");
  require(in.network, "--network");
  require(in.station_file, "--station-file");
  man.input(in.model);
  man.input(in.network);
  man.input(in.station_file);
  LoadedModel lm;
  lm.model = io::model_from_json(io::read_json(in.model));
  const RiverNetwork net = io::network_from_json(io::read_json(in.network));
  std::vector<std::string> ids = group.empty() ? lm.model.station_ids : group;
  lm.stations = load_stations(in, net, ids);
  for (const Station& s : lm.stations) lm.ids.push_back(s.id);
  return lm;
}

HrStructure structure_of(const LoadedModel& lm, const Inputs& in) {
  const RiverNetwork net = io::network_from_json(io::read_json(in.network));
  return HrStructure(StationGeometry(net, lm.stations).gamma_matrix(lm.model.params));
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Common& c, const Inputs& in, int n, bool pareto, Manifest& man) {
  require(c.out, "--out");
  if (n < 1) throw InputError("-n must be positive");
  const LoadedModel lm = load_model(in, man);
  const HrStructure hr = structure_of(lm, in);
  Eigen::MatrixXd draws = pareto ? sample_pareto_hr(hr, n, c.seed) : sample_hr(hr, n, c.seed);
  man.stage("simulate");
  if (!in.margins.empty()) {
    man.input(in.margins);
    const io::MarginsFile mf = io::margins_from_json(io::read_json(in.margins));
    std::vector<double> xi;
    std::vector<double> a;
    std::vector<double> b;
    for (int k : io::select_columns(mf.station_ids, lm.ids)) {
      const GevParams& g = mf.fits[static_cast<std::size_t>(k)].params;
      xi.push_back(g.shape);
      a.push_back(g.scale);
      b.push_back(g.loc);
    }
    draws = to_gev_margins(draws, xi, a, b);
  }
  std::string text = join(lm.ids, ",") + "\n";
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < draws.cols(); ++j) text += (j ? "," : "") + io::format_number(draws(i, j));
    text += "\n";
  }
  io::write_text(c.out, text);
  man.output(c.out);
  man.summary()["draws"] = n;
  man.summary()["margins"] = in.margins.empty() ? (pareto ? "pareto" : "frechet") : "gev";
  std::cout << "wrote " << n << " draws for " << lm.ids.size() << " stations\n";
  return 0;
}

// ---------------------------------------------------------------- exceed

struct ExceedArgs {
  std::vector<std::string> group;
  std::vector<double> quantiles;
  std::vector<double> levels;
  double events_per_year = 0.0;
};

int cmd_exceed(const Common& c, const Inputs& in, const ExceedArgs& a, Manifest& man) {
  if (a.group.empty()) throw InputError("--stations is required");
  if (a.quantiles.empty() == a.levels.empty()) throw InputError("give either --quantile or --levels");
  if (!a.levels.empty() && a.levels.size() != a.group.size()) throw InputError("--levels needs one value per station");
  const LoadedModel lm = load_model(in, man, a.group);
  const HrStructure hr = structure_of(lm, in);
  const double K = a.events_per_year > 0.0 ? a.events_per_year : lm.model.events_per_year;
  if (!(K > 0.0)) throw InputError("events per year unknown: the model file has none and --events-per-year is not set");
  std::vector<GevParams> gev;
  std::vector<double> thresholds;
  if (!in.margins.empty()) {
    man.input(in.margins);
    const io::MarginsFile mf = io::margins_from_json(io::read_json(in.margins));
    for (int k : io::select_columns(mf.station_ids, lm.ids)) {
      gev.push_back(mf.fits[static_cast<std::size_t>(k)].params);
      thresholds.push_back(mf.fits[static_cast<std::size_t>(k)].threshold);
    }
  } else if (!a.levels.empty()) {
    throw InputError("--levels are on the discharge scale and need --margins");
  }
  RiskOptions ro;
  ro.seed = c.seed;
  std::string text = "query,stations,p,levels,frechet_levels,rate_per_year,per_event,error,method\n";
  const std::string group = join(lm.ids, ";");
  auto emit = [&](int q, double p, const Eigen::VectorXd& lev, const ExceedanceResult& r) {
    text += std::to_string(q) + "," + group + "," + io::format_number(p) + "," + join_numbers(lev, ";") + "," +
            join_numbers(r.frechet_levels, ";") + "," + io::format_number(r.rate) + "," + io::format_number(r.per_event) +
            "," + io::format_number(r.error) + "," + r.method + "\n";
    std::printf("query %d: p=%s rate/year %.6g, per event %.6g (+- %.2g, %s)\n", q, io::format_number(p).c_str(), r.rate,
                r.per_event, r.error, r.method.c_str());
  };
  const auto k = static_cast<Eigen::Index>(lm.ids.size());
  int q = 0;
  for (double p : a.quantiles) {
    const double u = frechet_level_for_quantile(p, K);
    Eigen::VectorXd lev = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
    if (!gev.empty()) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const GevParams& g = gev[static_cast<std::size_t>(j)];
        lev[j] = g.shape == 0.0 ? g.loc + g.scale * std::log(u) : g.loc + g.scale * std::expm1(g.shape * std::log(u)) / g.shape;
        if (!(lev[j] > thresholds[static_cast<std::size_t>(j)])) {
          throw ModelRangeError("quantile " + io::format_number(p) + " at station " + lm.ids[static_cast<std::size_t>(j)] +
                                " corresponds to " + io::format_number(lev[j]) +
                                ", not above the fitted marginal threshold; the tail approximation is only valid above it");
        }
      }
    }
    emit(++q, p, lev, joint_exceedance_frechet(hr, Eigen::VectorXd::Constant(k, u), K, ro));
  }
  if (!a.levels.empty()) {
    const Eigen::VectorXd lev = Eigen::Map<const Eigen::VectorXd>(a.levels.data(), k);
    emit(++q, std::numeric_limits<double>::quiet_NaN(), lev, joint_exceedance(hr, gev, thresholds, lev, K, ro));
  }
  man.stage("risk");
  if (!c.out.empty()) {
    io::write_text(c.out, text);
    man.output(c.out);
  } else {
    std::cout << text;
  }
  man.summary()["queries"] = q;
  man.summary()["events_per_year"] = K;
  return 0;
}

// ---------------------------------------------------------------- groupmax

int cmd_groupmax(const Common& c, const Inputs& in, const std::vector<std::string>& group, std::vector<double> probs,
                 Manifest& man) {
  if (group.empty()) throw InputError("--stations is required");
  if (probs.empty()) probs = {0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.98, 0.99};
  const LoadedModel lm = load_model(in, man, group);
  const HrStructure hr = structure_of(lm, in);
  const GroupMaxResult g = group_max_quantiles(hr, probs);
  std::vector<double> observed(probs.size(), std::numeric_limits<double>::quiet_NaN());
  if (!in.discharge.empty()) {
    require(in.margins, "--margins");
    man.input(in.discharge);
    man.input(in.margins);
    const DailyPanel panel = io::read_discharge_csv(in.discharge);
    const io::MarginsFile mf = io::margins_from_json(io::read_json(in.margins));
    const Eigen::MatrixXd bm = block_maxima(panel);
    const std::vector<int> cols = io::select_columns(panel.station_ids, lm.ids);
    const std::vector<int> gcols = io::select_columns(mf.station_ids, lm.ids);
    std::vector<double> logmax;
    for (Eigen::Index b = 0; b < bm.rows(); ++b) {
      double mx = -std::numeric_limits<double>::infinity();
      bool complete = true;
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const double x = bm(b, cols[j]);
        if (!std::isfinite(x)) {
          complete = false;
          break;
        }
        mx = std::max(mx, frechet_transform(mf.fits[static_cast<std::size_t>(gcols[j])].params, x));
      }
      if (complete && mx > 0.0) logmax.push_back(std::log(mx));
    }
    for (std::size_t i = 0; i < probs.size(); ++i) observed[i] = empirical_quantile(logmax, probs[i]);
    man.summary()["observed_years"] = logmax.size();
  }
  std::string text = "stations,theta,p,gumbel,model,complete,independent,observed\n";
  for (std::size_t i = 0; i < g.rows.size(); ++i) {
    const GroupMaxRow& r = g.rows[i];
    text += join(lm.ids, ";") + "," + io::format_number(g.theta) + "," + io::format_number(r.p) + "," +
            io::format_number(r.gumbel) + "," + io::format_number(r.model) + "," + io::format_number(r.complete) + "," +
            io::format_number(r.independent) + "," + io::format_number(observed[i]) + "\n";
  }
  std::printf("group extremal coefficient %.6f (1 = complete dependence, %zu = independence)\n", g.theta, lm.ids.size());
  if (!c.out.empty()) {
    io::write_text(c.out, text);
    man.output(c.out);
  } else {
    std::cout << text;
  }
  man.summary()["theta"] = g.theta;
  return 0;
}

// ---------------------------------------------------------------- returnmap

int cmd_returnmap(const Common& c, const Inputs& in, double T, double step, Manifest& man) {
  require(in.margins, "--margins");
  require(in.network, "--network");
  require(in.grid, "--grid");
  require(c.out, "--out");
  man.input(in.margins);
  man.input(in.network);
  man.input(in.grid);
  const io::MarginsFile mf = io::margins_from_json(io::read_json(in.margins));
  if (!mf.has_regional) throw InputError("the margins file has no regional model (run fit-margins with --regions)");
  const RiverNetwork net = io::network_from_json(io::read_json(in.network));
  const io::GridFile grid = io::grid_from_json(io::read_json(in.grid));
  if (grid.drainage.segment.empty()) throw InputError("the grid file has no drainage arrays");
  int skipped = 0;
  const std::vector<ReturnMapRow> rows = network_return_map(mf.regional, net, grid.grid, grid.drainage, T, step, &skipped);
  std::string text = "segment,offset_km,x,y,region,loc,scale,shape,return_level\n";
  for (const ReturnMapRow& r : rows) {
    text += std::to_string(r.segment) + "," + io::format_number(r.offset) + "," + io::format_number(r.position[0]) + "," +
            io::format_number(r.position[1]) + "," + r.region + "," + io::format_number(r.gev.loc) + "," +
            io::format_number(r.gev.scale) + "," + io::format_number(r.gev.shape) + "," + io::format_number(r.level) + "\n";
  }
  io::write_text(c.out, text);
  man.output(c.out);
  std::cout << rows.size() << " points, " << skipped << " skipped\n";
  man.summary()["points"] = rows.size();
  man.summary()["skipped"] = skipped;
  man.summary()["T_years"] = T;
  return 0;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const Common& c, const Inputs& in, Manifest& man) {
  const LoadedModel lm = load_model(in, man);
  const HrStructure hr = structure_of(lm, in);
  const int m = hr.dim();
  MvnOptions opt;
  opt.seed = c.seed;
  struct Check {
    std::string name;
    double value;
    double tol;
  };
  std::vector<Check> checks;

  Eigen::VectorXd x(m);
  for (int j = 0; j < m; ++j) x[j] = 1.0 + 0.37 * j;
  const double v1 = exponent_measure_V(hr, x, opt);
  const double v2 = exponent_measure_V(hr, 2.0 * x, opt);
  checks.push_back({"homogeneity V(2x) = V(x)/2 (relative)", std::abs(2.0 * v2 - v1) / v1, 1e-9});

  Eigen::VectorXd z = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  z[0] = 3.0;
  checks.push_back({"marginal V(3, inf, ...) = 1/3", std::abs(exponent_measure_V(hr, z, opt) - 1.0 / 3.0), 1e-9});

  const Eigen::VectorXd omega = x / x.sum();
  const double g0 = log_spectral_density(hr, omega);
  double anchor_diff = 0.0;
  for (int k = 1; k < m; ++k) anchor_diff = std::max(anchor_diff, std::abs(log_spectral_density(hr.with_anchor(k), omega) - g0));
  checks.push_back({"anchor invariance of log spectral density", anchor_diff, 1e-8});

  const CensoredTerm all = CensoredTerm::make(x, Eigen::VectorXd::Constant(m, 0.5));
  const double lf = log_censored_density(hr, all, opt);
  const double lg = g0 - (m + 1) * std::log(x.sum());
  checks.push_back({"full-exceedance density = |x|^-(m+1) g(x/|x|) (log scale)", std::abs(lf - lg), 1e-8});

  std::string text = "check,value,tolerance,pass\n";
  bool ok = true;
  for (const Check& ch : checks) {
    const bool pass = ch.value <= ch.tol;
    ok = ok && pass;
    std::printf("%-60s %.3e <= %.0e  %s\n", ch.name.c_str(), ch.value, ch.tol, pass ? "PASS" : "FAIL");
    text += ch.name + "," + io::format_number(ch.value) + "," + io::format_number(ch.tol) + "," + (pass ? "1" : "0") + "\n";
    man.summary()[ch.name] = pass;
  }
  if (!c.out.empty()) {
    io::write_text(c.out, text);
    man.output(c.out);
  }
  return ok ? 0 : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& argv) {
  CLI::App app{"Extremes on river networks: declustering, marginal and dependence fitting, simulation and joint risk",
               "rivex"};
  app.set_config("--config", "", "TOML/INI file whose keys mirror the command-line flags");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  Inputs in;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--seed", common.seed, "Master seed")->capture_default_str();
    s->add_option("--threads", common.threads, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    s->add_option("-o,--out", common.out, "Output file; a <out>.manifest.json is written next to it");
  };
  auto add_geo = [&](CLI::App* s) {
    s->add_option("--network", in.network, "Network JSON");
    s->add_option("--station-file", in.station_file, "Stations JSON");
    s->add_option("--grid", in.grid, "Elevation/drainage grid JSON (catchments for stations without one)");
    s->add_option("--snap-km", in.snap_km, "Snap tolerance for stations given by x, y")->capture_default_str();
  };

  CLI::App* ingest = app.add_subcommand("ingest", "Validate network, stations, grid and discharge files");
  add_common(ingest);
  add_geo(ingest);
  ingest->add_option("--discharge", in.discharge, "Daily discharge CSV (station_id,date,discharge_m3s)");

  int window = 9;
  CLI::App* dec = app.add_subcommand("decluster", "Extract multivariate events from daily discharges");
  add_common(dec);
  dec->add_option("--discharge", in.discharge, "Daily discharge CSV")->required();
  dec->add_option("--window", window, "Window length in days")->capture_default_str()->check(CLI::PositiveNumber);

  MarginArgs margs;
  double fixed_shape = 0.0;
  CLI::App* fm = app.add_subcommand("fit-margins", "Fit GEV margins by the point-process likelihood");
  add_common(fm);
  add_geo(fm);
  fm->add_option("--events", in.events, "Events CSV from decluster")->required();
  fm->add_option("--quantile", margs.quantile, "Per-station threshold quantile of event values")->capture_default_str();
  fm->add_option("--n-years", margs.n_years, "Observation years (default: span of blocks in the events file)");
  CLI::Option* fs_opt = fm->add_option("--fixed-shape", fixed_shape, "Hold the shape parameter at this value");
  fm->add_option("--bootstrap", margs.bootstrap, "Poisson bootstrap replicates for SEs (0 = observed information)");
  fm->add_option("--regions", margs.regions, "Regions JSON for the regional covariate model");

  DependenceArgs dargs;
  double spec_threshold = 0.0;
  CLI::App* fd = app.add_subcommand("fit-dependence", "Fit the dependence kernel (spectral or censored likelihood)");
  add_common(fd);
  add_geo(fd);
  fd->add_option("--events", in.events, "Events CSV from decluster")->required();
  fd->add_option("--variant", dargs.variant, "euclid | hydro | full | full_iso")->capture_default_str();
  fd->add_option("--method", dargs.method, "spectral | censored")->capture_default_str();
  fd->add_option("--spectral-quantile", dargs.spectral_quantile, "Quantile of |X|_1 used as spectral threshold")
      ->capture_default_str();
  CLI::Option* st_opt = fd->add_option("--spectral-threshold", spec_threshold, "Explicit |X|_1 threshold");
  fd->add_option("--censored-u", dargs.censored_u, "Pareto-scale censoring level (one value, or one per station)")
      ->delimiter(',');
  fd->add_option("--grid-points", dargs.grid_points, "Grid points per free parameter")->capture_default_str();
  fd->add_option("--censored-grid-points", dargs.censored_grid_points,
                 "Censored-likelihood grid points per free parameter for extra starts (0 = off)")
      ->capture_default_str();
  fd->add_option("--max-evals", dargs.max_evaluations, "Simplex evaluation budget")->capture_default_str();
  fd->add_option("--mvn-points", dargs.mvn_points, "Lattice points per Gaussian CDF in censored terms")->capture_default_str();
  fd->add_option("--bootstrap", dargs.bootstrap, "Bootstrap replicates for standard errors");
  fd->add_option("--profile-alpha", dargs.profile_alpha, "Alpha values for a profile likelihood")->delimiter(',');
  fd->add_option("--start", in.model, "Model JSON used as the starting point");
  fd->add_flag("--allow-nonconverged", dargs.allow_nonconverged, "Write the model even if the simplex did not converge");

  int n_draws = 1000;
  bool pareto = false;
  CLI::App* sim = app.add_subcommand("simulate", "Draw Hüsler-Reiss vectors for a fitted model");
  add_common(sim);
  add_geo(sim);
  sim->add_option("--model", in.model, "Model JSON")->required();
  sim->add_option("-n", n_draws, "Number of draws")->capture_default_str();
  sim->add_option("--margins", in.margins, "Margins JSON; draws are returned on the GEV scale");
  sim->add_flag("--pareto", pareto, "Multivariate Pareto draws instead of max-stable ones");

  ExceedArgs eargs;
  CLI::App* ex = app.add_subcommand("exceed", "Joint exceedance probabilities for a station group");
  add_common(ex);
  add_geo(ex);
  ex->add_option("--model", in.model, "Model JSON")->required();
  ex->add_option("--margins", in.margins, "Margins JSON (needed for --levels)");
  ex->add_option("--stations", eargs.group, "Station ids")->delimiter(',')->required();
  ex->add_option("--quantile", eargs.quantiles, "Per-event quantile levels p")->delimiter(',');
  ex->add_option("--levels", eargs.levels, "Discharge levels, one per station")->delimiter(',');
  ex->add_option("--events-per-year", eargs.events_per_year, "Override K from the model file");

  std::vector<std::string> gm_group;
  std::vector<double> gm_probs;
  CLI::App* gm = app.add_subcommand("groupmax", "Groupwise annual-maximum quantiles on the Gumbel scale");
  add_common(gm);
  add_geo(gm);
  gm->add_option("--model", in.model, "Model JSON")->required();
  gm->add_option("--stations", gm_group, "Station ids")->delimiter(',')->required();
  gm->add_option("--probs", gm_probs, "Probability levels")->delimiter(',');
  gm->add_option("--discharge", in.discharge, "Daily discharges for observed group maxima");
  gm->add_option("--margins", in.margins, "Margins JSON (with --discharge)");

  double T = 100.0;
  double step = 5.0;
  CLI::App* rm = app.add_subcommand("returnmap", "Return levels along the whole network");
  add_common(rm);
  add_geo(rm);
  rm->add_option("--margins", in.margins, "Margins JSON with a regional model")->required();
  rm->add_option("--T", T, "Return period in years")->capture_default_str();
  rm->add_option("--step", step, "Spacing along segments, km")->capture_default_str();

  CLI::App* va = app.add_subcommand("validate", "Internal consistency checks for a model file");
  add_common(va);
  add_geo(va);
  va->add_option("--model", in.model, "Model JSON")->required();

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    set_thread_count(common.threads);
    CLI::App* sub = app.get_subcommands().front();
    Manifest man(sub->get_name(), argv);
    int code = 0;
    if (sub == ingest) {
      code = cmd_ingest(common, in, man);
    } else if (sub == dec) {
      code = cmd_decluster(common, in, window, man);
    } else if (sub == fm) {
      if (*fs_opt) margs.fixed_shape = fixed_shape;
      code = cmd_fit_margins(common, in, margs, man);
    } else if (sub == fd) {
      if (*st_opt) dargs.spectral_threshold = spec_threshold;
      code = cmd_fit_dependence(common, in, dargs, man);
    } else if (sub == sim) {
      code = cmd_simulate(common, in, n_draws, pareto, man);
    } else if (sub == ex) {
      code = cmd_exceed(common, in, eargs, man);
    } else if (sub == gm) {
      code = cmd_groupmax(common, in, gm_group, gm_probs, man);
    } else if (sub == rm) {
      code = cmd_returnmap(common, in, T, step, man);
    } else if (sub == va) {
      code = cmd_validate(common, in, man);
    }
    man.summary()["exit_code"] = code;
    man.write(common);
    return code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Parse);
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitUnexpected;
  }
}

}  // namespace rivex::cli
