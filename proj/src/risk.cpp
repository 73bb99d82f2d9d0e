#include "rivex/risk.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rivex/errors.hpp"
#include "rivex/simulate.hpp"

namespace rivex {

double frechet_level_for_quantile(double p, double events_per_year) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("quantile level must lie in (0, 1)");
  if (!(events_per_year > 0.0)) throw InputError("events per year must be positive");
  return 1.0 / (events_per_year * (1.0 - p));
}

ExceedanceResult joint_exceedance_frechet(const HrStructure& hr, const Eigen::VectorXd& u, double events_per_year,
                                          const RiskOptions& opt) {
  const int k = hr.dim();
  if (u.size() != k) throw InputError("joint exceedance: one level per station is required");
  if (!(events_per_year > 0.0)) throw InputError("events per year must be positive");
  for (int j = 0; j < k; ++j) {
    if (!(u[j] > 0.0) || !std::isfinite(u[j])) throw ModelRangeError("Fréchet-scale levels must be positive and finite");
  }
  ExceedanceResult res;
  res.frechet_levels = u;
  if (k <= opt.exact_max) {
    res.method = "inclusion-exclusion";
    double total = 0.0;
    double err = 0.0;
    const unsigned full = (1u << k);
    for (unsigned mask = 1; mask < full; ++mask) {
      std::vector<int> idx;
      for (int j = 0; j < k; ++j) {
        if (mask & (1u << j)) idx.push_back(j);
      }
      Eigen::VectorXd us(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t r = 0; r < idx.size(); ++r) us[static_cast<Eigen::Index>(r)] = u[idx[r]];
      const VResult v = idx.size() == 1 ? VResult{1.0 / us[0], 0.0, true} : exponent_measure(hr.subset(idx), us, opt.mvn);
      total += (idx.size() % 2 == 1 ? 1.0 : -1.0) * v.value;
      err += v.error;
    }
    res.rate = total;
    res.error = err;
  } else {
    res.method = "monte-carlo";
    const Eigen::MatrixXd theta = sample_spectral_angles(hr, opt.mc_samples, opt.seed);
    const Eigen::ArrayXd inv = u.cwiseInverse().array();
    Eigen::VectorXd vals(theta.rows());
    for (Eigen::Index i = 0; i < theta.rows(); ++i) vals[i] = (theta.row(i).transpose().array() * inv).minCoeff();
    const double mean = vals.mean();
    const double var = (vals.array() - mean).square().sum() / static_cast<double>(std::max<Eigen::Index>(vals.size() - 1, 1));
    res.rate = k * mean;
    res.error = 3.0 * k * std::sqrt(var / static_cast<double>(vals.size()));
  }
  res.per_event = res.rate / events_per_year;
  return res;
}

ExceedanceResult joint_exceedance(const HrStructure& hr, std::span<const GevParams> margins,
                                  std::span<const double> thresholds, const Eigen::VectorXd& levels,
                                  double events_per_year, const RiskOptions& opt) {
  const auto k = static_cast<std::size_t>(hr.dim());
  if (margins.size() != k || static_cast<std::size_t>(levels.size()) != k) {
    throw InputError("joint exceedance: margins, levels and stations must have the same count");
  }
  if (!thresholds.empty() && thresholds.size() != k) throw InputError("joint exceedance: one threshold per station");
  Eigen::VectorXd u(static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    const double level = levels[static_cast<Eigen::Index>(j)];
    if (!thresholds.empty() && !(level > thresholds[j])) {
      throw ModelRangeError("level " + std::to_string(level) + " at position " + std::to_string(j + 1) +
                            " is not above the fitted marginal threshold " + std::to_string(thresholds[j]) +
                            "; the tail approximation is only valid above it");
    }
    bool below = false;
    u[static_cast<Eigen::Index>(j)] = frechet_transform(margins[j], level, false, &below);
    if (below) throw ModelRangeError("level below the lower endpoint of the fitted marginal distribution");
  }
  if (u.array().isInf().any()) {
    ExceedanceResult res;
    res.method = "inclusion-exclusion";
    res.frechet_levels = u;
    return res;
  }
  return joint_exceedance_frechet(hr, u, events_per_year, opt);
}

GroupMaxResult group_max_quantiles(const HrStructure& hr, std::span<const double> probs, const MvnOptions& opt) {
  GroupMaxResult res;
  res.theta = exponent_measure_V(hr, Eigen::VectorXd::Ones(hr.dim()), opt);
  const double log_m = std::log(static_cast<double>(hr.dim()));
  for (double p : probs) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("probability levels must lie in (0, 1)");
    GroupMaxRow r;
    r.p = p;
    r.gumbel = -std::log(-std::log(p));
    r.model = std::log(res.theta) + r.gumbel;
    r.complete = r.gumbel;
    r.independent = log_m + r.gumbel;
    res.rows.push_back(r);
  }
  return res;
}

std::vector<ReturnMapRow> network_return_map(const RegionalModel& model, const RiverNetwork& net,
                                             const ElevationGrid& grid, const DrainageGrid& drain, double T_years,
                                             double step_km, int* skipped) {
  if (!(step_km > 0.0)) throw InputError("return map step must be positive");
  if (!(T_years > 1.0)) throw InputError("return period must exceed one year");
  std::vector<ReturnMapRow> rows;
  int skip = 0;
  for (const Segment& seg : net.segments()) {
    const int count = static_cast<int>(std::floor(seg.arc_length / step_km + 1e-9));
    for (int i = 0; i <= count; ++i) {
      const NetLocation loc{seg.id, std::min(i * step_km, seg.arc_length)};
      try {
        const std::vector<Cell> mask = catchment_mask(net, grid, drain, loc);
        if (mask.empty()) {
          ++skip;
          continue;
        }
        const CatchmentSummary s = catchment_summary(grid, mask, loc);
        ReturnMapRow row;
        row.segment = seg.id;
        row.offset = loc.offset;
        row.position = net.position(loc);
        row.region = model.region_of_segment(seg.id);
        row.gev = model.predict(row.region, s);
        row.level = return_level(row.gev, T_years);
        rows.push_back(row);
      } catch (const InputError&) {
        ++skip;
      }
    }
  }
  if (skipped) *skipped = skip;
  return rows;
}

}  // namespace rivex
