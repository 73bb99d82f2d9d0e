#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rivex/catchment.hpp"
#include "rivex/hr_core.hpp"
#include "rivex/margins.hpp"
#include "rivex/network.hpp"

namespace rivex {

struct RiskOptions {
  int exact_max = 12;           // largest group handled by inclusion-exclusion
  int mc_samples = 200000;      // spectral draws for larger groups
  std::uint64_t seed = 20160901;
  MvnOptions mvn;
};

struct ExceedanceResult {
  double rate = 0.0;       // nu(prod (u_j, inf)): expected number of joint exceedances per year
  double per_event = 0.0;  // rate / K
  double error = 0.0;      // absolute error estimate on `rate`
  std::string method;      // "inclusion-exclusion" or "monte-carlo"
  Eigen::VectorXd frechet_levels;
};

/// Joint exceedance of Fréchet-scale levels for the group described by `hr`.
ExceedanceResult joint_exceedance_frechet(const HrStructure& hr, const Eigen::VectorXd& u_tilde,
                                          double events_per_year, const RiskOptions& opt = {});

/// Levels on the discharge scale, transformed with annual GEV margins. Throws
/// ModelRangeError when a level is not above its station's fitted threshold.
ExceedanceResult joint_exceedance(const HrStructure& hr, std::span<const GevParams> margins,
                                  std::span<const double> thresholds, const Eigen::VectorXd& levels,
                                  double events_per_year, const RiskOptions& opt = {});

/// Fréchet level of the per-event p-quantile: 1/(K (1 - p)).
double frechet_level_for_quantile(double p, double events_per_year);

struct GroupMaxRow {
  double p = 0.0;
  double gumbel = 0.0;       // -log(-log p), the standard Gumbel quantile
  double model = 0.0;        // log theta_group + gumbel
  double complete = 0.0;     // theta = 1
  double independent = 0.0;  // theta = group size
};

struct GroupMaxResult {
  double theta = 1.0;  // V(1, ..., 1)
  std::vector<GroupMaxRow> rows;
};

/// Quantiles of log(max_j eta_j) for the group: P(max <= u) = exp(-theta/u).
GroupMaxResult group_max_quantiles(const HrStructure& hr, std::span<const double> probs, const MvnOptions& opt = {});

struct ReturnMapRow {
  int segment = 0;
  double offset = 0.0;
  Point2 position{0.0, 0.0};
  std::string region;
  GevParams gev;
  double level = 0.0;
};

/// Return levels at points every `step_km` along every segment, using the regional model
/// and catchments from the drainage grid. Points whose catchment is empty or has
/// non-positive covariates are skipped and counted in `skipped`.
std::vector<ReturnMapRow> network_return_map(const RegionalModel& model, const RiverNetwork& net,
                                             const ElevationGrid& grid, const DrainageGrid& drain, double T_years,
                                             double step_km, int* skipped = nullptr);

}  // namespace rivex
