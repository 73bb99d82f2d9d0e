#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rivex/catchment.hpp"

namespace rivex {

struct GevParams {
  double loc = 0.0;    // b
  double scale = 1.0;  // a
  double shape = 0.0;  // xi
};

/// U(x) = (1 + xi * xt)_+^{1/xi}, xt = (x - b)/a unless `standardized`.
/// Below the lower endpoint the result is 0 and `*below` is set.
double frechet_transform(const GevParams& gev, double x, bool standardized = false, bool* below = nullptr);

/// (1/n) (1 + xi (u - b)/a)_+^{-1/xi}.
double tail_prob(const GevParams& gev, double u, double n = 1.0);

/// Level exceeded once per T years: G(z) = 1 - 1/T.
double return_level(const GevParams& gev, double T_years);

/// Negative log of the Poisson process likelihood of threshold exceedances; +inf outside
/// the support.
double ppp_nll(const GevParams& gev, std::span<const double> exceed, double q, double n_years);

/// Gradient of ppp_nll with respect to (a, b, xi).
Eigen::Vector3d ppp_nll_gradient(const GevParams& gev, std::span<const double> exceed, double q, double n_years);

struct MarginFitOptions {
  std::optional<double> fixed_shape;  // fit with xi held at this value
  int max_evaluations = 2000;
};

struct StationFit {
  GevParams params;
  Eigen::Vector3d se = Eigen::Vector3d::Constant(std::numeric_limits<double>::quiet_NaN());  // (a, b, xi)
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double nll = 0.0;
  int n_exceed = 0;
  double threshold = 0.0;
  double n_years = 0.0;
  bool shape_fixed = false;
  int evaluations = 0;
};

/// Maximum likelihood fit of the point process model; SEs from the inverse observed
/// information (central differences of the analytic gradient, relative step 1e-4).
StationFit fit_station(std::span<const double> exceed, double q, double n_years, const MarginFitOptions& opt = {});

struct LrTest {
  double statistic = 0.0;
  int df = 1;
  double p_value = 1.0;
};

/// Likelihood-ratio test of a nested (restricted) fit against a larger one.
LrTest likelihood_ratio_test(double nll_restricted, double nll_full, int df);

/// Poisson bootstrap: the number of exceedances per replicate is Poisson(n), values are
/// resampled with replacement. Returns SDs of (a, b, xi) over the replicates.
Eigen::Vector3d bootstrap_station_se(std::span<const double> exceed, double q, double n_years, int replicates,
                                     std::uint64_t seed);

enum class Covariate { intercept, latitude, area, altitude, slope };

std::string covariate_name(Covariate c);
Covariate covariate_from_string(const std::string& s);
double covariate_value(Covariate c, const CatchmentSummary& s);  // log P, or 1 for the intercept

struct RegionSpec {
  std::string name;
  std::vector<Covariate> scale_covariates{Covariate::intercept};
  std::vector<Covariate> loc_covariates{Covariate::intercept};
};

struct RegionFit {
  RegionSpec spec;
  Eigen::VectorXd alpha;  // log a = sum alpha_k log P_k
  Eigen::VectorXd beta;   // log b = sum beta_k log P_k
  double shape = 0.0;
  Eigen::VectorXd se;     // (alpha, beta, xi)
  double nll = 0.0;
};

struct MarginStation {
  std::string id;
  std::vector<double> exceed;
  double threshold = 0.0;
  double n_years = 0.0;
  CatchmentSummary summary;
  std::string region;
};

struct RegionalModel {
  std::vector<RegionFit> regions;
  std::map<std::string, std::string> station_region;
  std::map<int, std::string> segment_region;  // for points without a gauge

  const RegionFit& region(const std::string& name) const;
  GevParams predict(const std::string& region, const CatchmentSummary& s) const;
  /// Region for an arbitrary network location: the one assigned to its segment.
  std::string region_of_segment(int segment_id) const;
};

/// Independence-likelihood fit of the log-linear regional model, one region at a time.
/// InputError if a region's design is rank deficient (names the collinear columns).
RegionalModel fit_regional(const std::vector<MarginStation>& stations, const std::vector<RegionSpec>& regions,
                           const MarginFitOptions& opt = {});

}  // namespace rivex
