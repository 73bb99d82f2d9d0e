#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rivex/kernels.hpp"
#include "rivex/mvn.hpp"

namespace rivex {

enum class Method { spectral, censored };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// Parameter order used throughout: lambda_riv, lambda_euc, tau, alpha, beta, c.
inline constexpr std::array<const char*, 6> kParamNames{"lambda_riv", "lambda_euc", "tau_km", "alpha", "beta_rad", "c"};

struct ParamBox {
  std::array<double, 6> lo{1e-4, 1e-8, 1.0, 0.05, 0.7853981633974483, 0.05};
  std::array<double, 6> hi{50.0, 1e2, 1e5, 2.0, 2.356194490192345, 20.0};

  bool contains(const KernelParams& p) const;
};

std::array<double, 6> to_array(const KernelParams& p);
KernelParams from_array(const std::array<double, 6>& v, Variant variant);

/// Indices (into the six-vector) of the parameters a variant estimates.
std::vector<int> free_parameters(Variant v);

struct FitConfig {
  Method method = Method::spectral;
  double spectral_quantile = 0.9;            // of |X|_1 over complete events
  std::optional<double> spectral_threshold;  // overrides the quantile
  Eigen::VectorXd censored_u;                // per station; empty means censored_default everywhere
  double censored_default = 10.0;
  ParamBox box;
  int grid_points = 4;       // per free dimension
  int grid_starts = 3;       // simplex runs from the best grid points
  int censored_grid_points = 3;  // per free dimension, screened for further censored starts; 0 = off
  double xtol = 1e-4;
  int max_evaluations = 2000;
  int mvn_points = 1000;     // fixed lattice size for censored terms
  int bootstrap_max_evaluations = 300;  // censored simplex budget inside bootstrap refits
  int bootstrap_mvn_points = 300;  // lattice size inside bootstrap refits
  std::uint64_t seed = 42;
  bool require_convergence = true;  // fit_dependence throws EstimationError (with the trace) otherwise
};

struct FitResult {
  KernelParams estimate;
  KernelParams start;
  Method method = Method::spectral;
  double loglik = 0.0;
  int n_used = 0;   // |I| or |J|
  int n_total = 0;
  double spectral_threshold = 0.0;
  Eigen::VectorXd censored_u;
  bool converged = false;
  int evaluations = 0;
  std::vector<std::string> boundary;  // parameters pinned at a box edge
  std::vector<double> trace;
  std::array<double, 6> se{};         // bootstrap standard errors (0 for fixed parameters)
  Eigen::MatrixXd replicates;         // B x 6, when bootstrapped
};

/// Spectral threshold actually used for `events` (complete rows only).
double spectral_threshold(const FitConfig& config, const Eigen::MatrixXd& events);

/// -sum log g over events with |X|_1 above the threshold; +inf outside the box or for an
/// invalid kernel. EstimationError when no event is above the threshold.
double spectral_nll(const FitConfig& config, const KernelParams& params, const Eigen::MatrixXd& events,
                    const StationGeometry& geometry);

/// -[(n - |J|) log(1 - V(u)) + sum_J log f_K]; missing entries are marginalized.
double censored_nll(const FitConfig& config, const KernelParams& params, const Eigen::MatrixXd& events,
                    const StationGeometry& geometry);

/// SPECTRAL: grid search, then simplex refinement. CENSORED: simplex refinement of the censored
/// likelihood from the spectral estimate and from the best point of a coarse censored grid,
/// keeping the better one; with `start`, a single refinement from there.
/// Boundary-pinned parameters are listed in FitResult::boundary.
FitResult fit_dependence(const FitConfig& config, const Eigen::MatrixXd& events, const StationGeometry& geometry,
                         Variant variant, std::optional<KernelParams> start = std::nullopt);

/// Nonparametric bootstrap over events with the thresholds kept at their full-sample values.
/// SPECTRAL replicates repeat grid search and simplex; CENSORED replicates refine from the
/// full-sample estimate. Fills se and replicates of `fit`.
void bootstrap_se(const FitConfig& config, const Eigen::MatrixXd& events, const StationGeometry& geometry,
                  FitResult& fit, int replicates, std::uint64_t seed);

struct ProfilePoint {
  double alpha = 0.0;
  double loglik = 0.0;
  KernelParams params;
};

/// Profile log-likelihood over fixed alpha values (other free parameters maximized).
std::vector<ProfilePoint> profile_alpha(const FitConfig& config, const Eigen::MatrixXd& events,
                                        const StationGeometry& geometry, Variant variant,
                                        const std::vector<double>& alphas, const KernelParams& start);

}  // namespace rivex
