#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace rivex {

/// Controls the randomized lattice rule behind mvn_cdf.
struct MvnOptions {
  double abs_tol = 1e-5;       // target for the returned error estimate
  int shifts = 10;             // independent random shifts (error estimate uses their spread)
  int min_points = 2000;       // integrand evaluations in the first pass
  int max_points = 1 << 21;    // budget cap; exceeding it sets MvnResult::converged = false
  bool adaptive = true;        // false: evaluate exactly min_points and stop
  std::uint64_t seed = 0x6d766e5eedULL;
};

struct MvnResult {
  double value = 0.0;
  double error = 0.0;     // ~3 standard errors across shifts; 0 for closed-form cases
  bool converged = true;  // false when the budget ran out before abs_tol was reached
};

/// Zero-mean or shifted Gaussian with a PSD covariance.
struct MvnSpec {
  Eigen::VectorXd mean;        // empty means zero mean
  Eigen::MatrixXd covariance;  // symmetric PSD, dimension <= 40
  MvnOptions options;
};

inline constexpr int kMvnMaxDimension = 40;

/// P(Z <= upper) for Z ~ N(mean, covariance). Dimension 0 gives 1; dimensions 1 and 2 are
/// evaluated in closed form; higher dimensions use separation of variables with
/// Gibson-Glasbey-Elston reordering integrated by a randomized Richtmyer lattice.
/// Components of `upper` equal to +inf are marginalized out. Throws DomainError for a
/// non-PSD covariance or a dimension above kMvnMaxDimension.
MvnResult mvn_cdf(const MvnSpec& spec, const Eigen::VectorXd& upper);

/// Convenience overload for a zero-mean Gaussian.
MvnResult mvn_cdf(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& upper,
                  const MvnOptions& options = {});

/// log density of N(0, covariance) at x; throws DomainError when covariance is singular.
double mvn_log_density(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& x);

}  // namespace rivex
