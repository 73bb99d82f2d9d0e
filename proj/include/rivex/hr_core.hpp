#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rivex/mvn.hpp"

namespace rivex {

/// Variogram matrix Gamma of a station tuple together with the covariance of the
/// Gaussian field pinned at an anchor station.
class HrStructure {
 public:
  /// Validates symmetry, zero diagonal and nonnegativity of Gamma, and that Sigma for the
  /// anchor is PSD (smallest eigenvalue >= -1e-8 trace). Throws KernelValidityError otherwise.
  explicit HrStructure(Eigen::MatrixXd gamma, int anchor = 0);

  int dim() const { return static_cast<int>(gamma_.rows()); }
  int anchor() const { return anchor_; }
  const Eigen::MatrixXd& gamma() const { return gamma_; }

  /// Sigma for the stored anchor with negative eigenvalues clipped to zero; rows follow
  /// the station order with the anchor removed.
  const Eigen::MatrixXd& sigma() const { return sigma_; }

  /// Unclipped Sigma_ij = (G_ik + G_jk - G_ij)/2 over i, j != k, in station order.
  Eigen::MatrixXd anchored_covariance(int k) const;

  /// Station indices other than k, ascending; the row order of anchored_covariance(k).
  std::vector<int> others(int k) const;

  HrStructure with_anchor(int k) const;
  HrStructure subset(const std::vector<int>& idx) const;

 private:
  Eigen::MatrixXd gamma_;
  Eigen::MatrixXd sigma_;
  int anchor_ = 0;
};

struct VResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

/// V(x) = sum_k x_k^{-1} Phi_{m-1}((log(x_j/x_k) + G_jk/2)_{j != k}; Sigma^(k)).
/// Coordinates equal to +inf are dropped; stations with Gamma = 0 between them are merged
/// (the smaller threshold wins).
VResult exponent_measure(const HrStructure& hr, const Eigen::VectorXd& x, const MvnOptions& opt = {});
double exponent_measure_V(const HrStructure& hr, const Eigen::VectorXd& x, const MvnOptions& opt = {});

/// Angular density on the L1 simplex, built from the structure's anchor. DomainError on
/// boundary points or a singular Sigma.
double log_spectral_density(const HrStructure& hr, const Eigen::VectorXd& omega);
double spectral_density(const HrStructure& hr, const Eigen::VectorXd& omega);

/// One event with thresholds; exceedances are the components with x_j > u_j.
struct CensoredTerm {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  std::vector<int> exceed;  // K, ascending

  static CensoredTerm make(const Eigen::VectorXd& x, const Eigen::VectorXd& u);
};

/// Gaussian blocks of the censored density for one exceedance pattern K, reusable across
/// events sharing K and u.
class CensoredPattern {
 public:
  CensoredPattern(const HrStructure& hr, const std::vector<int>& exceed, const Eigen::VectorXd& u);

  /// log of -d^b V / dx_K at x (only the entries in K are read).
  double log_density(const Eigen::VectorXd& x, const MvnOptions& opt) const;

 private:
  int anchor_ = 0;
  std::vector<int> rest_;      // K without the anchor
  std::vector<int> censored_;  // complement of K
  Eigen::VectorXd half_gamma_rest_;
  Eigen::VectorXd c_offset_;   // log u_j + G_ja/2 on the censored block
  Eigen::MatrixXd chol_l_;     // Cholesky factor of Sigma_KK
  double log_norm_ = 0.0;      // -(b-1)/2 log 2 pi - 1/2 log det Sigma_KK
  Eigen::MatrixXd reg_;        // Sigma_CK Sigma_KK^{-1}
  Eigen::MatrixXd cond_cov_;   // Sigma_C
};

double log_censored_density(const HrStructure& hr, const CensoredTerm& term, const MvnOptions& opt = {});
double censored_density(const HrStructure& hr, const CensoredTerm& term, const MvnOptions& opt = {});

/// 1 - V(u); ModelRangeError when V(u) >= 1.
double below_threshold_mass(const HrStructure& hr, const Eigen::VectorXd& u, const MvnOptions& opt = {});

}  // namespace rivex
