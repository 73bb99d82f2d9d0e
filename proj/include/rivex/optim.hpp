#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace rivex {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadOptions {
  double xtol = 1e-4;         // simplex diameter, relative to max(1, |x_best|_inf)
  double ftol = 1e-8;         // spread of objective values, relative to max(1, |f_best|)
  int max_evaluations = 2000;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> trace;  // best value after each iteration
};

/// Derivative-free simplex minimization with the standard coefficients (1, 2, 1/2, 1/2).
/// Non-finite objective values are treated as +inf.
NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             const NelderMeadOptions& opt = {});

/// Maps a box to R^d: logit of the position inside [lo, hi], on log scale for the
/// coordinates flagged in `log_scale`.
class BoxTransform {
 public:
  BoxTransform(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<bool> log_scale);

  Eigen::VectorXd to_unbounded(const Eigen::VectorXd& p) const;
  Eigen::VectorXd to_box(const Eigen::VectorXd& z) const;
  /// Point at fraction f in [0, 1] along each coordinate (log scale where flagged).
  Eigen::VectorXd at_fraction(const Eigen::VectorXd& f) const;

  const Eigen::VectorXd& lo() const { return lo_; }
  const Eigen::VectorXd& hi() const { return hi_; }

 private:
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  std::vector<bool> log_;
};

/// Central-difference Hessian of f at x with steps h.
Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& h);

/// Central-difference Jacobian of a gradient function (symmetrized), i.e. a Hessian.
Eigen::MatrixXd hessian_from_gradient(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& h);

}  // namespace rivex
