#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "rivex/hr_core.hpp"

namespace rivex {

/// Factor F (m x r) with F F^T = A for a PSD matrix, by Cholesky with diagonal pivoting that
/// stops at numerically zero pivots. Identical rows of A give identical rows of F. Falls
/// back to a plain Cholesky of A + 1e-10 I if a pivot is clearly negative.
Eigen::MatrixXd gaussian_factor(const Eigen::MatrixXd& a);

/// Exact draws (n x m) from the max-stable Hüsler-Reiss law with unit Fréchet margins,
/// by the extremal-functions algorithm. Draw i uses its own generator seeded from
/// (seed, i), so the output does not depend on the thread count.
Eigen::MatrixXd sample_hr(const HrStructure& hr, int n, std::uint64_t seed);

/// Draws from the multivariate Pareto law attached to the exponent measure: X = R * Theta
/// with R standard Pareto and Theta the L1-normalized spectral vector, so that
/// P(X in A) = Lambda(A)/m for A inside {|x|_1 > 1}.
Eigen::MatrixXd sample_pareto_hr(const HrStructure& hr, int n, std::uint64_t seed);

/// Angular part only: rows are Theta with |Theta|_1 = 1.
Eigen::MatrixXd sample_spectral_angles(const HrStructure& hr, int n, std::uint64_t seed);

/// Componentwise (eta^xi - 1)/xi (log eta when xi = 0), then a * . + b when a, b are given.
Eigen::MatrixXd to_gev_margins(const Eigen::MatrixXd& draws, std::span<const double> xi,
                               std::span<const double> scale = {}, std::span<const double> loc = {});

}  // namespace rivex
