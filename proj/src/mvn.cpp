#include "rivex/mvn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "rivex/errors.hpp"
#include "rivex/normal.hpp"

namespace rivex {
namespace {

constexpr std::array<int, kMvnMaxDimension> kPrimes{
    2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,  41,  43,  47,  53,  59,  61,  67,  71,
    73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173};

// Separation-of-variables form of the orthant probability after reordering.
struct SovProblem {
  int n = 0;
  std::vector<double> chol;   // row-major lower triangle, n*n
  std::vector<double> upper;  // reordered upper limits
};

double variance_floor(const Eigen::MatrixXd& cov) {
  const double scale = std::max(cov.diagonal().cwiseAbs().maxCoeff(), 0.0);
  return 1e-12 * std::max(scale, 1e-300);
}

SovProblem build_sov(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const int n = static_cast<int>(b.size());
  const double floor = variance_floor(a);
  const double neg_tol = -1e-8 * std::max(a.trace(), 1e-300);
  SovProblem sov;
  sov.n = n;
  sov.chol.assign(static_cast<std::size_t>(n * n), 0.0);
  auto L = [&](int r, int c) -> double& { return sov.chol[static_cast<std::size_t>(r * n + c)]; };
  std::vector<double> y_mean(static_cast<std::size_t>(n), 0.0);

  for (int i = 0; i < n; ++i) {
    int best = -1;
    double best_p = std::numeric_limits<double>::infinity();
    double best_v = 0.0;
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      double v = a(j, j);
      for (int k = 0; k < i; ++k) {
        s += L(j, k) * y_mean[static_cast<std::size_t>(k)];
        v -= L(j, k) * L(j, k);
      }
      if (v < neg_tol) {
        throw DomainError("mvn_cdf: covariance matrix is not positive semi-definite");
      }
      const double p = v <= floor ? (b[j] - s >= 0.0 ? 1.0 : 0.0) : norm_cdf((b[j] - s) / std::sqrt(v));
      if (p < best_p) {
        best_p = p;
        best = j;
        best_v = v;
      }
    }
    if (best != i) {
      a.row(i).swap(a.row(best));
      a.col(i).swap(a.col(best));
      std::swap(b[i], b[best]);
      for (int k = 0; k < i; ++k) std::swap(L(i, k), L(best, k));
    }
    if (best_v <= floor) {
      L(i, i) = 0.0;
      for (int j = i + 1; j < n; ++j) L(j, i) = 0.0;
      y_mean[static_cast<std::size_t>(i)] = 0.0;
      continue;
    }
    const double d = std::sqrt(best_v);
    L(i, i) = d;
    for (int j = i + 1; j < n; ++j) {
      double s = a(j, i);
      for (int k = 0; k < i; ++k) s -= L(j, k) * L(i, k);
      L(j, i) = s / d;
    }
    double s = 0.0;
    for (int k = 0; k < i; ++k) s += L(i, k) * y_mean[static_cast<std::size_t>(k)];
    const double c = (b[i] - s) / d;
    const double pc = norm_cdf(c);
    y_mean[static_cast<std::size_t>(i)] = pc > 1e-300 ? -norm_pdf(c) / pc : c;
  }
  sov.upper.assign(b.data(), b.data() + n);
  return sov;
}

double sov_integrand(const SovProblem& sov, const double* w, double* y) {
  const int n = sov.n;
  const double* L = sov.chol.data();
  double prod = 1.0;
  for (int i = 0; i < n; ++i) {
    const double* row = L + static_cast<std::ptrdiff_t>(i) * n;
    double s = 0.0;
    for (int k = 0; k < i; ++k) s += row[k] * y[k];
    const double diag = row[i];
    double e;
    if (diag > 0.0) {
      e = norm_cdf((sov.upper[static_cast<std::size_t>(i)] - s) / diag);
    } else {
      e = sov.upper[static_cast<std::size_t>(i)] - s >= 0.0 ? 1.0 : 0.0;
    }
    prod *= e;
    if (prod == 0.0) return 0.0;
    if (i + 1 < n) {
      y[i] = diag > 0.0 ? norm_quantile_fast(std::max(w[i] * e, 1e-300)) : 0.0;
    }
  }
  return prod;
}

MvnResult low_dimensional(const Eigen::MatrixXd& cov, const Eigen::VectorXd& b) {
  const double floor = variance_floor(cov);
  if (b.size() == 1) {
    const double v = cov(0, 0);
    if (v < -1e-8 * std::abs(v)) throw DomainError("mvn_cdf: negative variance");
    if (v <= floor) return {b[0] >= 0.0 ? 1.0 : 0.0, 0.0, true};
    return {norm_cdf(b[0] / std::sqrt(v)), 0.0, true};
  }
  const double v1 = cov(0, 0);
  const double v2 = cov(1, 1);
  if (v1 < 0.0 && v1 < -floor) throw DomainError("mvn_cdf: negative variance");
  if (v2 < 0.0 && v2 < -floor) throw DomainError("mvn_cdf: negative variance");
  if (v1 <= floor && v2 <= floor) return {(b[0] >= 0.0 && b[1] >= 0.0) ? 1.0 : 0.0, 0.0, true};
  if (v1 <= floor) return {b[0] >= 0.0 ? norm_cdf(b[1] / std::sqrt(v2)) : 0.0, 0.0, true};
  if (v2 <= floor) return {b[1] >= 0.0 ? norm_cdf(b[0] / std::sqrt(v1)) : 0.0, 0.0, true};
  const double s1 = std::sqrt(v1);
  const double s2 = std::sqrt(v2);
  double r = cov(0, 1) / (s1 * s2);
  if (std::abs(r) > 1.0 + 1e-8) throw DomainError("mvn_cdf: covariance matrix is not positive semi-definite");
  r = std::clamp(r, -1.0, 1.0);
  return {bvn_cdf(b[0] / s1, b[1] / s2, r), 0.0, true};
}

}  // namespace

MvnResult mvn_cdf(const MvnSpec& spec, const Eigen::VectorXd& upper) {
  const Eigen::Index d = upper.size();
  if (spec.covariance.rows() != d || spec.covariance.cols() != d) {
    throw InputError("mvn_cdf: covariance dimension " + std::to_string(spec.covariance.rows()) +
                     " does not match limit vector of length " + std::to_string(d));
  }
  if (spec.mean.size() != 0 && spec.mean.size() != d) {
    throw InputError("mvn_cdf: mean vector has the wrong length");
  }
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const double bi = upper[i] - (spec.mean.size() ? spec.mean[i] : 0.0);
    if (std::isnan(bi)) throw InputError("mvn_cdf: NaN integration limit");
    if (bi == -std::numeric_limits<double>::infinity()) return {0.0, 0.0, true};
    if (bi != std::numeric_limits<double>::infinity()) keep.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  if (n == 0) return {1.0, 0.0, true};
  if (n > kMvnMaxDimension) {
    throw DomainError("mvn_cdf: dimension " + std::to_string(n) + " exceeds the supported maximum of " +
                      std::to_string(kMvnMaxDimension));
  }
  Eigen::MatrixXd cov(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b[i] = upper[keep[i]] - (spec.mean.size() ? spec.mean[keep[i]] : 0.0);
    for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = spec.covariance(keep[i], keep[j]);
  }
  if (n <= 2) return low_dimensional(cov, b);

  const SovProblem sov = build_sov(std::move(cov), std::move(b));
  const int dims = sov.n - 1;
  const MvnOptions& opt = spec.options;
  const int shifts = std::max(opt.shifts, 2);

  std::array<double, kMvnMaxDimension> gen{};
  for (int i = 0; i < dims; ++i) {
    const double r = std::sqrt(static_cast<double>(kPrimes[static_cast<std::size_t>(i)]));
    gen[static_cast<std::size_t>(i)] = r - std::floor(r);
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> delta(static_cast<std::size_t>(shifts * dims));
  for (double& v : delta) v = unif(rng);

  std::vector<double> sums(static_cast<std::size_t>(shifts), 0.0);
  std::array<double, kMvnMaxDimension> w{};
  std::array<double, kMvnMaxDimension> w_anti{};
  std::array<double, kMvnMaxDimension> y{};
  long per_shift = std::max<long>(1, opt.min_points / (2 * shifts));
  long done = 0;
  MvnResult result;
  for (;;) {
    for (int s = 0; s < shifts; ++s) {
      const double* shift = delta.data() + static_cast<std::ptrdiff_t>(s) * dims;
      double acc = 0.0;
      for (long j = done + 1; j <= per_shift; ++j) {
        for (int i = 0; i < dims; ++i) {
          const double t = static_cast<double>(j) * gen[static_cast<std::size_t>(i)] + shift[i];
          const double frac = t - std::floor(t);
          w[static_cast<std::size_t>(i)] = std::abs(2.0 * frac - 1.0);
          w_anti[static_cast<std::size_t>(i)] = 1.0 - w[static_cast<std::size_t>(i)];
        }
        acc += 0.5 * (sov_integrand(sov, w.data(), y.data()) + sov_integrand(sov, w_anti.data(), y.data()));
      }
      sums[static_cast<std::size_t>(s)] += acc;
    }
    done = per_shift;
    double mean = 0.0;
    for (double v : sums) mean += v / static_cast<double>(done);
    mean /= shifts;
    double var = 0.0;
    for (double v : sums) {
      const double dv = v / static_cast<double>(done) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(shifts) * static_cast<double>(shifts - 1);
    result.value = std::clamp(mean, 0.0, 1.0);
    result.error = 3.0 * std::sqrt(var);
    if (!opt.adaptive || result.error <= opt.abs_tol) {
      result.converged = !opt.adaptive || result.error <= opt.abs_tol;
      return result;
    }
    if (2L * shifts * per_shift * 2 > static_cast<long>(opt.max_points)) {
      result.converged = false;
      return result;
    }
    per_shift *= 2;
  }
}

MvnResult mvn_cdf(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& upper, const MvnOptions& options) {
  return mvn_cdf(MvnSpec{Eigen::VectorXd(), covariance, options}, upper);
}

double mvn_log_density(const Eigen::MatrixXd& covariance, const Eigen::VectorXd& x) {
  const Eigen::Index d = x.size();
  if (d == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw DomainError("mvn_log_density: covariance is singular or not PD");
  const Eigen::MatrixXd& l = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(l(i, i) > 0.0)) throw DomainError("mvn_log_density: covariance is singular");
    log_det += 2.0 * std::log(l(i, i));
  }
  const Eigen::VectorXd z = llt.matrixL().solve(x);
  return -0.5 * z.squaredNorm() - 0.5 * log_det - static_cast<double>(d) * kLogSqrt2Pi;
}

}  // namespace rivex
