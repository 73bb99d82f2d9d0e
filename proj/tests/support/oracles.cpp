#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/owens_t.hpp>

namespace rivex::oracle {

double ks_pvalue(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  const double lambda = (s + 0.12 + 0.11 / s) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_one_sample_p(std::vector<double> sample, const std::function<double(double)>& cdf) {
  const double n = static_cast<double>(sample.size());
  return ks_pvalue(ks_statistic(std::move(sample), cdf), n);
}

double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return ks_pvalue(d, na * nb / (na + nb));
}

double normal_cdf(double x) { return boost::math::cdf(boost::math::normal(), x); }
double normal_pdf(double x) { return boost::math::pdf(boost::math::normal(), x); }

double bvn_cdf(double h, double k, double rho) {
  if (std::abs(rho) >= 1.0) throw std::invalid_argument("bvn_cdf: |rho| must be below 1");
  const double s = std::sqrt(1.0 - rho * rho);
  // Owen (1956): Phi2 = (Phi(h) + Phi(k))/2 - T(h, a_h) - T(k, a_k) - beta.
  auto t = [&](double x, double y) {
    return boost::math::owens_t(x, (y - rho * x) / (x * s));
  };
  if (h == 0.0 && k == 0.0) return 0.25 + std::asin(rho) / (2.0 * std::numbers::pi);
  if (h == 0.0) return bvn_cdf(1e-300, k, rho);
  if (k == 0.0) return bvn_cdf(h, 1e-300, rho);
  const double beta = (h * k > 0.0 || (h * k == 0.0 && h + k >= 0.0)) ? 0.0 : 0.5;
  return 0.5 * (normal_cdf(h) + normal_cdf(k)) - t(h, k) - t(k, h) - beta;
}

double biv_hr_V(double gamma, double x, double y) {
  if (gamma == 0.0) return 1.0 / std::min(x, y);
  const double a = std::sqrt(gamma);
  return normal_cdf(a / 2.0 + std::log(y / x) / a) / x + normal_cdf(a / 2.0 + std::log(x / y) / a) / y;
}

McEstimate mc_exponent_measure(const Eigen::MatrixXd& gamma, const Eigen::VectorXd& x, int n, std::uint64_t seed) {
  const auto m = gamma.rows();
  Eigen::MatrixXd cov(m - 1, m - 1);
  for (Eigen::Index i = 1; i < m; ++i) {
    for (Eigen::Index j = 1; j < m; ++j) cov(i - 1, j - 1) = 0.5 * (gamma(i, 0) + gamma(j, 0) - gamma(i, j));
  }
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::VectorXd e(m - 1);
  double sum = 0.0;
  double sum2 = 0.0;
  for (int r = 0; r < n; ++r) {
    for (Eigen::Index i = 0; i < m - 1; ++i) e[i] = z(rng);
    const Eigen::VectorXd w = l * e;
    double mx = 1.0 / x[0];
    for (Eigen::Index j = 1; j < m; ++j) mx = std::max(mx, std::exp(w[j - 1] - 0.5 * gamma(j, 0)) / x[j]);
    sum += mx;
    sum2 += mx * mx;
  }
  const double mean = sum / n;
  const double var = (sum2 / n - mean * mean) * n / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

namespace {

double mixed_partial_once(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                          const std::vector<int>& idx, double h) {
  const std::size_t b = idx.size();
  double sum = 0.0;
  double denom = 1.0;
  for (std::size_t k = 0; k < b; ++k) denom *= 2.0 * h * x[idx[k]];
  for (unsigned mask = 0; mask < (1u << b); ++mask) {
    Eigen::VectorXd y = x;
    double sign = 1.0;
    for (std::size_t k = 0; k < b; ++k) {
      const bool minus = (mask >> k) & 1u;
      y[idx[k]] += (minus ? -h : h) * x[idx[k]];
      if (minus) sign = -sign;
    }
    sum += sign * f(y);
  }
  return sum / denom;
}

}  // namespace

double mixed_partial(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                     const std::vector<int>& idx, double h) {
  const double d1 = mixed_partial_once(f, x, idx, h);
  const double d2 = mixed_partial_once(f, x, idx, h / 2.0);
  return (4.0 * d2 - d1) / 3.0;
}

Eigen::VectorXd gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = mixed_partial(f, x, {static_cast<int>(i)}, h);
  return g;
}

Eigen::MatrixXd random_variogram(int m, std::mt19937_64& rng, double lambda_lo, double lambda_hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double lambda = lambda_lo + (lambda_hi - lambda_lo) * u(rng);
  const double alpha = 0.5 + 1.4 * u(rng);
  Eigen::MatrixXd pts(m, 2);
  for (int i = 0; i < m; ++i) pts.row(i) << 2.0 * u(rng), 2.0 * u(rng);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) g(i, j) = lambda * std::pow((pts.row(i) - pts.row(j)).norm(), alpha);
  }
  return g;
}

double binomial_se(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

double frechet_cdf(double z) { return z > 0.0 ? std::exp(-1.0 / z) : 0.0; }

double gev_cdf(double x, double loc, double scale, double shape) {
  const double t = (x - loc) / scale;
  if (shape == 0.0) return std::exp(-std::exp(-t));
  const double s = 1.0 + shape * t;
  if (s <= 0.0) return shape > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::pow(s, -1.0 / shape));
}

std::vector<double> gev_draws(int n, double loc, double scale, double shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (double& v : out) {
    const double e = -std::log(u(rng));  // -log F
    v = shape == 0.0 ? loc - scale * std::log(e) : loc + scale * (std::pow(e, -shape) - 1.0) / shape;
  }
  return out;
}

std::vector<double> ppp_exceedances(double loc, double scale, double shape, double q, double n_years,
                                    std::uint64_t seed) {
  const double tq = (q - loc) / scale;
  const double lq = shape == 0.0 ? std::exp(-tq) : std::pow(1.0 + shape * tq, -1.0 / shape);
  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> count(n_years * lq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = count(rng);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (double& v : out) {
    const double l = lq * (1.0 - u(rng));  // intensity level in (0, lq]
    v = shape == 0.0 ? loc - scale * std::log(l) : loc + scale * (std::pow(l, -shape) - 1.0) / shape;
  }
  return out;
}

}  // namespace rivex::oracle
