#include "rivex/normal.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <span>

#include <boost/math/quadrature/gauss.hpp>

namespace rivex {

double norm_quantile_fast(double p) {
  // Acklam's rational approximation.
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double norm_quantile(double p) {
  double x = norm_quantile_fast(p);
  if (!std::isfinite(x)) return x;
  // One Halley step on the lower tail probability.
  const double e = norm_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

namespace {

struct GaussRule {
  std::span<const double> nodes;
  std::span<const double> weights;
};

GaussRule rule_for(double abs_r) {
  using boost::math::quadrature::gauss;
  if (abs_r < 0.3) {
    static const auto x = gauss<double, 6>::abscissa();
    static const auto w = gauss<double, 6>::weights();
    return {std::span<const double>(x.data(), x.size()), std::span<const double>(w.data(), w.size())};
  }
  if (abs_r < 0.75) {
    static const auto x = gauss<double, 12>::abscissa();
    static const auto w = gauss<double, 12>::weights();
    return {std::span<const double>(x.data(), x.size()), std::span<const double>(w.data(), w.size())};
  }
  static const auto x = gauss<double, 20>::abscissa();
  static const auto w = gauss<double, 20>::weights();
  return {std::span<const double>(x.data(), x.size()), std::span<const double>(w.data(), w.size())};
}

// Upper orthant probability P(X > dh, Y > dk), Genz's bvnu.
double bvn_upper(double dh, double dk, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (dh == inf || dk == inf) return 0.0;
  if (dh == -inf) return dk == -inf ? 1.0 : norm_cdf(-dk);
  if (dk == -inf) return norm_cdf(-dh);
  if (r == 0.0) return norm_cdf(-dh) * norm_cdf(-dk);

  constexpr double tp = 2.0 * std::numbers::pi;
  const GaussRule rule = rule_for(std::abs(r));
  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;

  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = 0.5 * std::asin(r);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sgn * rule.nodes[i]));
        bvn += rule.weights[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return std::clamp(bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k), 0.0, 1.0);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    double asr = -0.5 * (bs / as + hk);
    if (asr > -100.0) {
      bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    }
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(tp) * norm_cdf(-b / a);
      bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a *= 0.5;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double xs = std::pow(a * (1.0 + sgn * rule.nodes[i]), 2);
        asr = -0.5 * (bs / xs + hk);
        if (asr <= -100.0) continue;
        const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
        const double rs = std::sqrt(1.0 - xs);
        const double ep = std::exp(-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
        sum += rule.weights[i] * std::exp(asr) * (sp - ep);
      }
    }
    bvn = (a * sum - bvn) / tp;
  }
  if (r > 0.0) {
    bvn += norm_cdf(-std::max(h, k));
  } else if (h >= k) {
    bvn = -bvn;
  } else {
    const double l = h < 0.0 ? norm_cdf(k) - norm_cdf(h) : norm_cdf(-h) - norm_cdf(-k);
    bvn = l - bvn;
  }
  return std::clamp(bvn, 0.0, 1.0);
}

}  // namespace

double bvn_cdf(double h, double k, double r) {
  if (r >= 1.0) return norm_cdf(std::min(h, k));
  if (r <= -1.0) return std::max(0.0, norm_cdf(h) - norm_cdf(-k));
  return bvn_upper(-h, -k, r);
}

}  // namespace rivex
