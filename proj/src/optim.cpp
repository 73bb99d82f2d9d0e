#include "rivex/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rivex/errors.hpp"

namespace rivex {

NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                             const NelderMeadOptions& opt) {
  const Eigen::Index n = x0.size();
  if (step.size() != n) throw InputError("nelder_mead: step has the wrong length");
  constexpr double inf = std::numeric_limits<double>::infinity();
  NelderMeadResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : inf;
  };

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> val(static_cast<std::size_t>(n + 1));
  val[0] = eval(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i + 1)][i] += step[i];
    val[static_cast<std::size_t>(i + 1)] = eval(pts[static_cast<std::size_t>(i + 1)]);
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n + 1));

  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    res.trace.push_back(val[best]);

    double diam = 0.0;
    for (const auto& p : pts) diam = std::max(diam, (p - pts[best]).cwiseAbs().maxCoeff());
    const double spread = val[worst] - val[best];
    const double xs = std::max(1.0, pts[best].cwiseAbs().maxCoeff());
    const double fs = std::max(1.0, std::abs(val[best]));
    if (std::isfinite(val[best]) && diam <= opt.xtol * xs && spread <= opt.ftol * fs) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opt.max_evaluations) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < val[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                       : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      val[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(val.begin(), val.end());
  res.x = pts[static_cast<std::size_t>(it - val.begin())];
  res.f = *it;
  return res;
}

BoxTransform::BoxTransform(Eigen::VectorXd lo, Eigen::VectorXd hi, std::vector<bool> log_scale)
    : lo_(std::move(lo)), hi_(std::move(hi)), log_(std::move(log_scale)) {
  if (lo_.size() != hi_.size() || static_cast<std::size_t>(lo_.size()) != log_.size()) {
    throw InputError("box bounds have inconsistent lengths");
  }
  for (Eigen::Index i = 0; i < lo_.size(); ++i) {
    if (!(lo_[i] < hi_[i])) throw InputError("box lower bound must be below the upper bound");
    if (log_[static_cast<std::size_t>(i)] && !(lo_[i] > 0.0)) throw InputError("log-scaled box bound must be positive");
  }
}

Eigen::VectorXd BoxTransform::to_unbounded(const Eigen::VectorXd& p) const {
  Eigen::VectorXd z(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const bool lg = log_[static_cast<std::size_t>(i)];
    const double a = lg ? std::log(lo_[i]) : lo_[i];
    const double b = lg ? std::log(hi_[i]) : hi_[i];
    const double v = lg ? std::log(p[i]) : p[i];
    const double f = std::clamp((v - a) / (b - a), 1e-12, 1.0 - 1e-12);
    z[i] = std::log(f / (1.0 - f));
  }
  return z;
}

Eigen::VectorXd BoxTransform::at_fraction(const Eigen::VectorXd& f) const {
  Eigen::VectorXd p(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const bool lg = log_[static_cast<std::size_t>(i)];
    const double a = lg ? std::log(lo_[i]) : lo_[i];
    const double b = lg ? std::log(hi_[i]) : hi_[i];
    const double v = a + f[i] * (b - a);
    p[i] = std::clamp(lg ? std::exp(v) : v, lo_[i], hi_[i]);
  }
  return p;
}

Eigen::VectorXd BoxTransform::to_box(const Eigen::VectorXd& z) const {
  Eigen::VectorXd f(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) f[i] = 1.0 / (1.0 + std::exp(-z[i]));
  return at_fraction(f);
}

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd hess(n, n);
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[i] += h[i];
    xm[i] -= h[i];
    hess(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h[i] * h[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp[i] += h[i]; pp[j] += h[j];
      pm[i] += h[i]; pm[j] -= h[j];
      mp[i] -= h[i]; mp[j] += h[j];
      mm[i] -= h[i]; mm[j] -= h[j];
      const double v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h[i] * h[j]);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

Eigen::MatrixXd hessian_from_gradient(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                                      const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd hess(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp[j] += h[j];
    xm[j] -= h[j];
    hess.col(j) = (grad(xp) - grad(xm)) / (2.0 * h[j]);
  }
  return 0.5 * (hess + hess.transpose());
}

}  // namespace rivex
