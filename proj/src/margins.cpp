#include "rivex/margins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "rivex/errors.hpp"
#include "rivex/optim.hpp"
#include "rivex/parallel.hpp"

namespace rivex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1 + xi t)/xi with its xi -> 0 limit.
double log_u(double t, double xi) {
  if (std::abs(xi) < 1e-6) {
    const double xt = xi * t;
    return t * (1.0 - xt / 2.0 + xt * xt / 3.0 - xt * xt * xt / 4.0);
  }
  return std::log1p(xi * t) / xi;
}

// d/dxi of log_u.
double dlog_u_dxi(double t, double xi, double s) {
  if (std::abs(xi) < 1e-4) {
    double out = 0.0;
    double pw = t * t;  // xi^(k-1) t^(k+1)
    for (int k = 1; k <= 7; ++k) {
      out += ((k % 2) ? -1.0 : 1.0) * k * pw / (k + 1);
      pw *= xi * t;
    }
    return out;
  }
  return (t / s - std::log(s) / xi) / xi;
}

}  // namespace

double frechet_transform(const GevParams& gev, double x, bool standardized, bool* below) {
  if (below) *below = false;
  if (!(gev.scale > 0.0)) throw DomainError("GEV scale must be positive");
  const double t = standardized ? x : (x - gev.loc) / gev.scale;
  const double xi = gev.shape;
  if (xi == 0.0) return std::exp(t);
  const double s = 1.0 + xi * t;
  if (s <= 0.0) {
    if (xi > 0.0) {
      if (below) *below = true;
      return 0.0;
    }
    return kInf;
  }
  return std::exp(log_u(t, xi));
}

double tail_prob(const GevParams& gev, double u, double n) {
  if (!(n > 0.0)) throw InputError("tail_prob: normalization n must be positive");
  const double z = frechet_transform(gev, u);
  if (z == 0.0) return 1.0;
  return std::min(1.0, 1.0 / (n * z));
}

double return_level(const GevParams& gev, double T) {
  if (!(T > 1.0)) throw InputError("return period must exceed one year");
  const double ly = std::log(-std::log1p(-1.0 / T));
  const double xi = gev.shape;
  if (xi == 0.0) return gev.loc - gev.scale * ly;
  return gev.loc + gev.scale * std::expm1(-xi * ly) / xi;
}

double ppp_nll(const GevParams& gev, std::span<const double> exceed, double q, double n_years) {
  const double a = gev.scale;
  const double xi = gev.shape;
  if (!(a > 0.0) || !std::isfinite(gev.loc) || !std::isfinite(xi)) return kInf;
  double out = 0.0;
  const double tq = (q - gev.loc) / a;
  const double sq = 1.0 + xi * tq;
  if (sq > 0.0) {
    out += n_years * std::exp(-log_u(tq, xi));
  } else if (xi > 0.0) {
    return kInf;
  }
  const double log_a = std::log(a);
  for (double x : exceed) {
    const double t = (x - gev.loc) / a;
    const double s = 1.0 + xi * t;
    if (!(s > 0.0)) return kInf;
    out += log_a + log_u(t, xi) + std::log1p(xi * t);
  }
  return out;
}

Eigen::Vector3d ppp_nll_gradient(const GevParams& gev, std::span<const double> exceed, double q, double n_years) {
  const double a = gev.scale;
  const double xi = gev.shape;
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  const double tq = (q - gev.loc) / a;
  const double sq = 1.0 + xi * tq;
  if (sq > 0.0) {
    const double e = n_years * std::exp(-log_u(tq, xi));
    g[0] += e * tq / (sq * a);
    g[1] += e / (sq * a);
    g[2] -= e * dlog_u_dxi(tq, xi, sq);
  }
  for (double x : exceed) {
    const double t = (x - gev.loc) / a;
    const double s = 1.0 + xi * t;
    g[0] += 1.0 / a - (1.0 + xi) * t / (s * a);
    g[1] -= (1.0 + xi) / (s * a);
    g[2] += dlog_u_dxi(t, xi, s) + t / s;
  }
  return g;
}

namespace {

using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Damped Newton iterations with a central-difference Hessian of the analytic gradient.
Eigen::VectorXd newton_polish(const Objective& f, const GradFn& grad, Eigen::VectorXd x, const Eigen::VectorXd& h,
                              int iterations = 25) {
  double fx = f(x);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd g = grad(x);
    const Eigen::MatrixXd hess = hessian_from_gradient(grad, x, h);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite()) break;
    bool moved = false;
    for (int half = 0; half < 30; ++half) {
      const Eigen::VectorXd xn = x - step;
      const double fn = f(xn);
      if (fn <= fx) {
        moved = fx - fn > 0.0;
        x = xn;
        fx = fn;
        break;
      }
      step *= 0.5;
    }
    if (!moved || step.cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
  }
  return x;
}

std::string trace_text(const std::vector<double>& trace) {
  std::ostringstream os;
  const std::size_t from = trace.size() > 8 ? trace.size() - 8 : 0;
  for (std::size_t i = from; i < trace.size(); ++i) os << (i > from ? ", " : "") << trace[i];
  return os.str();
}

}  // namespace

StationFit fit_station(std::span<const double> exceed, double q, double n_years, const MarginFitOptions& opt) {
  if (!(n_years > 0.0)) throw InputError("fit_station: n_years must be positive");
  if (!std::isfinite(q)) throw InputError("fit_station: threshold must be finite");
  for (double x : exceed) {
    if (!std::isfinite(x) || !(x > q)) throw InputError("fit_station: every value must exceed the threshold");
  }
  const auto n = static_cast<double>(exceed.size());
  if (exceed.size() < 3) throw EstimationError("fit_station: at least three exceedances are needed");
  const auto [mn, mx] = std::minmax_element(exceed.begin(), exceed.end());
  if (*mx - *mn <= 1e-12 * std::max(1.0, std::abs(*mx))) {
    throw EstimationError("fit_station: exceedances have zero variance");
  }
  double mean_excess = 0.0;
  for (double x : exceed) mean_excess += (x - q) / n;
  const double a0 = mean_excess;
  const double b0 = q + a0 * std::log(n / n_years);
  const bool fixed = opt.fixed_shape.has_value();
  const double xi_fixed = fixed ? *opt.fixed_shape : 0.0;

  auto unpack = [&](const Eigen::VectorXd& th) {
    return GevParams{th[1], std::exp(th[0]), fixed ? xi_fixed : th[2]};
  };
  const Objective obj = [&](const Eigen::VectorXd& th) { return ppp_nll(unpack(th), exceed, q, n_years); };

  NelderMeadOptions nm;
  nm.max_evaluations = opt.max_evaluations;
  nm.xtol = 1e-8;
  nm.ftol = 1e-12;
  const Eigen::Index dim = fixed ? 2 : 3;
  Eigen::VectorXd step(dim);
  step[0] = 0.3;
  step[1] = 0.5 * a0;
  if (!fixed) step[2] = 0.1;

  NelderMeadResult best;
  best.f = kInf;
  int evals = 0;
  const std::vector<double> starts = fixed ? std::vector<double>{xi_fixed} : std::vector<double>{0.0, -0.1, 0.1, 0.2};
  for (double xi0 : starts) {
    Eigen::VectorXd th(dim);
    th[0] = std::log(a0);
    th[1] = b0;
    if (!fixed) th[2] = xi0;
    NelderMeadResult r = nelder_mead(obj, th, step, nm);
    evals += r.evaluations;
    if (r.f < best.f) best = std::move(r);
  }
  if (!std::isfinite(best.f)) throw EstimationError("fit_station: no starting point has finite likelihood");
  NelderMeadResult again = nelder_mead(obj, best.x, 0.1 * step, nm);
  evals += again.evaluations;
  if (again.f <= best.f) best = std::move(again);

  // Polish on the natural (a, b, xi) scale.
  auto natural = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd p(dim);
    p[0] = std::exp(th[0]);
    p[1] = th[1];
    if (!fixed) p[2] = th[2];
    return p;
  };
  auto as_gev = [&](const Eigen::VectorXd& p) { return GevParams{p[1], p[0], fixed ? xi_fixed : p[2]}; };
  const Objective nat_obj = [&](const Eigen::VectorXd& p) { return ppp_nll(as_gev(p), exceed, q, n_years); };
  const GradFn nat_grad = [&](const Eigen::VectorXd& p) {
    const Eigen::Vector3d g = ppp_nll_gradient(as_gev(p), exceed, q, n_years);
    return Eigen::VectorXd(g.head(dim));
  };
  Eigen::VectorXd p = natural(best.x);
  auto steps_for = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd h(dim);
    h[0] = 1e-4 * v[0];
    h[1] = 1e-4 * std::max(std::abs(v[1]), v[0]);
    if (!fixed) h[2] = 1e-4 * std::max(std::abs(v[2]), 1.0);
    return h;
  };
  p = newton_polish(nat_obj, nat_grad, p, steps_for(p));

  StationFit fit;
  fit.params = as_gev(p);
  fit.nll = nat_obj(p);
  fit.n_exceed = static_cast<int>(exceed.size());
  fit.threshold = q;
  fit.n_years = n_years;
  fit.shape_fixed = fixed;
  fit.evaluations = evals;

  const Eigen::VectorXd g = nat_grad(p);
  const Eigen::VectorXd scale = p.cwiseAbs().cwiseMax(p[0]);
  const double rel = (g.cwiseProduct(scale)).cwiseAbs().maxCoeff() / std::max(1.0, std::abs(fit.nll));
  if (!std::isfinite(fit.nll) || rel > 1e-3) {
    throw EstimationError("fit_station: optimizer did not converge (relative gradient " + std::to_string(rel) +
                          "; last objective values " + trace_text(best.trace) + ")");
  }

  const Eigen::MatrixXd info = hessian_from_gradient(nat_grad, p, steps_for(p));
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw EstimationError("fit_station: observed information is not positive definite at the optimum");
  }
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(dim, dim));
  fit.cov.topLeftCorner(dim, dim) = cov;
  for (Eigen::Index i = 0; i < dim; ++i) fit.se[i] = std::sqrt(std::max(cov(i, i), 0.0));
  if (fixed) fit.se[2] = 0.0;
  return fit;
}

LrTest likelihood_ratio_test(double nll_restricted, double nll_full, int df) {
  if (df < 1) throw InputError("likelihood ratio test needs df >= 1");
  LrTest t;
  t.df = df;
  t.statistic = std::max(0.0, 2.0 * (nll_restricted - nll_full));
  boost::math::chi_squared dist(df);
  t.p_value = boost::math::cdf(boost::math::complement(dist, t.statistic));
  return t;
}

Eigen::Vector3d bootstrap_station_se(std::span<const double> exceed, double q, double n_years, int replicates,
                                     std::uint64_t seed) {
  if (replicates < 2) throw InputError("bootstrap needs at least two replicates");
  std::vector<Eigen::Vector3d> reps;
  const auto n = static_cast<double>(exceed.size());
  for (int r = 0; r < replicates; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::poisson_distribution<int> pois(n);
    std::uniform_int_distribution<std::size_t> pick(0, exceed.size() - 1);
    const int count = pois(rng);
    std::vector<double> sample(static_cast<std::size_t>(count));
    for (double& v : sample) v = exceed[pick(rng)];
    try {
      const StationFit f = fit_station(sample, q, n_years);
      reps.emplace_back(f.params.scale, f.params.loc, f.params.shape);
    } catch (const Error&) {
      // Degenerate resamples are skipped.
    }
  }
  if (reps.size() < 2) throw EstimationError("bootstrap: fewer than two replicates could be fitted");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& v : reps) mean += v;
  mean /= static_cast<double>(reps.size());
  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  for (const auto& v : reps) var += (v - mean).cwiseAbs2();
  return (var / static_cast<double>(reps.size() - 1)).cwiseSqrt();
}

std::string covariate_name(Covariate c) {
  switch (c) {
    case Covariate::intercept: return "intercept";
    case Covariate::latitude: return "latitude";
    case Covariate::area: return "area";
    case Covariate::altitude: return "altitude";
    case Covariate::slope: return "slope";
  }
  return "intercept";
}

Covariate covariate_from_string(const std::string& s) {
  if (s == "intercept" || s == "1") return Covariate::intercept;
  if (s == "latitude") return Covariate::latitude;
  if (s == "area") return Covariate::area;
  if (s == "altitude") return Covariate::altitude;
  if (s == "slope") return Covariate::slope;
  throw InputError("unknown covariate '" + s + "'");
}

double covariate_value(Covariate c, const CatchmentSummary& s) {
  double v = 1.0;
  switch (c) {
    case Covariate::intercept: return 1.0;
    case Covariate::latitude: v = s.centroid_latitude; break;
    case Covariate::area: v = s.area; break;
    case Covariate::altitude: v = s.mean_altitude; break;
    case Covariate::slope: v = s.mean_slope; break;
  }
  if (!(v > 0.0)) throw InputError("covariate " + covariate_name(c) + " must be positive to take logs");
  return std::log(v);
}

const RegionFit& RegionalModel::region(const std::string& name) const {
  for (const RegionFit& r : regions) {
    if (r.spec.name == name) return r;
  }
  throw InputError("unknown region '" + name + "'");
}

GevParams RegionalModel::predict(const std::string& name, const CatchmentSummary& s) const {
  const RegionFit& r = region(name);
  double la = 0.0;
  double lb = 0.0;
  for (std::size_t k = 0; k < r.spec.scale_covariates.size(); ++k) {
    la += r.alpha[static_cast<Eigen::Index>(k)] * covariate_value(r.spec.scale_covariates[k], s);
  }
  for (std::size_t k = 0; k < r.spec.loc_covariates.size(); ++k) {
    lb += r.beta[static_cast<Eigen::Index>(k)] * covariate_value(r.spec.loc_covariates[k], s);
  }
  return {std::exp(lb), std::exp(la), r.shape};
}

std::string RegionalModel::region_of_segment(int segment_id) const {
  auto it = segment_region.find(segment_id);
  if (it == segment_region.end()) {
    if (regions.size() == 1) return regions.front().spec.name;
    throw InputError("segment " + std::to_string(segment_id) + " has no region assignment");
  }
  return it->second;
}

namespace {

Eigen::MatrixXd design(const std::vector<const MarginStation*>& st, const std::vector<Covariate>& cov) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(st.size()), static_cast<Eigen::Index>(cov.size()));
  for (std::size_t i = 0; i < st.size(); ++i) {
    for (std::size_t k = 0; k < cov.size(); ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = covariate_value(cov[k], st[i]->summary);
    }
  }
  return x;
}

void check_rank(const Eigen::MatrixXd& x, const std::vector<Covariate>& cov, const std::string& region,
                const char* which) {
  if (cov.empty()) throw InputError("region " + region + ": the " + which + " model has no covariates");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  if (rank == x.cols()) return;
  std::string names;
  for (Eigen::Index i = rank; i < x.cols(); ++i) {
    const Eigen::Index col = qr.colsPermutation().indices()[i];
    names += (names.empty() ? "" : ", ") + covariate_name(cov[static_cast<std::size_t>(col)]);
  }
  throw InputError("region " + region + ": " + which + " design is rank deficient (" + std::to_string(x.rows()) +
                   " stations, " + std::to_string(x.cols()) + " columns); collinear or redundant: " + names);
}

RegionFit fit_one_region(const RegionSpec& spec, const std::vector<const MarginStation*>& st,
                         const MarginFitOptions& opt) {
  const Eigen::MatrixXd xa = design(st, spec.scale_covariates);
  const Eigen::MatrixXd xb = design(st, spec.loc_covariates);
  check_rank(xa, spec.scale_covariates, spec.name, "scale");
  check_rank(xb, spec.loc_covariates, spec.name, "location");
  const Eigen::Index pa = xa.cols();
  const Eigen::Index pb = xb.cols();
  const bool fixed = opt.fixed_shape.has_value();
  const Eigen::Index dim = pa + pb + (fixed ? 0 : 1);

  // Start from per-station fits projected onto the covariate design.
  Eigen::VectorXd log_a(static_cast<Eigen::Index>(st.size()));
  Eigen::VectorXd log_b(static_cast<Eigen::Index>(st.size()));
  double xi0 = 0.0;
  int xi_count = 0;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const MarginStation& s = *st[i];
    GevParams g;
    try {
      g = fit_station(s.exceed, s.threshold, s.n_years, opt).params;
      xi0 += g.shape;
      ++xi_count;
    } catch (const EstimationError&) {
      double me = 0.0;
      for (double v : s.exceed) me += (v - s.threshold);
      me = s.exceed.empty() ? std::max(std::abs(s.threshold) * 0.1, 1e-3) : me / static_cast<double>(s.exceed.size());
      g.scale = me;
      g.loc = s.threshold + me * std::log(std::max(static_cast<double>(s.exceed.size()), 1.0) / s.n_years);
    }
    if (!(g.loc > 0.0)) {
      throw InputError("station " + s.id + ": location parameter must be positive for the log-linear model");
    }
    log_a[static_cast<Eigen::Index>(i)] = std::log(g.scale);
    log_b[static_cast<Eigen::Index>(i)] = std::log(g.loc);
  }
  xi0 = fixed ? *opt.fixed_shape : (xi_count ? std::clamp(xi0 / xi_count, -0.4, 0.6) : 0.0);

  Eigen::VectorXd th(dim);
  th.head(pa) = xa.colPivHouseholderQr().solve(log_a);
  th.segment(pa, pb) = xb.colPivHouseholderQr().solve(log_b);
  if (!fixed) th[dim - 1] = xi0;

  auto station_params = [&](const Eigen::VectorXd& t, std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double la = xa.row(row).dot(t.head(pa));
    const double lb = xb.row(row).dot(t.segment(pa, pb));
    return GevParams{std::exp(lb), std::exp(la), fixed ? *opt.fixed_shape : t[dim - 1]};
  };
  const Objective obj = [&](const Eigen::VectorXd& t) {
    double total = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i) {
      total += ppp_nll(station_params(t, i), st[i]->exceed, st[i]->threshold, st[i]->n_years);
      if (!std::isfinite(total)) return kInf;
    }
    return total;
  };
  const GradFn grad = [&](const Eigen::VectorXd& t) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < st.size(); ++i) {
      const GevParams p = station_params(t, i);
      const Eigen::Vector3d gi = ppp_nll_gradient(p, st[i]->exceed, st[i]->threshold, st[i]->n_years);
      const auto row = static_cast<Eigen::Index>(i);
      g.head(pa) += gi[0] * p.scale * xa.row(row).transpose();
      g.segment(pa, pb) += gi[1] * p.loc * xb.row(row).transpose();
      if (!fixed) g[dim - 1] += gi[2];
    }
    return g;
  };

  NelderMeadOptions nm;
  nm.max_evaluations = std::max(opt.max_evaluations, 200 * static_cast<int>(dim));
  nm.xtol = 1e-8;
  nm.ftol = 1e-12;
  Eigen::VectorXd step = Eigen::VectorXd::Constant(dim, 0.05);
  NelderMeadResult r = nelder_mead(obj, th, step, nm);
  if (!std::isfinite(r.f)) throw EstimationError("region " + spec.name + ": no finite likelihood near the start");
  const Eigen::VectorXd h = (1e-4 * r.x.cwiseAbs().cwiseMax(1.0)).eval();
  Eigen::VectorXd est = newton_polish(obj, grad, r.x, h);

  RegionFit fit;
  fit.spec = spec;
  fit.alpha = est.head(pa);
  fit.beta = est.segment(pa, pb);
  fit.shape = fixed ? *opt.fixed_shape : est[dim - 1];
  fit.nll = obj(est);
  const Eigen::MatrixXd info = hessian_from_gradient(grad, est, (1e-4 * est.cwiseAbs().cwiseMax(1.0)).eval());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  fit.se = Eigen::VectorXd::Constant(pa + pb + 1, std::numeric_limits<double>::quiet_NaN());
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(dim, dim));
    for (Eigen::Index i = 0; i < dim; ++i) fit.se[i] = std::sqrt(std::max(cov(i, i), 0.0));
    if (fixed) fit.se[pa + pb] = 0.0;
  }
  return fit;
}

}  // namespace

RegionalModel fit_regional(const std::vector<MarginStation>& stations, const std::vector<RegionSpec>& regions,
                           const MarginFitOptions& opt) {
  if (regions.empty()) throw InputError("fit_regional: no regions specified");
  RegionalModel model;
  for (const MarginStation& s : stations) {
    bool known = false;
    for (const RegionSpec& r : regions) known = known || r.name == s.region;
    if (!known) throw InputError("station " + s.id + " is assigned to unknown region '" + s.region + "'");
    if (!model.station_region.emplace(s.id, s.region).second) throw InputError("duplicate station id " + s.id);
    for (double x : s.exceed) {
      if (!(x > s.threshold)) throw InputError("station " + s.id + ": every value must exceed the threshold");
    }
  }
  for (const RegionSpec& r : regions) {
    std::vector<const MarginStation*> members;
    for (const MarginStation& s : stations) {
      if (s.region == r.name) members.push_back(&s);
    }
    if (members.empty()) throw InputError("region " + r.name + " has no stations");
    model.regions.push_back(fit_one_region(r, members, opt));
  }
  return model;
}

}  // namespace rivex
