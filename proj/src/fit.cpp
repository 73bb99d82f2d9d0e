#include "rivex/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <string>

#include "rivex/errors.hpp"
#include "rivex/hr_core.hpp"
#include "rivex/optim.hpp"
#include "rivex/parallel.hpp"

namespace rivex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool row_complete(const Eigen::MatrixXd& ev, Eigen::Index i) { return ev.row(i).array().isFinite().all(); }

struct SpectralData {
  Eigen::MatrixXd log_omega;  // |I| x m
  int n_total = 0;
  double threshold = 0.0;
};

SpectralData prepare_spectral(double threshold, const Eigen::MatrixXd& ev) {
  SpectralData d;
  d.threshold = threshold;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.rows(); ++i) {
    if (!row_complete(ev, i)) continue;
    ++d.n_total;
    if (ev.row(i).sum() > threshold) keep.push_back(i);
  }
  if (keep.empty()) throw EstimationError("no complete event has |X|_1 above the spectral threshold " + std::to_string(threshold));
  d.log_omega.resize(static_cast<Eigen::Index>(keep.size()), ev.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const Eigen::RowVectorXd x = ev.row(keep[r]);
    if ((x.array() <= 0.0).any()) throw InputError("events must be positive on the Pareto scale");
    d.log_omega.row(static_cast<Eigen::Index>(r)) = (x / x.sum()).array().log().matrix();
  }
  return d;
}

double spectral_value(const SpectralData& d, const Eigen::MatrixXd& gamma) {
  const Eigen::Index m = gamma.cols();
  const Eigen::Index n = d.log_omega.rows();
  Eigen::MatrixXd sigma(m - 1, m - 1);
  for (Eigen::Index i = 1; i < m; ++i) {
    for (Eigen::Index j = 1; j < m; ++j) sigma(i - 1, j - 1) = 0.5 * (gamma(i, 0) + gamma(j, 0) - gamma(i, j));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) return kInf;
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  if ((diag.array() <= 1e-150).any()) return kInf;
  const double log_det = 2.0 * diag.array().log().sum();
  Eigen::MatrixXd wt(m - 1, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index j = 1; j < m; ++j) wt(j - 1, r) = d.log_omega(r, j) - d.log_omega(r, 0) + 0.5 * gamma(j, 0);
  }
  llt.matrixL().solveInPlace(wt);
  const double c = -0.5 * static_cast<double>(m - 1) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
  std::vector<double> terms(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const double jac = d.log_omega(r, 0) + d.log_omega.row(r).sum();
    terms[static_cast<std::size_t>(r)] = -jac + c - 0.5 * wt.col(r).squaredNorm();
  }
  return -pairwise_sum(terms);
}

struct CensoredEvent {
  std::string key;  // per station: 'm' missing, 'b' below, 'a' above
  Eigen::VectorXd x_obs;
};

struct CensoredGroup {
  std::vector<int> observed;
  std::vector<int> exceed;  // positions inside `observed`
  Eigen::VectorXd u_obs;
};

struct CensoredData {
  std::vector<CensoredEvent> exceed_events;  // J
  std::map<std::string, CensoredGroup> groups;
  std::map<std::string, int> below;  // observed-mask key -> count of events with no exceedance
  int n_total = 0;
  Eigen::VectorXd u;
};

Eigen::VectorXd censoring_levels(const FitConfig& config, Eigen::Index m) {
  if (config.censored_u.size() == 0) return Eigen::VectorXd::Constant(m, config.censored_default);
  if (config.censored_u.size() != m) throw InputError("censored thresholds: one value per station is required");
  if ((config.censored_u.array() <= 0.0).any() || !config.censored_u.allFinite()) {
    throw InputError("censored thresholds must be positive and finite");
  }
  return config.censored_u;
}

CensoredData prepare_censored(const FitConfig& config, const Eigen::MatrixXd& ev) {
  CensoredData d;
  const Eigen::Index m = ev.cols();
  d.u = censoring_levels(config, m);
  for (Eigen::Index i = 0; i < ev.rows(); ++i) {
    std::string key(static_cast<std::size_t>(m), 'm');
    std::vector<int> obs;
    std::vector<int> exc;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = ev(i, j);
      if (!std::isfinite(v)) continue;
      if (v <= 0.0) throw InputError("events must be positive on the Pareto scale");
      if (v > d.u[j]) {
        key[static_cast<std::size_t>(j)] = 'a';
        exc.push_back(static_cast<int>(obs.size()));
      } else {
        key[static_cast<std::size_t>(j)] = 'b';
      }
      obs.push_back(static_cast<int>(j));
    }
    if (obs.empty()) continue;
    ++d.n_total;
    Eigen::VectorXd uo(static_cast<Eigen::Index>(obs.size()));
    Eigen::VectorXd xo(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t r = 0; r < obs.size(); ++r) {
      uo[static_cast<Eigen::Index>(r)] = d.u[obs[r]];
      xo[static_cast<Eigen::Index>(r)] = ev(i, obs[r]);
    }
    if (exc.empty()) {
      std::string mask = key;
      std::replace(mask.begin(), mask.end(), 'b', 'o');
      ++d.below[mask];
      continue;
    }
    if (!d.groups.count(key)) d.groups[key] = CensoredGroup{obs, exc, uo};
    d.exceed_events.push_back(CensoredEvent{key, xo});
  }
  if (d.exceed_events.empty()) throw EstimationError("no event exceeds the censoring thresholds");
  return d;
}

MvnOptions fitting_mvn(const FitConfig& config, int scale) {
  MvnOptions o;
  o.adaptive = false;
  o.shifts = 2;
  o.min_points = std::max(64, config.mvn_points * scale);
  o.seed = derive_seed(config.seed, 0xc3a5);
  return o;
}

std::vector<int> observed_from_mask(const std::string& mask) {
  std::vector<int> idx;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j] != 'm') idx.push_back(static_cast<int>(j));
  }
  return idx;
}

double censored_value(const FitConfig& config, const CensoredData& d, const Eigen::MatrixXd& gamma) {
  const int m = static_cast<int>(gamma.rows());
  std::unique_ptr<HrStructure> full;
  try {
    full = std::make_unique<HrStructure>(gamma, 0);
  } catch (const DomainError&) {
    return kInf;
  }
  auto structure_for = [&](const std::vector<int>& obs) {
    return static_cast<int>(obs.size()) == m ? *full : full->subset(obs);
  };

  const MvnOptions term_opt = fitting_mvn(config, 1);
  const MvnOptions v_opt = fitting_mvn(config, 4);
  double below_part = 0.0;
  for (const auto& [mask, count] : d.below) {
    const std::vector<int> obs = observed_from_mask(mask);
    Eigen::VectorXd uo(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t r = 0; r < obs.size(); ++r) uo[static_cast<Eigen::Index>(r)] = d.u[obs[r]];
    const double v = obs.size() == 1 ? 1.0 / uo[0] : exponent_measure(structure_for(obs), uo, v_opt).value;
    if (!(v < 1.0)) return kInf;
    below_part += count * std::log1p(-v);
  }

  std::map<std::string, std::unique_ptr<CensoredPattern>> patterns;
  for (const auto& [key, g] : d.groups) {
    patterns[key] = std::make_unique<CensoredPattern>(structure_for(g.observed), g.exceed, g.u_obs);
  }
  std::vector<double> terms(d.exceed_events.size());
  parallel_for(terms.size(), [&](std::size_t i) {
    const CensoredEvent& e = d.exceed_events[i];
    terms[i] = patterns.at(e.key)->log_density(e.x_obs, term_opt);
  });
  const double s = pairwise_sum(terms);
  if (!std::isfinite(s)) return kInf;
  return -(below_part + s);
}

struct Problem {
  Variant variant;
  std::vector<int> free;
  std::array<double, 6> base;
  BoxTransform transform;
  std::function<double(const Eigen::MatrixXd&)> value;
  const StationGeometry* geometry;

  KernelParams params(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd p = transform.to_box(z);
    std::array<double, 6> v = base;
    for (std::size_t r = 0; r < free.size(); ++r) v[static_cast<std::size_t>(free[r])] = p[static_cast<Eigen::Index>(r)];
    return from_array(v, variant);
  }
  Eigen::VectorXd unbounded(const KernelParams& kp, const ParamBox& box) const {
    const std::array<double, 6> v = to_array(kp);
    Eigen::VectorXd p(static_cast<Eigen::Index>(free.size()));
    for (std::size_t r = 0; r < free.size(); ++r) {
      const auto k = static_cast<std::size_t>(free[r]);
      const double span = box.hi[k] - box.lo[k];
      p[static_cast<Eigen::Index>(r)] = std::clamp(v[k], box.lo[k] + 1e-9 * span, box.hi[k] - 1e-9 * span);
    }
    return transform.to_unbounded(p);
  }
  double operator()(const Eigen::VectorXd& z) const {
    try {
      return value(geometry->gamma_matrix(params(z)));
    } catch (const DomainError&) {
      return kInf;
    }
  }
};

Problem make_problem(const FitConfig& config, Variant variant, const StationGeometry& geometry,
                     std::function<double(const Eigen::MatrixXd&)> value, const std::vector<int>& free) {
  Eigen::VectorXd lo(static_cast<Eigen::Index>(free.size()));
  Eigen::VectorXd hi(static_cast<Eigen::Index>(free.size()));
  std::vector<bool> log_scale;
  for (std::size_t r = 0; r < free.size(); ++r) {
    const auto k = static_cast<std::size_t>(free[r]);
    lo[static_cast<Eigen::Index>(r)] = config.box.lo[k];
    hi[static_cast<Eigen::Index>(r)] = config.box.hi[k];
    log_scale.push_back(k == 0 || k == 1 || k == 2 || k == 5);
  }
  KernelParams neutral;
  neutral.variant = variant;
  return Problem{variant, free, to_array(neutral.normalized()), BoxTransform(lo, hi, log_scale), std::move(value), &geometry};
}

std::vector<std::string> boundary_flags(const Problem& prob, const KernelParams& est, const ParamBox& box) {
  std::vector<std::string> out;
  const std::array<double, 6> v = to_array(est);
  for (int k : prob.free) {
    const auto i = static_cast<std::size_t>(k);
    const bool lg = k == 0 || k == 1 || k == 2 || k == 5;
    const double f = lg ? (std::log(v[i]) - std::log(box.lo[i])) / (std::log(box.hi[i]) - std::log(box.lo[i]))
                        : (v[i] - box.lo[i]) / (box.hi[i] - box.lo[i]);
    if (f < 1e-3 || f > 1.0 - 1e-3) out.emplace_back(kParamNames[i]);
  }
  return out;
}

struct Refined {
  NelderMeadResult nm;
  int evaluations = 0;
};

// Simplex from z0, restarted once from its end point.
constexpr double kStartLogit = 2.0;  // box fractions 0.12 to 0.88

Refined refine(const Problem& prob, const Eigen::VectorXd& z0, double step, double xtol, int max_eval) {
  NelderMeadOptions opt;
  opt.xtol = xtol;
  opt.max_evaluations = max_eval;
  const Objective f = [&](const Eigen::VectorXd& z) { return prob(z); };
  Refined r;
  r.nm = nelder_mead(f, z0, Eigen::VectorXd::Constant(z0.size(), step), opt);
  r.evaluations = r.nm.evaluations;
  const int left = max_eval - r.evaluations;
  if (left > 4 * static_cast<int>(z0.size()) + 4) {
    opt.max_evaluations = left;
    NelderMeadResult again = nelder_mead(f, r.nm.x, Eigen::VectorXd::Constant(z0.size(), 0.5 * step), opt);
    r.evaluations += again.evaluations;
    if (again.f <= r.nm.f) {
      again.trace.insert(again.trace.begin(), r.nm.trace.begin(), r.nm.trace.end());
      r.nm = std::move(again);
    } else {
      r.nm.converged = r.nm.converged && again.converged;
    }
  }
  return r;
}

// Best grid points, skipping any point adjacent to one already chosen so that the simplex
// runs start in different parts of the box.
std::vector<Eigen::VectorXd> grid_starts(const Problem& prob, const FitConfig& config, int* evaluations) {
  const auto d = static_cast<int>(prob.free.size());
  const int g = std::max(1, config.grid_points);
  int total = 1;
  for (int i = 0; i < d; ++i) total *= g;
  struct Point {
    double f;
    std::vector<int> idx;
    Eigen::VectorXd z;
  };
  std::vector<Point> scored;
  scored.reserve(static_cast<std::size_t>(total));
  for (int n = 0; n < total; ++n) {
    Eigen::VectorXd frac(d);
    std::vector<int> idx(static_cast<std::size_t>(d));
    int rem = n;
    for (int i = 0; i < d; ++i) {
      idx[static_cast<std::size_t>(i)] = rem % g;
      frac[i] = (2.0 * (rem % g) + 1.0) / (2.0 * g);
      rem /= g;
    }
    const Eigen::VectorXd z = prob.transform.to_unbounded(prob.transform.at_fraction(frac));
    scored.push_back({prob(z), std::move(idx), z});
  }
  *evaluations += total;
  std::stable_sort(scored.begin(), scored.end(), [](const Point& a, const Point& b) { return a.f < b.f; });
  std::vector<const Point*> chosen;
  for (const Point& p : scored) {
    if (static_cast<int>(chosen.size()) >= std::max(1, config.grid_starts) || !std::isfinite(p.f)) break;
    const bool near = std::any_of(chosen.begin(), chosen.end(), [&](const Point* q) {
      for (int i = 0; i < d; ++i) {
        if (std::abs(p.idx[static_cast<std::size_t>(i)] - q->idx[static_cast<std::size_t>(i)]) > 1) return false;
      }
      return true;
    });
    if (!near) chosen.push_back(&p);
  }
  if (chosen.empty()) throw EstimationError("no grid point gives a finite likelihood");
  std::vector<Eigen::VectorXd> out;
  for (const Point* p : chosen) out.push_back(p->z);
  return out;
}

void finish(FitResult& res, const Problem& prob, const Refined& best, const FitConfig& config) {
  res.estimate = prob.params(best.nm.x);
  res.loglik = -best.nm.f;
  res.converged = best.nm.converged && std::isfinite(best.nm.f);
  res.trace = best.nm.trace;
  res.boundary = boundary_flags(prob, res.estimate, config.box);
}

FitResult fit_spectral(const FitConfig& config, const Eigen::MatrixXd& ev, const StationGeometry& geometry,
                       Variant variant, const std::optional<KernelParams>& start, const std::vector<int>& free,
                       int max_eval) {
  const double u = spectral_threshold(config, ev);
  auto data = std::make_shared<SpectralData>(prepare_spectral(u, ev));
  Problem prob = make_problem(config, variant, geometry,
                              [data](const Eigen::MatrixXd& g) { return spectral_value(*data, g); }, free);
  if (start) {
    const std::array<double, 6> s = to_array(*start);
    for (std::size_t k = 0; k < 6; ++k) {
      if (std::find(free.begin(), free.end(), static_cast<int>(k)) == free.end()) prob.base[k] = s[k];
    }
  }
  FitResult res;
  res.method = Method::spectral;
  res.spectral_threshold = u;
  res.n_total = data->n_total;
  res.n_used = static_cast<int>(data->log_omega.rows());
  int evals = 0;
  std::vector<Eigen::VectorXd> starts;
  if (start) {
    starts.push_back(prob.unbounded(*start, config.box));
  } else {
    starts = grid_starts(prob, config, &evals);
  }
  res.start = prob.params(starts.front());
  Refined best;
  best.nm.f = kInf;
  for (const Eigen::VectorXd& z0 : starts) {
    Refined r = refine(prob, z0, start ? 0.3 : 0.5, config.xtol, max_eval);
    evals += r.evaluations;
    if (r.nm.f < best.nm.f || !std::isfinite(best.nm.f)) best = std::move(r);
  }
  res.evaluations = evals;
  finish(res, prob, best, config);
  return res;
}

FitResult fit_censored(const FitConfig& config, const Eigen::MatrixXd& ev, const StationGeometry& geometry,
                       Variant variant, const KernelParams& start, const std::vector<int>& free, int max_eval,
                       bool screen) {
  auto data = std::make_shared<CensoredData>(prepare_censored(config, ev));
  Problem prob = make_problem(
      config, variant, geometry, [data, config](const Eigen::MatrixXd& g) { return censored_value(config, *data, g); },
      free);
  const std::array<double, 6> s = to_array(start);
  for (std::size_t k = 0; k < 6; ++k) {
    if (std::find(free.begin(), free.end(), static_cast<int>(k)) == free.end()) prob.base[k] = s[k];
  }
  FitResult res;
  res.method = Method::censored;
  res.censored_u = data->u;
  res.n_total = data->n_total;
  res.n_used = static_cast<int>(data->exceed_events.size());
  // A start on the box edge (typical of a spectral fit to few events) sits far out in the
  // logit coordinates, where simplex steps no longer move it; pull it inside first.
  const Eigen::VectorXd z0 = prob.unbounded(start, config.box).cwiseMax(-kStartLogit).cwiseMin(kStartLogit);
  res.start = prob.params(z0);
  std::vector<Eigen::VectorXd> starts;
  if (std::isfinite(prob(z0))) starts.push_back(z0);
  int evals = 1;
  if (screen && config.censored_grid_points > 0) {
    FitConfig g = config;
    g.grid_points = config.censored_grid_points;
    for (Eigen::VectorXd& z : grid_starts(prob, g, &evals)) starts.push_back(std::move(z));
  }
  if (starts.empty()) throw EstimationError("censored likelihood is not finite at the starting point");
  Refined best;
  best.nm.f = kInf;
  for (const Eigen::VectorXd& z : starts) {
    Refined r = refine(prob, z, 0.3, config.xtol, max_eval);
    evals += r.evaluations;
    if (r.nm.f < best.nm.f || !std::isfinite(best.nm.f)) best = std::move(r);
  }
  res.evaluations = evals;
  finish(res, prob, best, config);
  return res;
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::spectral ? "spectral" : "censored"; }

Method method_from_string(std::string_view s) {
  if (s == "spectral") return Method::spectral;
  if (s == "censored") return Method::censored;
  throw InputError("unknown estimation method '" + std::string(s) + "' (expected spectral or censored)");
}

std::array<double, 6> to_array(const KernelParams& p) { return {p.lambda_riv, p.lambda_euc, p.tau, p.alpha, p.beta, p.c}; }

KernelParams from_array(const std::array<double, 6>& v, Variant variant) {
  KernelParams p;
  p.variant = variant;
  p.lambda_riv = v[0];
  p.lambda_euc = v[1];
  p.tau = v[2];
  p.alpha = v[3];
  p.beta = v[4];
  p.c = v[5];
  return p.normalized();
}

std::vector<int> free_parameters(Variant v) {
  switch (v) {
    case Variant::euclid:
    case Variant::hydro: return {1, 3, 4, 5};
    case Variant::full: return {0, 1, 2, 3, 4, 5};
    case Variant::full_iso: return {0, 1, 2, 3};
  }
  return {};
}

bool ParamBox::contains(const KernelParams& p) const {
  const std::array<double, 6> v = to_array(p);
  for (int k : free_parameters(p.variant)) {
    const auto i = static_cast<std::size_t>(k);
    if (!(v[i] >= lo[i] && v[i] <= hi[i])) return false;
  }
  return true;
}

double spectral_threshold(const FitConfig& config, const Eigen::MatrixXd& events) {
  if (config.spectral_threshold) {
    if (!(*config.spectral_threshold > 0.0)) throw InputError("spectral threshold must be positive");
    return *config.spectral_threshold;
  }
  if (!(config.spectral_quantile > 0.0 && config.spectral_quantile < 1.0)) {
    throw InputError("spectral quantile must lie in (0, 1)");
  }
  std::vector<double> norms;
  for (Eigen::Index i = 0; i < events.rows(); ++i) {
    if (row_complete(events, i)) norms.push_back(events.row(i).sum());
  }
  if (norms.size() < 2) throw EstimationError("fewer than two complete events for the spectral threshold");
  std::sort(norms.begin(), norms.end());
  const double pos = config.spectral_quantile * static_cast<double>(norms.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, norms.size() - 1);
  return norms[lo] + (pos - static_cast<double>(lo)) * (norms[hi] - norms[lo]);
}

double spectral_nll(const FitConfig& config, const KernelParams& params, const Eigen::MatrixXd& events,
                    const StationGeometry& geometry) {
  if (events.cols() != geometry.size()) throw InputError("event matrix and station set differ in size");
  if (geometry.size() < 2) throw InputError("at least two stations are required");
  const SpectralData d = prepare_spectral(spectral_threshold(config, events), events);
  if (!config.box.contains(params)) return kInf;
  try {
    return spectral_value(d, geometry.gamma_matrix(params));
  } catch (const DomainError&) {
    return kInf;
  }
}

double censored_nll(const FitConfig& config, const KernelParams& params, const Eigen::MatrixXd& events,
                    const StationGeometry& geometry) {
  if (events.cols() != geometry.size()) throw InputError("event matrix and station set differ in size");
  if (geometry.size() < 2) throw InputError("at least two stations are required");
  const CensoredData d = prepare_censored(config, events);
  if (!config.box.contains(params)) return kInf;
  try {
    return censored_value(config, d, geometry.gamma_matrix(params));
  } catch (const DomainError&) {
    return kInf;
  }
}

namespace {

FitResult fit_dependence_impl(const FitConfig& config, const Eigen::MatrixXd& events, const StationGeometry& geometry,
                              Variant variant, std::optional<KernelParams> start) {
  if (events.cols() != geometry.size()) throw InputError("event matrix and station set differ in size");
  if (geometry.size() < 2) throw InputError("at least two stations are required");
  const std::vector<int> free = free_parameters(variant);
  if (start) start->variant = variant;
  if (config.method == Method::spectral) {
    return fit_spectral(config, events, geometry, variant, start, free, config.max_evaluations);
  }
  KernelParams s;
  int extra = 0;
  if (start) {
    s = *start;
  } else {
    const FitResult sp = fit_spectral(config, events, geometry, variant, std::nullopt, free, config.max_evaluations);
    s = sp.estimate;
    extra = sp.evaluations;
  }
  FitResult res = fit_censored(config, events, geometry, variant, s, free, config.max_evaluations, !start);
  res.evaluations += extra;
  return res;
}

}  // namespace

FitResult fit_dependence(const FitConfig& config, const Eigen::MatrixXd& events, const StationGeometry& geometry,
                         Variant variant, std::optional<KernelParams> start) {
  FitResult res = fit_dependence_impl(config, events, geometry, variant, start);
  if (config.require_convergence && !res.converged) {
    std::string tail;
    const std::size_t from = res.trace.size() > 8 ? res.trace.size() - 8 : 0;
    for (std::size_t i = from; i < res.trace.size(); ++i) tail += " " + std::to_string(res.trace[i]);
    throw EstimationError(std::string(to_string(res.method)) + " fit of variant " + std::string(to_string(variant)) +
                          " did not converge in " + std::to_string(res.evaluations) +
                          " evaluations; last objective values:" + tail);
  }
  return res;
}

void bootstrap_se(const FitConfig& config, const Eigen::MatrixXd& events, const StationGeometry& geometry,
                  FitResult& fit, int replicates, std::uint64_t seed) {
  if (replicates < 2) throw InputError("bootstrap needs at least two replicates");
  FitConfig cfg = config;
  cfg.method = fit.method;
  cfg.mvn_points = config.bootstrap_mvn_points;
  if (fit.method == Method::spectral) {
    cfg.spectral_threshold = fit.spectral_threshold;
  } else {
    cfg.censored_u = fit.censored_u;
  }
  const Variant variant = fit.estimate.variant;
  const std::vector<int> free = free_parameters(variant);
  const Eigen::Index n = events.rows();
  Eigen::MatrixXd reps(replicates, 6);
  int kept = 0;
  for (int b = 0; b < replicates; ++b) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    Eigen::MatrixXd sample(n, events.cols());
    for (Eigen::Index i = 0; i < n; ++i) sample.row(i) = events.row(pick(rng));
    try {
      FitResult r;
      if (fit.method == Method::spectral) {
        r = fit_spectral(cfg, sample, geometry, variant, std::nullopt, free, cfg.max_evaluations);
      } else {
        r = fit_censored(cfg, sample, geometry, variant, fit.estimate, free, cfg.bootstrap_max_evaluations, false);
      }
      const std::array<double, 6> v = to_array(r.estimate);
      for (int k = 0; k < 6; ++k) reps(kept, k) = v[static_cast<std::size_t>(k)];
      ++kept;
    } catch (const EstimationError&) {
      // a resample without usable events is dropped
    }
  }
  if (kept < 2) throw EstimationError("fewer than two bootstrap replicates could be fitted");
  fit.replicates = reps.topRows(kept);
  fit.se = {};
  for (int k : free) {
    const Eigen::VectorXd col = fit.replicates.col(k);
    const double mean = col.mean();
    fit.se[static_cast<std::size_t>(k)] = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(kept - 1));
  }
}

std::vector<ProfilePoint> profile_alpha(const FitConfig& config, const Eigen::MatrixXd& events,
                                        const StationGeometry& geometry, Variant variant,
                                        const std::vector<double>& alphas, const KernelParams& start) {
  std::vector<int> free = free_parameters(variant);
  free.erase(std::remove(free.begin(), free.end(), 3), free.end());
  std::vector<ProfilePoint> out;
  for (double a : alphas) {
    if (!(a >= config.box.lo[3] && a <= config.box.hi[3])) throw InputError("profile alpha outside its box");
    KernelParams s = start;
    s.variant = variant;
    s.alpha = a;
    const FitResult r = config.method == Method::spectral
                            ? fit_spectral(config, events, geometry, variant, s, free, config.max_evaluations)
                            : fit_censored(config, events, geometry, variant, s, free, config.max_evaluations, false);
    out.push_back(ProfilePoint{a, r.loglik, r.estimate});
  }
  return out;
}

}  // namespace rivex
