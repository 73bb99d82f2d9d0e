// Acceptance run: `acceptance N` checks criterion N (1-9), `acceptance` runs all of them.
// Each criterion prints its individual checks and one PASS/FAIL line; exit status is the
// number of failed criteria.

#include <algorithm>
#include <array>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "decluster_cases.hpp"
#include "oracles.hpp"
#include "rivex/events.hpp"
#include "rivex/fit.hpp"
#include "rivex/hr_core.hpp"
#include "rivex/kernels.hpp"
#include "rivex/margins.hpp"
#include "rivex/risk.hpp"
#include "rivex/simulate.hpp"
#include "toy_basin.hpp"

using namespace rivex;

namespace {

class Report {
 public:
  void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
  bool ok() const { return failed_ == 0; }
  int checks() const { return checks_; }
  int failed() const { return failed_; }

 private:
  int checks_ = 0;
  int failed_ = 0;
};

void Report::check(bool ok, const char* fmt, ...) {
  ++checks_;
  if (!ok) ++failed_;
  std::printf("  [%s] ", ok ? "ok" : "FAIL");
  va_list ap;
  va_start(ap, fmt);
  std::vprintf(fmt, ap);
  va_end(ap);
  std::printf("\n");
  std::fflush(stdout);
}

Eigen::MatrixXd permute(const Eigen::MatrixXd& g, const std::vector<int>& p) {
  const auto m = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = g(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return out;
}

Eigen::VectorXd permute(const Eigen::VectorXd& x, const std::vector<int>& p) {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[p[static_cast<std::size_t>(i)]];
  return out;
}

Eigen::MatrixXd pareto_scale(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / -std::expm1(-1.0 / v); });
}

// ---------------------------------------------------------------------------------------

void criterion1(Report& r) {
  double worst = 0.0;
  for (double g : {0.1, 1.0, 4.0, 25.0}) {
    Eigen::Matrix2d gm;
    gm << 0.0, g, g, 0.0;
    const HrStructure hr(gm);
    for (double x : {0.5, 1.0, 5.0}) {
      for (double y : {0.5, 1.0, 5.0}) {
        const double v = exponent_measure_V(hr, Eigen::Vector2d(x, y));
        worst = std::max(worst, std::abs(v - oracle::biv_hr_V(g, x, y)));
      }
    }
  }
  r.check(worst <= 1e-10, "m = 2, 36 grid points: max |V - (-log F)| = %.2e (tol 1e-10)", worst);

  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ux(0.3, 5.0);
  for (int k = 0; k < 6; ++k) {
    const Eigen::MatrixXd g = oracle::random_variogram(3, rng, 0.2, 3.0);
    const Eigen::Vector3d x(ux(rng), ux(rng), ux(rng));
    const double v = exponent_measure_V(HrStructure(g), x);
    const oracle::McEstimate mc = oracle::mc_exponent_measure(g, x, 1000000, 7000 + static_cast<std::uint64_t>(k));
    const double z = (v - mc.mean) / mc.se;
    r.check(std::abs(z) <= 3.0, "m = 3 draw %d: V = %.6f, MC = %.6f (se %.1e), z = %+.2f", k, v, mc.mean, mc.se, z);
  }
}

void criterion2(Report& r) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> uu(0.5, 3.0);
  std::uniform_real_distribution<double> frac(0.2, 0.95);
  std::uniform_real_distribution<double> lift(1.05, 4.0);
  double worst = 0.0;
  int n = 0;
  for (int draw = 0; draw < 20; ++draw) {
    const HrStructure hr(oracle::random_variogram(3, rng, 0.2, 3.0));
    const Eigen::Vector3d u(uu(rng), uu(rng), uu(rng));
    Eigen::Vector3d above;
    for (int j = 0; j < 3; ++j) above[j] = u[j] * lift(rng);
    for (int mask = 1; mask < 8; ++mask) {
      std::vector<int> K;
      Eigen::Vector3d x;
      Eigen::Vector3d at;  // point where -dV/dx_K is evaluated: x on K, u elsewhere
      for (int j = 0; j < 3; ++j) {
        if (mask & (1 << j)) {
          K.push_back(j);
          x[j] = above[j];
          at[j] = above[j];
        } else {
          x[j] = u[j] * frac(rng);
          at[j] = u[j];
        }
      }
      const double dens = censored_density(hr, CensoredTerm::make(x, u));
      const double fd = -oracle::mixed_partial(
                                   [&](const Eigen::VectorXd& y) { return exponent_measure_V(hr, y); }, at, K, 2e-3);
      const double rel = std::abs(dens - fd) / std::abs(fd);
      worst = std::max(worst, rel);
      ++n;
      if (rel > 1e-4) r.check(false, "draw %d K mask %d: density %.10g vs FD %.10g (rel %.2e)", draw, mask, dens, fd, rel);
    }
  }
  r.check(worst <= 1e-4, "%d (Gamma, x, u, K) cases: max relative difference %.2e (tol 1e-4)", n, worst);
}

void criterion3(Report& r) {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> ux(0.3, 6.0);
  for (int m : {2, 3, 5, 10}) {
    const Eigen::MatrixXd g = oracle::random_variogram(m, rng, 0.2, 2.0);
    const HrStructure hr(g);
    Eigen::VectorXd x(m);
    for (int j = 0; j < m; ++j) x[j] = ux(rng);
    const double v = exponent_measure_V(hr, x);

    double hom = 0.0;
    for (double lam : {0.1, 2.5, 40.0}) {
      hom = std::max(hom, std::abs(exponent_measure_V(hr, lam * x) - v / lam) / (v / lam));
    }
    r.check(hom <= 1e-9, "m = %d homogeneity: max rel |V(lx) - V(x)/l| = %.2e (tol 1e-9)", m, hom);

    double marg = 0.0;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd y = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
      y[j] = ux(rng);
      marg = std::max(marg, std::abs(exponent_measure_V(hr, y) - 1.0 / y[j]));
    }
    r.check(marg <= 1e-9, "m = %d margins: max |V(z, inf, ...) - 1/z| = %.2e (tol 1e-9)", m, marg);

    // exponent measure under station permutations, spectral density under anchor changes,
    // censored density under permutations that move the first exceedance (its anchor)
    double perm = 0.0;
    std::vector<int> p(static_cast<std::size_t>(m));
    std::iota(p.begin(), p.end(), 0);
    Eigen::VectorXd w = x / x.sum();
    const double ls = log_spectral_density(hr, w);
    // censor at most two components so the censored density is closed form
    Eigen::VectorXd u = 0.8 * x;
    Eigen::VectorXd xc = x;
    for (int j = 0; j < std::min(m, 2); ++j) xc[j] = 0.5 * u[j];
    const double lc = m > 2 ? log_censored_density(hr, CensoredTerm::make(xc, u)) : 0.0;
    double spec = 0.0;
    double cens = 0.0;
    for (int t = 0; t < 6; ++t) {
      std::shuffle(p.begin(), p.end(), rng);
      const HrStructure hp(permute(g, p));
      perm = std::max(perm, std::abs(exponent_measure_V(hp, permute(x, p)) - v) / v);
      spec = std::max(spec, std::abs(log_spectral_density(hp, permute(w, p)) - ls));
      if (m > 2) cens = std::max(cens, std::abs(log_censored_density(hp, CensoredTerm::make(permute(xc, p), permute(u, p))) - lc));
    }
    for (int k = 0; k < m; ++k) spec = std::max(spec, std::abs(log_spectral_density(hr.with_anchor(k), w) - ls));
    r.check(perm <= 1e-8, "m = %d permutations: max rel change of V = %.2e (tol 1e-8)", m, perm);
    r.check(spec <= 1e-8, "m = %d anchors: max change of log spectral density = %.2e (tol 1e-8)", m, spec);
    if (m > 2) r.check(cens <= 1e-8, "m = %d anchors: max change of log censored density = %.2e (tol 1e-8)", m, cens);
  }
}

void criterion4(Report& r) {
  constexpr int n = 100000;
  std::mt19937_64 rng(404);
  const Eigen::MatrixXd g5 = oracle::random_variogram(5, rng, 0.3, 3.0);
  const Eigen::MatrixXd z = sample_hr(HrStructure(g5), n, 41);
  for (int j = 0; j < 5; ++j) {
    std::vector<double> col(z.col(j).data(), z.col(j).data() + n);
    const double p = oracle::ks_one_sample_p(col, oracle::frechet_cdf);
    r.check(p > 0.01, "margin %d vs standard Frechet: KS p = %.3f", j, p);
  }

  for (double g : {0.25, 1.0, 4.0, 9.0}) {
    Eigen::Matrix2d gm;
    gm << 0.0, g, g, 0.0;
    const Eigen::MatrixXd d = sample_hr(HrStructure(gm), n, 42 + static_cast<std::uint64_t>(g * 4));
    std::vector<double> a(d.col(0).data(), d.col(0).data() + n);
    std::vector<double> b(d.col(1).data(), d.col(1).data() + n);
    const double emp = madogram_theta(a, b);
    const double th = 2.0 * oracle::normal_cdf(std::sqrt(g) / 2.0);
    r.check(std::abs(emp - th) <= 0.02, "Gamma = %g: madogram theta %.4f vs 2 Phi(sqrt(G)/2) = %.4f", g, emp, th);
  }

  // max of k independent copies divided by k has the law of one copy; compare the groupwise
  // maximum and one margin of both samples
  constexpr int k = 5;
  const Eigen::MatrixXd base = sample_hr(HrStructure(g5), n, 43);
  const Eigen::MatrixXd many = sample_hr(HrStructure(g5), n * k, 44);
  std::vector<double> m0(n), mk(n), c0(n), ck(n);
  for (int i = 0; i < n; ++i) {
    m0[static_cast<std::size_t>(i)] = base.row(i).maxCoeff();
    c0[static_cast<std::size_t>(i)] = base(i, 2);
    double mx = 0.0;
    double cx = 0.0;
    for (int t = 0; t < k; ++t) {
      mx = std::max(mx, many.row(i * k + t).maxCoeff());
      cx = std::max(cx, many(i * k + t, 2));
    }
    mk[static_cast<std::size_t>(i)] = mx / k;
    ck[static_cast<std::size_t>(i)] = cx / k;
  }
  const double p1 = oracle::ks_two_sample_p(m0, mk);
  const double p2 = oracle::ks_two_sample_p(c0, ck);
  r.check(p1 > 0.01, "max-stability of the group maximum (k = %d): two-sample KS p = %.3f", k, p1);
  r.check(p2 > 0.01, "max-stability of a margin (k = %d): two-sample KS p = %.3f", k, p2);
}

void check_recovery(Report& r, const char* label, const FitResult& f, const KernelParams& truth) {
  const std::array<double, 6> t = to_array(truth);
  const std::array<double, 6> e = to_array(f.estimate);
  r.check(f.converged, "%s: converged after %d evaluations, loglik %.3f, %d of %d events used", label, f.evaluations,
          f.loglik, f.n_used, f.n_total);
  for (int k = 0; k < 6; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double allowed = k == 1 ? 5.0 : 3.0;  // lambda_euc is weakly identified against alpha
    const double z = (e[i] - t[i]) / f.se[i];
    r.check(std::abs(z) <= allowed && f.se[i] > 0.0, "%s %-10s truth %-10.4g estimate %-10.4g se %-10.3g |z| = %.2f (<= %.0f)",
            label, kParamNames[i], t[i], e[i], f.se[i], std::abs(z), allowed);
  }
}

void criterion5(Report& r) {
  const toy::Basin basin = toy::make_basin();
  const KernelParams truth = toy::truth_params();
  const StationGeometry geo(basin.network, basin.stations);
  const HrStructure hr(geo.gamma_matrix(truth));
  const Eigen::MatrixXd ev = pareto_scale(sample_hr(hr, 500, 5005));

  FitConfig cfg;
  cfg.seed = 55;
  cfg.method = Method::spectral;
  FitResult spec = fit_dependence(cfg, ev, geo, Variant::full);
  bootstrap_se(cfg, ev, geo, spec, 100, 551);
  check_recovery(r, "spectral", spec, truth);

  cfg.method = Method::censored;
  FitResult cen = fit_dependence(cfg, ev, geo, Variant::full);
  bootstrap_se(cfg, ev, geo, cen, 100, 552);
  check_recovery(r, "censored", cen, truth);
}

void criterion6(Report& r) {
  const double a = 20.0;
  const double b = 100.0;
  const double years = 50.0;
  std::uint64_t seed = 6006;
  for (double xi : {-0.1, 0.0, 0.03, 0.15, 0.3}) {
    // threshold with three expected exceedances per year
    const double q = xi == 0.0 ? b - a * std::log(3.0) : b + a * (std::pow(3.0, -xi) - 1.0) / xi;
    const std::vector<double> x = oracle::ppp_exceedances(b, a, xi, q, years, seed++);
    const StationFit f = fit_station(x, q, years);
    const double za = (f.params.scale - a) / f.se[0];
    const double zb = (f.params.loc - b) / f.se[1];
    const double zx = (f.params.shape - xi) / f.se[2];
    r.check(std::abs(za) <= 3.0 && std::abs(zb) <= 3.0 && std::abs(zx) <= 3.0,
            "xi = %5.2f, %3zu exceedances: a %.3f (se %.3f), b %.3f (se %.3f), xi %.4f (se %.4f); z = %+.2f %+.2f %+.2f", xi,
            x.size(), f.params.scale, f.se[0], f.params.loc, f.se[1], f.params.shape, f.se[2], za, zb, zx);
  }
}

void criterion7(Report& r) {
  double worst = 0.0;
  for (double g : {0.05, 0.5, 2.0, 10.0}) {
    Eigen::Matrix2d gm;
    gm << 0.0, g, g, 0.0;
    const HrStructure hr(gm);
    for (double K : {1.0, 8.5}) {
      for (double p1 : {0.9, 0.99}) {
        for (double p2 : {0.95, 0.999}) {
          const double u1 = frechet_level_for_quantile(p1, K);
          const double u2 = frechet_level_for_quantile(p2, K);
          const ExceedanceResult e = joint_exceedance_frechet(hr, Eigen::Vector2d(u1, u2), K);
          const double direct = 1.0 / u1 + 1.0 / u2 - oracle::biv_hr_V(g, u1, u2);
          worst = std::max(worst, std::abs(e.rate - direct));
        }
      }
    }
  }
  r.check(worst <= 1e-8, "k = 2: max |inclusion-exclusion - direct bivariate| = %.2e (tol 1e-8)", worst);

  // Multivariate Pareto events on the toy basin: P(X_j > x) = 1/(m x) for x >= 1, so with
  // K = m events per unit time the per-event p-quantile is exactly the Frechet level u(p).
  const toy::Basin basin = toy::make_basin();
  const HrStructure hr = hr_structure(toy::truth_params(), basin.network, basin.stations);
  const int m = hr.dim();
  constexpr int n = 100000;
  const Eigen::MatrixXd x = sample_pareto_hr(hr, n, 7007);
  const std::vector<std::vector<int>> triples{{0, 1, 2}, {3, 4, 5}, {1, 6, 9}, {2, 7, 8}, {0, 4, 8}};
  for (const std::vector<int>& t : triples) {
    const HrStructure sub = hr.subset(t);
    for (double p : {0.9, 0.95}) {
      const double K = static_cast<double>(m);
      const double u = frechet_level_for_quantile(p, K);
      const ExceedanceResult e = joint_exceedance_frechet(sub, Eigen::Vector3d::Constant(u), K);
      int hits = 0;
      for (int i = 0; i < n; ++i) {
        if (x(i, t[0]) > u && x(i, t[1]) > u && x(i, t[2]) > u) ++hits;
      }
      const double freq = static_cast<double>(hits) / n;
      const double se = oracle::binomial_se(e.per_event, n);
      r.check(std::abs(e.per_event - freq) <= 3.0 * se, "k = 3 stations {%d,%d,%d}, p = %.2f: model %.5f, empirical %.5f, 3 se = %.5f",
              t[0], t[1], t[2], p, e.per_event, freq, 3.0 * se);
    }
  }
}

void criterion8(Report& r) {
  const toy::Basin basin = toy::make_basin();
  const KernelParams truth = toy::truth_params();
  const StationGeometry geo(basin.network, basin.stations);
  const HrStructure hr(geo.gamma_matrix(truth));
  const Eigen::MatrixXd ev = pareto_scale(sample_hr(hr, 500, 8008));

  FitConfig cfg;
  cfg.method = Method::censored;
  cfg.seed = 88;
  std::map<Variant, FitResult> fits;
  for (Variant v : {Variant::euclid, Variant::hydro, Variant::full_iso, Variant::full}) {
    fits.emplace(v, fit_dependence(cfg, ev, geo, v));
  }
  // the isotropic optimum is a point of the full model; refine from it as a second start
  FitResult alt = fit_dependence(cfg, ev, geo, Variant::full, fits.at(Variant::full_iso).estimate);
  if (alt.loglik > fits.at(Variant::full).loglik) fits.at(Variant::full) = alt;

  for (const auto& [v, f] : fits) {
    r.check(f.converged, "%-8s censored loglik %.3f (%d evaluations)", std::string(to_string(v)).c_str(), f.loglik, f.evaluations);
  }
  const double l1 = fits.at(Variant::euclid).loglik;
  const double l2 = fits.at(Variant::hydro).loglik;
  const double l3 = fits.at(Variant::full).loglik;
  const double l4 = fits.at(Variant::full_iso).loglik;
  r.check(l3 > l4, "full (%.3f) > full_iso (%.3f)", l3, l4);
  r.check(l3 > l2, "full (%.3f) > hydro (%.3f)", l3, l2);
  r.check(l2 > l1, "hydro (%.3f) > euclid (%.3f)", l2, l1);
}

void criterion9(Report& r) {
  auto same = [](const EventMatrix& ev, const std::vector<cases::Expected>& want) {
    if (ev.size() != static_cast<int>(want.size())) return false;
    for (std::size_t k = 0; k < want.size(); ++k) {
      const EventWindow& w = ev.windows[k];
      if (w.start != want[k].start || w.length != want[k].length || w.center != want[k].center) return false;
      for (std::size_t j = 0; j < want[k].values.size(); ++j) {
        if (std::abs(ev.raw(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) - want[k].values[j]) > 1e-12) return false;
      }
    }
    return true;
  };
  r.check(same(decluster(cases::single_spike(), {9, 1}), cases::single_spike_expected()),
          "single spike: windows [8,16] around day 12 and [25,29] clipped at the block edge");
  r.check(same(decluster(cases::two_spikes(), {9, 1}), cases::two_spikes_expected()),
          "two spikes: selection order, clipping at a removed window");

  const DailyPanel tied = cases::tied_blocks();
  const std::vector<cases::Expected> want = cases::tied_blocks_expected();
  bool deterministic = true;
  bool placements = true;
  int first = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const EventMatrix a = decluster(tied, {9, seed});
    const EventMatrix b = decluster(tied, {9, seed});
    deterministic = deterministic && a.raw == b.raw && a.size() == 2 && b.windows[0].start == a.windows[0].start;
    const bool ordered = a.size() == 2 && a.windows[0].start == 0;
    first += ordered ? 1 : 0;
    placements = placements && same(a, ordered ? want : std::vector<cases::Expected>{want[1], want[0]});
  }
  r.check(deterministic, "tied spikes: identical output for repeated runs with each of 20 seeds");
  r.check(placements && first > 0 && first < 20, "tied spikes: placements exact, both selection orders occur (%d of 20)", first);
}

struct Criterion {
  const char* title;
  double budget_s;
  std::function<void(Report&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  const std::vector<Criterion> all{
      {"closed-form exponent measure", 60, criterion1},
      {"censored density vs finite differences", 60, criterion2},
      {"homogeneity, margins and anchor invariance", 60, criterion3},
      {"simulation fidelity", 300, criterion4},
      {"dependence estimator recovery", 1800, criterion5},
      {"marginal recovery", 120, criterion6},
      {"risk chain", 300, criterion7},
      {"model ordering of censored likelihoods", 3600, criterion8},
      {"declustering worked examples", 1, criterion9},
  };
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) {
    for (int i = 1; i <= static_cast<int>(all.size()); ++i) which.push_back(i);
  }
  int failed = 0;
  for (int n : which) {
    if (n < 1 || n > static_cast<int>(all.size())) {
      std::fprintf(stderr, "no criterion %d\n", n);
      return 2;
    }
    const Criterion& c = all[static_cast<std::size_t>(n - 1)];
    std::printf("criterion %d: %s\n", n, c.title);
    Report rep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(rep);
    } catch (const std::exception& e) {
      rep.check(false, "exception: %s", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.check(secs <= c.budget_s, "runtime %.1f s (budget %.0f s)", secs, c.budget_s);
    std::printf("%s criterion %d: %s (%d checks, %d failed, %.1f s)\n", rep.ok() ? "PASS" : "FAIL", n, c.title, rep.checks(),
                rep.failed(), secs);
    if (!rep.ok()) ++failed;
  }
  return failed;
}
