#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rivex/errors.hpp"
#include "rivex/margins.hpp"

using namespace rivex;

namespace {

GevParams gev(double loc, double scale, double shape) {
  GevParams g;
  g.loc = loc;
  g.scale = scale;
  g.shape = shape;
  return g;
}

}  // namespace

TEST_SUITE("margins") {

TEST_CASE("Frechet transform") {
  CHECK(frechet_transform(gev(0, 1, 1.0), 0.0, true) == doctest::Approx(1.0));
  CHECK(frechet_transform(gev(0, 1, 0.0), std::log(2.0), true) == doctest::Approx(2.0));
  CHECK(frechet_transform(gev(0, 1, 0.5), 2.0, true) == doctest::Approx(4.0));
  CHECK(frechet_transform(gev(10, 2, 0.5), 14.0) == doctest::Approx(4.0));
  // tiny shapes agree with the Gumbel limit
  CHECK(frechet_transform(gev(0, 1, 1e-9), 0.7, true) == doctest::Approx(std::exp(0.7)).epsilon(1e-8));
  bool below = false;
  CHECK(frechet_transform(gev(0, 1, 0.5), -3.0, true, &below) == 0.0);
  CHECK(below);
}

TEST_CASE("Frechet transform of GEV draws is standard Frechet") {
  for (double xi : {-0.2, 0.0, 0.3}) {
    const GevParams g = gev(5.0, 2.0, xi);
    std::vector<double> z;
    for (double x : oracle::gev_draws(100000, 5.0, 2.0, xi, 99)) z.push_back(frechet_transform(g, x));
    CHECK(oracle::ks_one_sample_p(z, oracle::frechet_cdf) > 0.01);
  }
}

TEST_CASE("tail probabilities") {
  const GevParams g = gev(3.0, 2.0, 0.0);
  CHECK(tail_prob(g, 5.0, 4.0) == doctest::Approx(std::exp(-1.0) / 4.0));
  CHECK(tail_prob(gev(3.0, 2.0, 0.2), 3.0, 8.0) == doctest::Approx(1.0 / 8.0));
  CHECK(tail_prob(gev(0.0, 1.0, -0.5), 2.0, 1.0) == 0.0);  // upper endpoint is 2
  CHECK(tail_prob(gev(0.0, 1.0, -0.5), 1.999999, 1.0) > 0.0);
}

TEST_CASE("return levels") {
  const double t_unit = std::numbers::e / (std::numbers::e - 1.0);
  for (double xi : {-0.2, 0.0, 0.3}) CHECK(return_level(gev(7.0, 2.0, xi), t_unit) == doctest::Approx(7.0));
  CHECK(return_level(gev(1.0, 2.0, 0.0), 100.0) == doctest::Approx(1.0 + 2.0 * 4.60015).epsilon(1e-6));
  double last = -1e300;
  for (double T : {2.0, 5.0, 10.0, 100.0, 1000.0}) {
    const double z = return_level(gev(1.0, 2.0, 0.15), T);
    CHECK(z > last);
    last = z;
    // chain closes with the annual tail probability
    CHECK(1.0 - oracle::gev_cdf(z, 1.0, 2.0, 0.15) == doctest::Approx(1.0 / T).epsilon(1e-10));
  }
  CHECK_THROWS_AS(return_level(gev(1, 1, 0), 1.0), InputError);
}

TEST_CASE("point-process likelihood") {
  const GevParams g = gev(1.0, 2.0, 0.2);
  const double q = 3.0;
  CHECK(ppp_nll(g, {}, q, 50.0) == doctest::Approx(50.0 * std::pow(1.0 + 0.2 * (q - 1.0) / 2.0, -5.0)));
  const std::vector<double> x{3.5, 4.0, 9.0};
  double expect = 50.0 * std::pow(1.2, -5.0);
  for (double v : x) expect += std::log(2.0) + 6.0 * std::log(1.0 + 0.1 * (v - 1.0));
  CHECK(ppp_nll(g, x, q, 50.0) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(std::isinf(ppp_nll(gev(1.0, 2.0, -0.5), x, q, 50.0)));  // 9 above the upper endpoint 5
  // continuity through xi = 0
  CHECK(ppp_nll(gev(1.0, 2.0, 1e-8), x, q, 50.0) == doctest::Approx(ppp_nll(gev(1.0, 2.0, 0.0), x, q, 50.0)).epsilon(1e-7));
}

TEST_CASE("likelihood gradient matches finite differences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> x = oracle::ppp_exceedances(0.0, 1.0, 0.1, 1.0, 50.0, 8);
  for (int r = 0; r < 10; ++r) {
    const GevParams g = gev(-0.3 + 0.6 * u(rng), 0.7 + 0.6 * u(rng), -0.1 + 0.3 * u(rng));
    const Eigen::Vector3d an = ppp_nll_gradient(g, x, 1.0, 50.0);
    auto f = [&](const Eigen::VectorXd& v) { return ppp_nll(gev(v[1], v[0], v[2]), x, 1.0, 50.0); };
    const Eigen::VectorXd fd = oracle::gradient(f, Eigen::Vector3d(g.scale, g.loc, g.shape), 1e-4);
    for (int k = 0; k < 3; ++k) CHECK(an[k] == doctest::Approx(fd[k]).epsilon(1e-5));
  }
}

TEST_CASE("station fit recovers simulated parameters") {
  const std::vector<double> x = oracle::ppp_exceedances(0.0, 1.0, 0.1, 1.0, 50.0, 2024);
  const StationFit fit = fit_station(x, 1.0, 50.0);
  const Eigen::Vector3d se = bootstrap_station_se(x, 1.0, 50.0, 60, 5);
  CHECK(std::abs(fit.params.scale - 1.0) < 3.0 * se[0]);
  CHECK(std::abs(fit.params.loc - 0.0) < 3.0 * se[1]);
  CHECK(std::abs(fit.params.shape - 0.1) < 3.0 * se[2]);
  CHECK(se.allFinite());
  CHECK(fit.se.allFinite());
  CHECK(fit.n_exceed == static_cast<int>(x.size()));
}

TEST_CASE("station fit errors") {
  CHECK_THROWS_AS(fit_station(std::vector<double>{2.0, 2.0, 2.0, 2.0}, 1.0, 50.0), EstimationError);
  CHECK_THROWS_AS(fit_station(std::vector<double>{2.0, 0.5, 3.0}, 1.0, 50.0), InputError);
}

TEST_CASE("fixed-shape fit and likelihood ratio") {
  // Gumbel data: the free shape does not improve significantly
  const std::vector<double> x = oracle::ppp_exceedances(0.0, 1.0, 0.0, 1.5, 50.0, 77);
  const StationFit free_fit = fit_station(x, 1.5, 50.0);
  MarginFitOptions opt;
  opt.fixed_shape = 0.0;
  const StationFit gumbel = fit_station(x, 1.5, 50.0, opt);
  CHECK(gumbel.shape_fixed);
  CHECK(gumbel.params.shape == 0.0);
  CHECK(gumbel.nll >= free_fit.nll - 1e-8);
  const LrTest lr = likelihood_ratio_test(gumbel.nll, free_fit.nll, 1);
  CHECK(lr.statistic == doctest::Approx(2.0 * (gumbel.nll - free_fit.nll)));
  CHECK(lr.p_value > 0.01);

  // heavy-tailed data (about 130 exceedances): the Gumbel restriction is rejected
  const std::vector<double> h = oracle::ppp_exceedances(0.0, 1.0, 0.5, 1.5, 400.0, 78);
  const LrTest lr2 = likelihood_ratio_test(fit_station(h, 1.5, 400.0, opt).nll, fit_station(h, 1.5, 400.0).nll, 1);
  CHECK(lr2.p_value < 0.01);
}

TEST_CASE("regional model") {
  // one intercept-only region with two stations of identical law equals the pooled station fit
  const std::vector<double> a = oracle::ppp_exceedances(10.0, 2.0, 0.1, 12.0, 50.0, 1);
  const std::vector<double> b = oracle::ppp_exceedances(10.0, 2.0, 0.1, 12.0, 50.0, 2);
  CatchmentSummary s;
  s.area = 100.0;
  s.mean_altitude = 500.0;
  s.mean_slope = 0.1;
  s.centroid_latitude = 47.0;
  std::vector<MarginStation> st{{"A", a, 12.0, 50.0, s, "R"}, {"B", b, 12.0, 50.0, s, "R"}};
  RegionSpec spec;
  spec.name = "R";
  const RegionalModel model = fit_regional(st, {spec});
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const StationFit pf = fit_station(pooled, 12.0, 100.0);
  const GevParams pr = model.predict("R", s);
  CHECK(pr.scale == doctest::Approx(pf.params.scale).epsilon(1e-6));
  CHECK(pr.loc == doctest::Approx(pf.params.loc).epsilon(1e-6));
  CHECK(pr.shape == doctest::Approx(pf.params.shape).epsilon(1e-5));

  // rank deficiency names the problem
  RegionSpec bad;
  bad.name = "R";
  bad.scale_covariates = {Covariate::intercept, Covariate::area};
  CHECK_THROWS_AS(fit_regional(st, {bad}), InputError);
}

TEST_CASE("regional coefficients are recovered") {
  // log a = 0.2 + 0.3 log area, log b = 1.0 + 0.5 log area, xi = 0.15
  std::vector<MarginStation> st;
  const std::vector<double> areas{20, 45, 80, 150, 300, 600, 1200, 2500};
  for (std::size_t i = 0; i < areas.size(); ++i) {
    CatchmentSummary s;
    s.area = areas[i];
    s.mean_altitude = 600.0;
    s.mean_slope = 0.1;
    s.centroid_latitude = 47.0;
    const double a = std::exp(0.2 + 0.3 * std::log(areas[i]));
    const double b = std::exp(1.0 + 0.5 * std::log(areas[i]));
    const double q = b + a;
    st.push_back({"S" + std::to_string(i), oracle::ppp_exceedances(b, a, 0.15, q, 50.0, 300 + i), q, 50.0, s, "R"});
  }
  RegionSpec spec;
  spec.name = "R";
  spec.scale_covariates = {Covariate::intercept, Covariate::area};
  spec.loc_covariates = {Covariate::intercept, Covariate::area};
  const RegionalModel model = fit_regional(st, {spec});
  const RegionFit& r = model.region("R");
  REQUIRE(r.se.size() == 5);
  CHECK(std::abs(r.alpha[0] - 0.2) < 3.0 * r.se[0]);
  CHECK(std::abs(r.alpha[1] - 0.3) < 3.0 * r.se[1]);
  CHECK(std::abs(r.beta[0] - 1.0) < 3.0 * r.se[2]);
  CHECK(std::abs(r.beta[1] - 0.5) < 3.0 * r.se[3]);
  CHECK(std::abs(r.shape - 0.15) < 3.0 * r.se[4]);
}

}  // TEST_SUITE
