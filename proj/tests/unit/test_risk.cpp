#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "rivex/errors.hpp"
#include "rivex/hr_core.hpp"
#include "rivex/kernels.hpp"
#include "rivex/margins.hpp"
#include "rivex/risk.hpp"
#include "toy_basin.hpp"

using namespace rivex;

namespace {

HrStructure biv(double g) {
  Eigen::MatrixXd m(2, 2);
  m << 0.0, g, g, 0.0;
  return HrStructure(m);
}

}  // namespace

TEST_SUITE("risk") {

TEST_CASE("single station reduces to the marginal tail") {
  const HrStructure one(Eigen::MatrixXd::Zero(1, 1));
  const double K = 8.5;
  for (double p : {0.9, 0.95, 0.99}) {
    const double u = frechet_level_for_quantile(p, K);
    const ExceedanceResult r = joint_exceedance_frechet(one, Eigen::VectorXd::Constant(1, u), K);
    CHECK(r.per_event == doctest::Approx(1.0 - p).epsilon(1e-12));
  }
  GevParams g;
  g.loc = 100.0;
  g.scale = 20.0;
  g.shape = 0.1;
  const std::vector<GevParams> m{g};
  const Eigen::VectorXd lev = Eigen::VectorXd::Constant(1, 180.0);
  const ExceedanceResult r = joint_exceedance(one, m, {}, lev, 8.0);
  CHECK(r.rate == doctest::Approx(tail_prob(g, 180.0, 1.0)).epsilon(1e-12));
  const std::vector<double> thr{200.0};
  CHECK_THROWS_AS(joint_exceedance(one, m, thr, lev, 8.0), ModelRangeError);
}

TEST_CASE("bivariate inclusion-exclusion") {
  for (double g : {0.2, 1.0, 5.0}) {
    const Eigen::Vector2d u(3.0, 7.0);
    const ExceedanceResult r = joint_exceedance_frechet(biv(g), u, 1.0);
    const double direct = 1.0 / u[0] + 1.0 / u[1] - oracle::biv_hr_V(g, u[0], u[1]);
    CHECK(std::abs(r.rate - direct) < 1e-12);
    // mass of the density over (u1, inf) x (u2, inf)
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const HrStructure hr = biv(g);
    const double mass = GK::integrate(
        [&](double t) {
          const double a = u[0] / t;
          return GK::integrate(
                     [&](double s) {
                       const double b = u[1] / s;
                       return censored_density(hr, CensoredTerm::make(Eigen::Vector2d(a, b), u * 0.5)) * u[1] / (s * s);
                     },
                     0.0, 1.0, 15, 1e-12) *
                 u[0] / (t * t);
        },
        0.0, 1.0, 15, 1e-12);
    CHECK(r.rate == doctest::Approx(mass).epsilon(1e-7));
  }
}

TEST_CASE("bounds and monotonicity") {
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> un(1.0, 20.0);
  for (int m : {2, 3, 5}) {
    const HrStructure hr(oracle::random_variogram(m, rng));
    Eigen::VectorXd u(m);
    for (int j = 0; j < m; ++j) u[j] = un(rng);
    const ExceedanceResult r = joint_exceedance_frechet(hr, u, 1.0);
    CHECK(r.rate >= -r.error);
    CHECK(r.rate <= u.cwiseInverse().minCoeff() + r.error);
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd w = u;
      w[j] *= 1.7;
      CHECK(joint_exceedance_frechet(hr, w, 1.0).rate <= r.rate + r.error + 1e-12);
    }
  }
}

TEST_CASE("Monte Carlo path agrees with inclusion-exclusion") {
  std::mt19937_64 rng(41);
  for (int k : {2, 3, 4}) {
    const HrStructure hr(oracle::random_variogram(k, rng, 0.2, 1.0));
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(k, 4.0);
    RiskOptions mc;
    mc.exact_max = 0;
    mc.mc_samples = 400000;
    const ExceedanceResult a = joint_exceedance_frechet(hr, u, 1.0);
    const ExceedanceResult b = joint_exceedance_frechet(hr, u, 1.0, mc);
    CHECK(b.method == "monte-carlo");
    CHECK(std::abs(a.rate - b.rate) <= b.error);  // error is three standard errors
  }
}

TEST_CASE("groupwise maxima") {
  const std::vector<double> probs{0.1, 0.5, 0.9, 0.99};
  const GroupMaxResult one = group_max_quantiles(HrStructure(Eigen::MatrixXd::Zero(1, 1)), probs);
  CHECK(one.theta == doctest::Approx(1.0));
  for (const GroupMaxRow& r : one.rows) CHECK(r.model == doctest::Approx(-std::log(-std::log(r.p))));

  const GroupMaxResult same = group_max_quantiles(biv(0.0), probs);
  CHECK(same.theta == doctest::Approx(1.0));

  Eigen::Matrix3d g;
  g << 0.0, 1.0, 2.0, 1.0, 0.0, 1.5, 2.0, 1.5, 0.0;
  const HrStructure h3(g);
  const GroupMaxResult r3 = group_max_quantiles(h3, probs);
  CHECK(std::abs(r3.theta - exponent_measure_V(h3, Eigen::Vector3d::Ones())) < 1e-8);
  for (const GroupMaxRow& r : r3.rows) {
    CHECK(r.complete <= r.model);
    CHECK(r.model <= r.independent);
    CHECK(r.independent == doctest::Approx(std::log(3.0) + r.gumbel));
  }
}

TEST_CASE("network return map") {
  const toy::Basin basin = toy::make_basin();
  RegionalModel model;
  RegionFit r;
  r.spec.name = "all";
  r.spec.scale_covariates = {Covariate::intercept, Covariate::area};
  r.spec.loc_covariates = {Covariate::intercept, Covariate::area};
  r.alpha = Eigen::Vector2d(0.5, 0.4);
  r.beta = Eigen::Vector2d(2.0, 0.5);
  r.shape = 0.1;
  model.regions.push_back(r);
  for (const Segment& s : basin.network.segments()) model.segment_region[s.id] = "all";

  int skipped = -1;
  const std::vector<ReturnMapRow> rows = network_return_map(model, basin.network, basin.grid, basin.drainage, 100.0, 5.0, &skipped);
  CHECK(skipped >= 0);
  CHECK(rows.size() > 50);
  const std::vector<ReturnMapRow> rows10 = network_return_map(model, basin.network, basin.grid, basin.drainage, 10.0, 5.0);
  REQUIRE(rows10.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].level > rows10[i].level);

  // at a gauge location the map equals the station's own return level
  const Station& st = basin.stations[4];
  REQUIRE(st.location.offset == 10.0);
  for (const ReturnMapRow& row : rows) {
    if (row.segment == st.location.segment_id && std::abs(row.offset - st.location.offset) < 1e-9) {
      CHECK(row.level == doctest::Approx(return_level(model.predict("all", st.summary), 100.0)).epsilon(1e-12));
    }
  }
  // spot value: log a = 0.5 + 0.4 log A, log b = 2 + 0.5 log A
  const double a = std::exp(0.5 + 0.4 * std::log(st.summary.area));
  const double b = std::exp(2.0 + 0.5 * std::log(st.summary.area));
  const double y = -std::log(0.99);
  CHECK(return_level(model.predict("all", st.summary), 100.0) == doctest::Approx(b + a * (std::pow(y, -0.1) - 1.0) / 0.1));
}

}  // TEST_SUITE
