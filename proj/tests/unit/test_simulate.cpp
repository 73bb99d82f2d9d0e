#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rivex/hr_core.hpp"
#include "rivex/parallel.hpp"
#include "rivex/simulate.hpp"

using namespace rivex;

namespace {

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
  return std::vector<double>(m.col(j).data(), m.col(j).data() + m.rows());
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("univariate draws are standard Frechet") {
  const Eigen::MatrixXd d = sample_hr(HrStructure(Eigen::MatrixXd::Zero(1, 1)), 100000, 1);
  CHECK(oracle::ks_one_sample_p(column(d, 0), oracle::frechet_cdf) > 0.01);
}

TEST_CASE("coincident stations give identical columns") {
  Eigen::Matrix3d g;
  g << 0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0, 0.0;
  const Eigen::MatrixXd d = sample_hr(HrStructure(g), 2000, 4);
  CHECK((d.col(0) - d.col(1)).cwiseAbs().maxCoeff() <= 1e-9 * d.col(0).cwiseAbs().maxCoeff());
}

TEST_CASE("joint distribution matches the exponent measure") {
  std::mt19937_64 rng(19);
  const HrStructure hr(oracle::random_variogram(3, rng));
  const int n = 100000;
  const Eigen::MatrixXd d = sample_hr(hr, n, 8);
  for (double u : {2.0, 5.0, 10.0}) {
    int below = 0;
    for (int i = 0; i < n; ++i) below += d.row(i).maxCoeff() <= u ? 1 : 0;
    const double p = std::exp(-exponent_measure_V(hr, Eigen::Vector3d::Constant(u)));
    CHECK(std::abs(below / static_cast<double>(n) - p) < 3.0 * oracle::binomial_se(p, n));
  }
}

TEST_CASE("output does not depend on the thread count") {
  std::mt19937_64 rng(23);
  const HrStructure hr(oracle::random_variogram(4, rng));
  set_thread_count(1);
  const Eigen::MatrixXd a = sample_hr(hr, 500, 77);
  set_thread_count(4);
  const Eigen::MatrixXd b = sample_hr(hr, 500, 77);
  set_thread_count(0);
  CHECK(a == b);
  CHECK(sample_hr(hr, 500, 78) != a);
}

TEST_CASE("Pareto draws") {
  std::mt19937_64 rng(24);
  const HrStructure hr(oracle::random_variogram(3, rng));
  const int n = 100000;
  const Eigen::MatrixXd x = sample_pareto_hr(hr, n, 3);
  CHECK(x.rowwise().sum().minCoeff() > 1.0);
  // P(X_1 > 2) = Lambda({x_1 > 2})/m = 1/(2m)
  int hit = 0;
  for (int i = 0; i < n; ++i) hit += x(i, 0) > 2.0 ? 1 : 0;
  CHECK(std::abs(hit / static_cast<double>(n) - 1.0 / 6.0) < 3.0 * oracle::binomial_se(1.0 / 6.0, n));
  const Eigen::MatrixXd w = sample_spectral_angles(hr, 1000, 3);
  CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("GEV margins") {
  Eigen::MatrixXd eta(1, 3);
  eta << 4.0, 4.0, 4.0;
  const std::vector<double> xi{1.0, 0.0, 0.5};
  const Eigen::MatrixXd g = to_gev_margins(eta, xi);
  CHECK(g(0, 0) == doctest::Approx(3.0));
  CHECK(g(0, 1) == doctest::Approx(std::log(4.0)));
  CHECK(g(0, 2) == doctest::Approx(2.0));
  const std::vector<double> a{2.0, 2.0, 2.0};
  const std::vector<double> b{1.0, 1.0, 1.0};
  CHECK(to_gev_margins(eta, xi, a, b)(0, 2) == doctest::Approx(5.0));

  const Eigen::MatrixXd d = sample_hr(HrStructure(Eigen::MatrixXd::Zero(1, 1)), 100000, 5);
  const std::vector<double> x0{0.0};
  const Eigen::MatrixXd gum = to_gev_margins(d, x0);
  CHECK(oracle::ks_one_sample_p(column(gum, 0), [](double v) { return oracle::gev_cdf(v, 0.0, 1.0, 0.0); }) > 0.01);
}

}  // TEST_SUITE
