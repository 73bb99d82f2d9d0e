#include "rivex/simulate.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "rivex/errors.hpp"
#include "rivex/parallel.hpp"

namespace rivex {

Eigen::MatrixXd gaussian_factor(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  const double tol = 1e-12 * scale;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd d = a.diagonal();
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  Eigen::Index rank = 0;
  for (; rank < n; ++rank) {
    Eigen::Index piv = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!used[static_cast<std::size_t>(i)] && d[i] > best) {
        best = d[i];
        piv = i;
      }
    }
    if (best <= tol) {
      if (best < -1e-8 * scale) {
        Eigen::LLT<Eigen::MatrixXd> llt(a + 1e-10 * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() != Eigen::Success) throw DomainError("gaussian_factor: covariance is not positive semi-definite");
        return llt.matrixL();
      }
      break;
    }
    used[static_cast<std::size_t>(piv)] = 1;
    const double root = std::sqrt(best);
    l(piv, rank) = root;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      double s = a(i, piv);
      for (Eigen::Index k = 0; k < rank; ++k) s -= l(i, k) * l(piv, k);
      l(i, rank) = s / root;
      d[i] -= l(i, rank) * l(i, rank);
    }
  }
  return l.leftCols(rank);
}

namespace {

struct AnchorFactor {
  Eigen::MatrixXd factor;      // m x r, row of the anchor is zero
  Eigen::VectorXd half_gamma;  // Gamma(., k)/2
};

std::vector<AnchorFactor> anchor_factors(const HrStructure& hr) {
  const int m = hr.dim();
  std::vector<AnchorFactor> out(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    AnchorFactor& af = out[static_cast<std::size_t>(k)];
    af.half_gamma = 0.5 * hr.gamma().col(k);
    if (m == 1) {
      af.factor = Eigen::MatrixXd::Zero(1, 0);
      continue;
    }
    const Eigen::MatrixXd f = gaussian_factor(hr.anchored_covariance(k));
    af.factor = Eigen::MatrixXd::Zero(m, f.cols());
    const std::vector<int> idx = hr.others(k);
    for (std::size_t r = 0; r < idx.size(); ++r) af.factor.row(idx[r]) = f.row(static_cast<Eigen::Index>(r));
  }
  return out;
}

// Spectral vector exp(W - Gamma(., k)/2) normalized at station k.
void spectral_vector(const AnchorFactor& af, std::mt19937_64& rng, Eigen::VectorXd& z, Eigen::VectorXd& y) {
  std::normal_distribution<double> norm;
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = norm(rng);
  y.noalias() = af.factor * z;
  y = (y - af.half_gamma).array().exp().matrix();
}

}  // namespace

Eigen::MatrixXd sample_hr(const HrStructure& hr, int n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample_hr: sample count must be positive");
  const int m = hr.dim();
  const std::vector<AnchorFactor> af = anchor_factors(hr);
  Eigen::MatrixXd out(n, m);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    std::mt19937_64 rng(derive_seed(seed, row));
    std::exponential_distribution<double> expo(1.0);
    Eigen::VectorXd zmax = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd y(m);
    for (int k = 0; k < m; ++k) {
      const AnchorFactor& f = af[static_cast<std::size_t>(k)];
      Eigen::VectorXd z(f.factor.cols());
      double e = expo(rng);
      double zeta = 1.0 / e;
      while (zeta > zmax[k]) {
        spectral_vector(f, rng, z, y);
        y[k] = 1.0;
        bool accept = true;
        for (int j = 0; j < k && accept; ++j) accept = zeta * y[j] <= zmax[j];
        if (accept) zmax = zmax.cwiseMax(zeta * y);
        e += expo(rng);
        zeta = 1.0 / e;
      }
    }
    out.row(static_cast<Eigen::Index>(row)) = zmax.transpose();
  });
  return out;
}

Eigen::MatrixXd sample_spectral_angles(const HrStructure& hr, int n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample count must be positive");
  const int m = hr.dim();
  const std::vector<AnchorFactor> af = anchor_factors(hr);
  Eigen::MatrixXd out(n, m);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    std::mt19937_64 rng(derive_seed(seed, row));
    std::uniform_int_distribution<int> pick(0, m - 1);
    const int k = pick(rng);
    const AnchorFactor& f = af[static_cast<std::size_t>(k)];
    Eigen::VectorXd z(f.factor.cols());
    Eigen::VectorXd y(m);
    spectral_vector(f, rng, z, y);
    y[k] = 1.0;
    out.row(static_cast<Eigen::Index>(row)) = (y / y.sum()).transpose();
  });
  return out;
}

Eigen::MatrixXd sample_pareto_hr(const HrStructure& hr, int n, std::uint64_t seed) {
  Eigen::MatrixXd theta = sample_spectral_angles(hr, n, seed);
  const std::uint64_t radial_seed = derive_seed(seed, 0xa11ce5eedULL);
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    std::mt19937_64 rng(derive_seed(radial_seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double r = 1.0 / (1.0 - unif(rng));
    theta.row(i) *= r;
  }
  return theta;
}

Eigen::MatrixXd to_gev_margins(const Eigen::MatrixXd& draws, std::span<const double> xi, std::span<const double> scale,
                               std::span<const double> loc) {
  const auto m = static_cast<std::size_t>(draws.cols());
  if (xi.size() != m) throw InputError("to_gev_margins: need one shape per column");
  if (!scale.empty() && scale.size() != m) throw InputError("to_gev_margins: need one scale per column");
  if (!loc.empty() && loc.size() != m) throw InputError("to_gev_margins: need one location per column");
  Eigen::MatrixXd out(draws.rows(), draws.cols());
  for (std::size_t j = 0; j < m; ++j) {
    const double s = xi[j];
    if (!std::isfinite(s)) throw InputError("to_gev_margins: shape must be finite");
    const double a = scale.empty() ? 1.0 : scale[j];
    const double b = loc.empty() ? 0.0 : loc[j];
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
      const double eta = draws(i, static_cast<Eigen::Index>(j));
      const double v = s == 0.0 ? std::log(eta) : std::expm1(s * std::log(eta)) / s;
      out(i, static_cast<Eigen::Index>(j)) = a * v + b;
    }
  }
  return out;
}

}  // namespace rivex
