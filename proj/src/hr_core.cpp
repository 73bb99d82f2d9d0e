#include "rivex/hr_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rivex/errors.hpp"
#include "rivex/normal.hpp"

namespace rivex {

namespace {

Eigen::MatrixXd anchored(const Eigen::MatrixXd& g, int k, const std::vector<int>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const int a = idx[static_cast<std::size_t>(i)];
      const int b = idx[static_cast<std::size_t>(j)];
      const double v = 0.5 * (g(a, k) + g(b, k) - g(a, b));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

}  // namespace

HrStructure::HrStructure(Eigen::MatrixXd gamma, int anchor) : gamma_(std::move(gamma)), anchor_(anchor) {
  const Eigen::Index m = gamma_.rows();
  if (m < 1 || gamma_.cols() != m) throw InputError("Gamma must be a nonempty square matrix");
  if (anchor < 0 || anchor >= m) throw InputError("anchor index " + std::to_string(anchor) + " out of range");
  double scale = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = gamma_(i, j);
      if (!std::isfinite(v)) throw KernelValidityError("Gamma contains a non-finite entry");
      scale = std::max(scale, std::abs(v));
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(gamma_(i, i)) > 1e-12 * std::max(scale, 1.0)) {
      throw KernelValidityError("Gamma must vanish on the diagonal");
    }
    gamma_(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(gamma_(i, j) - gamma_(j, i)) > 1e-10 * std::max(scale, 1.0)) {
        throw KernelValidityError("Gamma must be symmetric");
      }
      if (gamma_(i, j) < 0.0) throw KernelValidityError("Gamma must be nonnegative");
      gamma_(j, i) = gamma_(i, j);
    }
  }
  if (m == 1) return;
  sigma_ = anchored(gamma_, anchor_, others(anchor_));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_);
  const double trace = sigma_.trace();
  const double lo = eig.eigenvalues().minCoeff();
  if (lo < -1e-8 * std::max(trace, 1e-300)) {
    throw KernelValidityError("anchored covariance is not positive semi-definite (smallest eigenvalue " +
                              std::to_string(lo) + ", trace " + std::to_string(trace) + ")");
  }
  if (lo < 0.0) {
    const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
    sigma_ = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
  }
}

std::vector<int> HrStructure::others(int k) const {
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(std::max(dim() - 1, 0)));
  for (int j = 0; j < dim(); ++j) {
    if (j != k) idx.push_back(j);
  }
  return idx;
}

Eigen::MatrixXd HrStructure::anchored_covariance(int k) const {
  if (k < 0 || k >= dim()) throw InputError("anchor index out of range");
  return anchored(gamma_, k, others(k));
}

HrStructure HrStructure::with_anchor(int k) const { return HrStructure(gamma_, k); }

HrStructure HrStructure::subset(const std::vector<int>& idx) const {
  if (idx.empty()) throw InputError("empty station subset");
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = gamma_(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
  }
  return HrStructure(std::move(g), 0);
}

VResult exponent_measure(const HrStructure& hr, const Eigen::VectorXd& x, const MvnOptions& opt) {
  const int m = hr.dim();
  if (x.size() != m) {
    throw InputError("exponent measure: point has " + std::to_string(x.size()) + " coordinates, structure has " +
                     std::to_string(m));
  }
  const Eigen::MatrixXd& g = hr.gamma();
  // Finite coordinates, with coincident stations collapsed onto the smallest value.
  std::vector<int> keep;
  std::vector<double> val;
  for (int i = 0; i < m; ++i) {
    const double xi = x[i];
    if (std::isnan(xi) || !(xi > 0.0)) throw InputError("exponent measure: coordinates must be positive");
    if (std::isinf(xi)) continue;
    bool merged = false;
    for (std::size_t r = 0; r < keep.size(); ++r) {
      if (g(i, keep[r]) <= 1e-12) {
        val[r] = std::min(val[r], xi);
        merged = true;
        break;
      }
    }
    if (!merged) {
      keep.push_back(i);
      val.push_back(xi);
    }
  }
  const auto n = static_cast<int>(keep.size());
  if (n == 0) return {0.0, 0.0, true};
  if (n == 1) return {1.0 / val[0], 0.0, true};

  VResult out;
  Eigen::MatrixXd cov(n - 1, n - 1);
  Eigen::VectorXd upper(n - 1);
  for (int k = 0; k < n; ++k) {
    const int sk = keep[static_cast<std::size_t>(k)];
    int r = 0;
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      const int sj = keep[static_cast<std::size_t>(j)];
      upper[r] = std::log(val[static_cast<std::size_t>(j)] / val[static_cast<std::size_t>(k)]) + 0.5 * g(sj, sk);
      int c = 0;
      for (int l = 0; l < n; ++l) {
        if (l == k) continue;
        const int sl = keep[static_cast<std::size_t>(l)];
        cov(r, c) = 0.5 * (g(sj, sk) + g(sl, sk) - g(sj, sl));
        ++c;
      }
      ++r;
    }
    const MvnResult p = mvn_cdf(cov, upper, opt);
    const double w = 1.0 / val[static_cast<std::size_t>(k)];
    out.value += w * p.value;
    out.error += w * p.error;
    out.converged = out.converged && p.converged;
  }
  return out;
}

double exponent_measure_V(const HrStructure& hr, const Eigen::VectorXd& x, const MvnOptions& opt) {
  return exponent_measure(hr, x, opt).value;
}

double log_spectral_density(const HrStructure& hr, const Eigen::VectorXd& omega) {
  const int m = hr.dim();
  if (m < 2) throw DomainError("spectral density needs at least two stations");
  if (omega.size() != m) throw InputError("spectral density: omega has the wrong length");
  for (int j = 0; j < m; ++j) {
    if (!(omega[j] > 0.0) || !std::isfinite(omega[j])) {
      throw DomainError("spectral density is only defined in the interior of the simplex");
    }
  }
  const int a = hr.anchor();
  const std::vector<int> idx = hr.others(a);
  const Eigen::MatrixXd sigma = hr.anchored_covariance(a);
  Eigen::VectorXd wt(m - 1);
  double log_pref = 2.0 * std::log(omega[a]);
  for (int r = 0; r < m - 1; ++r) {
    const int j = idx[static_cast<std::size_t>(r)];
    wt[r] = std::log(omega[j] / omega[a]) + 0.5 * hr.gamma()(j, a);
    log_pref += std::log(omega[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw DomainError("spectral density: Sigma is singular");
  double log_det = 0.0;
  const Eigen::MatrixXd l = llt.matrixL();
  for (int i = 0; i < m - 1; ++i) {
    if (!(l(i, i) > 0.0)) throw DomainError("spectral density: Sigma is singular");
    log_det += 2.0 * std::log(l(i, i));
  }
  const Eigen::VectorXd z = llt.matrixL().solve(wt);
  return -log_pref - (m - 1) * kLogSqrt2Pi - 0.5 * log_det - 0.5 * z.squaredNorm();
}

double spectral_density(const HrStructure& hr, const Eigen::VectorXd& omega) {
  return std::exp(log_spectral_density(hr, omega));
}

CensoredTerm CensoredTerm::make(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (x.size() != u.size()) throw InputError("censored term: event and threshold lengths differ");
  CensoredTerm t{x, u, {}};
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x[j] > 0.0) || !(u[j] > 0.0)) throw InputError("censored term: values must be positive");
    if (x[j] > u[j]) t.exceed.push_back(static_cast<int>(j));
  }
  return t;
}

CensoredPattern::CensoredPattern(const HrStructure& hr, const std::vector<int>& exceed, const Eigen::VectorXd& u) {
  const int m = hr.dim();
  if (exceed.empty()) throw InputError("censored density needs at least one exceedance");
  if (u.size() != m) throw InputError("censored density: threshold vector has the wrong length");
  std::vector<char> in_k(static_cast<std::size_t>(m), 0);
  for (int j : exceed) {
    if (j < 0 || j >= m) throw InputError("censored density: exceedance index out of range");
    in_k[static_cast<std::size_t>(j)] = 1;
  }
  anchor_ = *std::min_element(exceed.begin(), exceed.end());
  for (int j = 0; j < m; ++j) {
    if (j == anchor_) continue;
    (in_k[static_cast<std::size_t>(j)] ? rest_ : censored_).push_back(j);
  }
  const Eigen::MatrixXd& g = hr.gamma();
  const auto nr = static_cast<Eigen::Index>(rest_.size());
  const auto nc = static_cast<Eigen::Index>(censored_.size());
  auto sig = [&](int i, int j) { return 0.5 * (g(i, anchor_) + g(j, anchor_) - g(i, j)); };

  half_gamma_rest_.resize(nr);
  for (Eigen::Index i = 0; i < nr; ++i) half_gamma_rest_[i] = 0.5 * g(rest_[static_cast<std::size_t>(i)], anchor_);
  c_offset_.resize(nc);
  for (Eigen::Index i = 0; i < nc; ++i) {
    const int j = censored_[static_cast<std::size_t>(i)];
    c_offset_[i] = std::log(u[j]) + 0.5 * g(j, anchor_);
  }

  Eigen::MatrixXd skk(nr, nr);
  Eigen::MatrixXd sck(nc, nr);
  Eigen::MatrixXd scc(nc, nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < nr; ++j) skk(i, j) = sig(rest_[static_cast<std::size_t>(i)], rest_[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index i = 0; i < nc; ++i) {
    for (Eigen::Index j = 0; j < nr; ++j) sck(i, j) = sig(censored_[static_cast<std::size_t>(i)], rest_[static_cast<std::size_t>(j)]);
    for (Eigen::Index j = 0; j < nc; ++j) scc(i, j) = sig(censored_[static_cast<std::size_t>(i)], censored_[static_cast<std::size_t>(j)]);
  }
  log_norm_ = -static_cast<double>(nr) * kLogSqrt2Pi;
  if (nr > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(skk);
    if (llt.info() != Eigen::Success) throw DomainError("censored density: Sigma of the exceedance block is singular");
    chol_l_ = llt.matrixL();
    for (Eigen::Index i = 0; i < nr; ++i) {
      if (!(chol_l_(i, i) > 1e-150)) throw DomainError("censored density: Sigma of the exceedance block is singular");
      log_norm_ -= std::log(chol_l_(i, i));
    }
    if (nc > 0) {
      reg_ = llt.solve(sck.transpose()).transpose();
      cond_cov_ = scc - reg_ * sck.transpose();
      cond_cov_ = 0.5 * (cond_cov_ + cond_cov_.transpose()).eval();
    }
  } else {
    reg_ = Eigen::MatrixXd::Zero(nc, 0);
    cond_cov_ = scc;
  }
}

double CensoredPattern::log_density(const Eigen::VectorXd& x, const MvnOptions& opt) const {
  const double xa = x[anchor_];
  const double log_xa = std::log(xa);
  const auto nr = static_cast<Eigen::Index>(rest_.size());
  double out = -2.0 * log_xa + log_norm_;
  Eigen::VectorXd xt(nr);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const double xj = x[rest_[static_cast<std::size_t>(i)]];
    const double lj = std::log(xj);
    out -= lj;
    xt[i] = lj - log_xa + half_gamma_rest_[i];
  }
  if (nr > 0) {
    const Eigen::VectorXd z = chol_l_.triangularView<Eigen::Lower>().solve(xt);
    out -= 0.5 * z.squaredNorm();
  }
  if (!censored_.empty()) {
    Eigen::VectorXd mu = c_offset_.array() - log_xa;
    if (nr > 0) mu -= reg_ * xt;
    const MvnResult p = mvn_cdf(cond_cov_, mu, opt);
    if (!(p.value > 0.0)) return -std::numeric_limits<double>::infinity();
    out += std::log(p.value);
  }
  return out;
}

double log_censored_density(const HrStructure& hr, const CensoredTerm& term, const MvnOptions& opt) {
  if (term.x.size() != hr.dim()) throw InputError("censored density: event has the wrong length");
  return CensoredPattern(hr, term.exceed, term.u).log_density(term.x, opt);
}

double censored_density(const HrStructure& hr, const CensoredTerm& term, const MvnOptions& opt) {
  return std::exp(log_censored_density(hr, term, opt));
}

double below_threshold_mass(const HrStructure& hr, const Eigen::VectorXd& u, const MvnOptions& opt) {
  const double v = exponent_measure_V(hr, u, opt);
  if (v >= 1.0) {
    throw ModelRangeError("V(u) = " + std::to_string(v) +
                          " >= 1: the threshold is too low for the tail approximation; raise the threshold");
  }
  return 1.0 - v;
}

}  // namespace rivex
