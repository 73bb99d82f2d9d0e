#include "rivex/kernels.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "rivex/errors.hpp"
#include "rivex/normal.hpp"

namespace rivex {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::euclid: return "euclid";
    case Variant::hydro: return "hydro";
    case Variant::full: return "full";
    case Variant::full_iso: return "full_iso";
  }
  return "full";
}

Variant variant_from_string(std::string_view s) {
  if (s == "euclid") return Variant::euclid;
  if (s == "hydro") return Variant::hydro;
  if (s == "full") return Variant::full;
  if (s == "full_iso" || s == "full-iso") return Variant::full_iso;
  throw InputError("unknown kernel variant '" + std::string(s) + "' (expected euclid, hydro, full or full_iso)");
}

KernelParams KernelParams::normalized() const {
  KernelParams p = *this;
  if (variant == Variant::euclid || variant == Variant::hydro) {
    p.lambda_riv = 0.0;
    p.tau = 1.0;
  }
  if (variant == Variant::full_iso) {
    p.beta = std::numbers::pi / 2.0;
    p.c = 1.0;
  }
  return p;
}

void KernelParams::check() const {
  constexpr double pi = std::numbers::pi;
  auto fail = [](const std::string& what) { throw DomainError("kernel parameter out of range: " + what); };
  if (!(lambda_riv >= 0.0) || !std::isfinite(lambda_riv)) fail("lambda_riv = " + std::to_string(lambda_riv));
  if (!(lambda_euc >= 0.0) || !std::isfinite(lambda_euc)) fail("lambda_euc = " + std::to_string(lambda_euc));
  if (!(tau > 0.0) || !std::isfinite(tau)) fail("tau = " + std::to_string(tau));
  if (!(alpha > 0.0 && alpha <= 2.0)) fail("alpha = " + std::to_string(alpha));
  if (!(beta >= pi / 4.0 - 1e-12 && beta <= 3.0 * pi / 4.0 + 1e-12)) fail("beta = " + std::to_string(beta));
  if (!(c > 0.0) || !std::isfinite(c)) fail("c = " + std::to_string(c));
}

bool KernelParams::in_box() const {
  try {
    check();
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

Eigen::Matrix2d anisotropy_matrix(double beta, double c) {
  constexpr double pi = std::numbers::pi;
  if (!(beta >= pi / 4.0 - 1e-12 && beta <= 3.0 * pi / 4.0 + 1e-12)) {
    throw DomainError("anisotropy angle beta must lie in [pi/4, 3pi/4], got " + std::to_string(beta));
  }
  if (!(c > 0.0)) throw DomainError("anisotropy ratio c must be positive, got " + std::to_string(c));
  Eigen::Matrix2d r;
  r << std::cos(beta), -std::sin(beta), c * std::sin(beta), c * std::cos(beta);
  return r;
}

void validate_stations(const RiverNetwork& net, const StationSet& stations) {
  std::set<std::string> seen;
  for (const Station& s : stations) {
    if (!seen.insert(s.id).second) throw InputError("duplicate station id '" + s.id + "'");
    net.validate(s.location);
  }
}

namespace {

double euc_norm_alpha(const KernelParams& p, double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) return 0.0;
  double nx = dx;
  double ny = dy;
  if (p.variant != Variant::full_iso) {
    const double cb = std::cos(p.beta);
    const double sb = std::sin(p.beta);
    nx = cb * dx - sb * dy;
    ny = p.c * (sb * dx + cb * dy);
  }
  return std::pow(std::hypot(nx, ny), p.alpha);
}

double riv_value(const KernelParams& p, bool connected, double weight, double dist) {
  if (!connected) return 1.0;
  return 1.0 - weight * std::max(1.0 - dist / p.tau, 0.0);
}

}  // namespace

double gamma_riv(const KernelParams& p, const RiverNetwork& net, const NetLocation& s, const NetLocation& t) {
  const FlowQuery q = net.flow_relation(s, t);
  if (!q.connected()) return 1.0;
  double w = 1.0;
  for (int id : q.between) w *= std::sqrt(net.segment(id).junction_weight);
  return riv_value(p, true, w, net.river_distance(s, t));
}

double gamma_euc(const KernelParams& p, const Point2& a, const Point2& b) {
  return euc_norm_alpha(p, a[0] - b[0], a[1] - b[1]);
}

double gamma_euc(const KernelParams& p, const CatchmentSummary& a, const CatchmentSummary& b) {
  return gamma_euc(p, a.hydro_position, b.hydro_position);
}

double gamma(const KernelParams& params, const RiverNetwork& net, const Station& a, const Station& b) {
  const KernelParams p = params.normalized();
  switch (p.variant) {
    case Variant::euclid: return p.lambda_euc * gamma_euc(p, a.position, b.position);
    case Variant::hydro: return p.lambda_euc * gamma_euc(p, a.summary, b.summary);
    case Variant::full:
    case Variant::full_iso:
      return p.lambda_riv * gamma_riv(p, net, a.location, b.location) + p.lambda_euc * gamma_euc(p, a.summary, b.summary);
  }
  return 0.0;
}

StationGeometry::StationGeometry(const RiverNetwork& net, const StationSet& stations)
    : m_(static_cast<int>(stations.size())) {
  validate_stations(net, stations);
  pairs_.reserve(static_cast<std::size_t>(m_ * (m_ - 1) / 2));
  for (int i = 0; i < m_; ++i) {
    for (int j = i + 1; j < m_; ++j) {
      const Station& a = stations[static_cast<std::size_t>(i)];
      const Station& b = stations[static_cast<std::size_t>(j)];
      Pair pr;
      const FlowQuery q = net.flow_relation(a.location, b.location);
      pr.connected = q.connected();
      if (pr.connected) {
        pr.river_km = net.river_distance(a.location, b.location);
        for (int id : q.between) pr.weight *= std::sqrt(net.segment(id).junction_weight);
      }
      pr.d_raw = {a.position[0] - b.position[0], a.position[1] - b.position[1]};
      pr.d_hydro = {a.summary.hydro_position[0] - b.summary.hydro_position[0],
                    a.summary.hydro_position[1] - b.summary.hydro_position[1]};
      pairs_.push_back(pr);
    }
  }
}

Eigen::MatrixXd StationGeometry::gamma_matrix(const KernelParams& params) const {
  const KernelParams p = params.normalized();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m_, m_);
  std::size_t k = 0;
  for (int i = 0; i < m_; ++i) {
    for (int j = i + 1; j < m_; ++j, ++k) {
      const Pair& pr = pairs_[k];
      double v = 0.0;
      if (p.variant == Variant::euclid) {
        v = p.lambda_euc * euc_norm_alpha(p, pr.d_raw[0], pr.d_raw[1]);
      } else {
        v = p.lambda_euc * euc_norm_alpha(p, pr.d_hydro[0], pr.d_hydro[1]);
        if (p.variant != Variant::hydro && p.lambda_riv > 0.0) {
          v += p.lambda_riv * riv_value(p, pr.connected, pr.weight, pr.river_km);
        }
      }
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Eigen::MatrixXd gamma_matrix(const KernelParams& p, const RiverNetwork& net, const StationSet& stations) {
  return StationGeometry(net, stations).gamma_matrix(p);
}

HrStructure hr_structure(const KernelParams& p, const RiverNetwork& net, const StationSet& stations, int anchor) {
  p.check();
  if (stations.size() < 2) throw InputError("hr_structure needs at least two stations");
  return HrStructure(gamma_matrix(p, net, stations), anchor);
}

double theta_model(double gamma_value) {
  if (!(gamma_value >= 0.0)) throw DomainError("theta_model: Gamma must be nonnegative");
  if (std::isinf(gamma_value)) return 2.0;
  return 2.0 * norm_cdf(0.5 * std::sqrt(gamma_value));
}

double biv_hr_exponent(double g, double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw InputError("biv_hr: arguments must be positive");
  if (!(g >= 0.0)) throw DomainError("biv_hr: Gamma must be nonnegative");
  if (std::isinf(x)) return std::isinf(y) ? 0.0 : 1.0 / y;
  if (std::isinf(y)) return 1.0 / x;
  if (std::isinf(g)) return 1.0 / x + 1.0 / y;
  if (g == 0.0) return 1.0 / std::min(x, y);
  const double s = std::sqrt(g);
  const double l = std::log(y / x);
  return norm_cdf(0.5 * s + l / s) / x + norm_cdf(0.5 * s - l / s) / y;
}

double biv_hr_cdf(double g, double x, double y) { return std::exp(-biv_hr_exponent(g, x, y)); }

}  // namespace rivex
