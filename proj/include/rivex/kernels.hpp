#pragma once

#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rivex/catchment.hpp"
#include "rivex/hr_core.hpp"
#include "rivex/network.hpp"

namespace rivex {

/// Kernel families. euclid and hydro are single-scale fractal variograms (on station and
/// hydrological coordinates); full adds the river component; full_iso drops the anisotropy.
enum class Variant { euclid, hydro, full, full_iso };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

struct KernelParams {
  Variant variant = Variant::full;
  double lambda_riv = 0.0;
  double lambda_euc = 1.0;  // the single scale lambda for euclid / hydro
  double tau = 1.0;         // km
  double alpha = 1.0;
  double beta = std::numbers::pi / 2.0;
  double c = 1.0;

  /// Copy with the parameters the variant ignores set to their neutral values.
  KernelParams normalized() const;
  /// DomainError naming the first parameter outside its box.
  void check() const;
  bool in_box() const;
};

/// R = [[cos b, -sin b], [c sin b, c cos b]].
Eigen::Matrix2d anisotropy_matrix(double beta, double c);

struct Station {
  std::string id;
  NetLocation location;
  Point2 position{0.0, 0.0};  // raw planar coordinates of the gauge
  CatchmentSummary summary;
};

using StationSet = std::vector<Station>;

/// InputError on duplicate ids or locations outside the network.
void validate_stations(const RiverNetwork& net, const StationSet& stations);

double gamma_riv(const KernelParams& p, const RiverNetwork& net, const NetLocation& s, const NetLocation& t);
double gamma_euc(const KernelParams& p, const Point2& a, const Point2& b);
double gamma_euc(const KernelParams& p, const CatchmentSummary& a, const CatchmentSummary& b);
double gamma(const KernelParams& p, const RiverNetwork& net, const Station& a, const Station& b);

/// Network quantities for every station pair, computed once so that Gamma(theta) is cheap.
class StationGeometry {
 public:
  StationGeometry(const RiverNetwork& net, const StationSet& stations);

  int size() const { return m_; }
  Eigen::MatrixXd gamma_matrix(const KernelParams& p) const;

 private:
  struct Pair {
    bool connected = false;
    double river_km = 0.0;
    double weight = 1.0;
    Point2 d_raw{0.0, 0.0};
    Point2 d_hydro{0.0, 0.0};
  };
  int m_ = 0;
  std::vector<Pair> pairs_;  // upper triangle, row-major
};

Eigen::MatrixXd gamma_matrix(const KernelParams& p, const RiverNetwork& net, const StationSet& stations);

/// Hüsler-Reiss structure for the station tuple; KernelValidityError if Sigma is not PSD.
HrStructure hr_structure(const KernelParams& p, const RiverNetwork& net, const StationSet& stations,
                         int anchor = 0);

/// Pairwise extremal coefficient 2 Phi(sqrt(gamma)/2).
double theta_model(double gamma_value);

/// Bivariate exponent measure V(x, y) for the given Gamma.
double biv_hr_exponent(double gamma_value, double x, double y);

/// exp(-V(x, y)).
double biv_hr_cdf(double gamma_value, double x, double y);

}  // namespace rivex
