#ifndef FUNNEL_MAPS_GLOBAL_MAP_HPP
#define FUNNEL_MAPS_GLOBAL_MAP_HPP

#include <cmath>
#include <sstream>

#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"
#include "funnel/maps/profile.hpp"
#include "funnel/maps/saddle_focus.hpp"

namespace funnel {

/// Parameters of the global return S1 -> S0.
///
/// The O(z) remainders of the return are modelled as linear couplings
/// eps_r * z (radial) and eps_phi * z (angular). `n` is the degree of the
/// angular component: 1 when the image of the local unstable manifold encloses
/// the origin of S0, 0 when it does not.
struct GlobalMapConfig {
  double mu = 0.01;
  double phi_star = 0.0;
  int n = 1;
  double eps_r = 0.1;
  double eps_phi = 0.0;

  /// Checks the record on its own; the r0 < 1 landing condition needs a
  /// profile and a z-range and is checked by the map objects.
  void validate() const {
    require(n == 0 || n == 1, ErrorKind::domain,
            "winding number n must be 0 or 1");
    require(std::isfinite(mu) && mu >= 0.0, ErrorKind::domain, "mu must be >= 0");
    require(std::isfinite(eps_r) && eps_r >= 0.0, ErrorKind::domain,
            "eps_r must be >= 0");
    require(std::isfinite(eps_phi), ErrorKind::domain, "eps_phi must be finite");
    require(std::isfinite(phi_star), ErrorKind::domain, "phi_star must be finite");
  }

  GlobalMapConfig normalized() const {
    GlobalMapConfig out = *this;
    out.phi_star = wrap_angle(phi_star);
    out.validate();
    return out;
  }
};

/// Largest landing radius over the strip z in [0, z_max].
inline double max_landing_radius(const ModulationProfile& profile,
                                 const GlobalMapConfig& cfg, double z_max) {
  return cfg.mu * profile.max_alpha() + cfg.eps_r * z_max;
}

inline void require_lands_inside(const ModulationProfile& profile,
                                 const GlobalMapConfig& cfg, double z_max) {
  const double r = max_landing_radius(profile, cfg, z_max);
  if (!(r < 1.0)) {
    std::ostringstream os;
    os << "global map lands outside S0: mu*max(alpha) + eps_r*z_max = " << r
       << " >= 1";
    fail(ErrorKind::domain, os.str());
  }
}

/// r0 = mu alpha(phi1) + eps_r z,  phi0 = n phi1 + phi* + mu beta(phi1) + eps_phi z.
inline DiskPoint global_map_t1(const AnnulusPoint& pt,
                               const ModulationProfile& profile,
                               const GlobalMapConfig& cfg) {
  require(pt.z >= 0.0, ErrorKind::domain, "global map: z must be >= 0");
  const double r0 = cfg.mu * profile.alpha(pt.phi) + cfg.eps_r * pt.z;
  if (!(r0 < 1.0)) {
    std::ostringstream os;
    os << "global map: landing radius " << r0 << " >= 1";
    fail(ErrorKind::range, os.str());
  }
  const double lift = cfg.n * pt.lift + cfg.phi_star + cfg.mu * profile.beta(pt.phi) +
                      cfg.eps_phi * pt.z;
  return DiskPoint::from_lift(r0, lift);
}

}  // namespace funnel

#endif  // FUNNEL_MAPS_GLOBAL_MAP_HPP
