#ifndef FUNNEL_MAPS_MODEL_MAP_1D_HPP
#define FUNNEL_MAPS_MODEL_MAP_1D_HPP

#include <cmath>
#include <optional>

#include "funnel/core/error.hpp"

namespace funnel {

/// Return map z -> a z^nu + alpha mu of a planar saddle loop with negative
/// saddle value (nu > 1), split by a small mu.
struct ModelMap1D {
  double a = 1.0;
  double nu = 2.0;
  double alpha = 1.0;
  double mu = 0.0;

  void validate() const {
    require(a > 0.0, ErrorKind::domain, "model map: a must be > 0");
    require(nu > 1.0, ErrorKind::domain, "model map: nu must be > 1");
    require(alpha * mu >= 0.0, ErrorKind::domain, "model map: alpha*mu must be >= 0");
  }

  double operator()(double z) const {
    require(z >= 0.0, ErrorKind::domain, "model map: z must be >= 0");
    return a * std::pow(z, nu) + alpha * mu;
  }

  double derivative(double z) const {
    require(z >= 0.0, ErrorKind::domain, "model map: z must be >= 0");
    return a * nu * std::pow(z, nu - 1.0);
  }
};

struct ModelFixedPoints {
  std::optional<double> stable;    // smaller root, derivative < 1
  std::optional<double> unstable;  // larger root, derivative > 1
};

/// Fixed points of the model map. g(z) = a z^nu + alpha mu - z is convex with
/// minimum at z_m = (a nu)^(-1/(nu-1)); each side is bracketed and bisected.
inline ModelFixedPoints model_map_fixed_points(const ModelMap1D& m, double tol = 1e-15) {
  m.validate();
  auto g = [&](double z) { return m(z) - z; };
  const double z_min = std::pow(m.a * m.nu, -1.0 / (m.nu - 1.0));
  ModelFixedPoints out;
  const double g_min = g(z_min);
  if (g_min > 0.0) return out;
  auto bisect = [&](double lo, double hi) {
    // g(lo) and g(hi) have opposite signs.
    const bool lo_positive = g(lo) > 0.0;
    for (int k = 0; k < 400 && hi - lo > tol * hi; ++k) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if ((g(mid) > 0.0) == lo_positive) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  if (g_min == 0.0) {
    out.stable = z_min;  // tangency: a single neutral fixed point
    return out;
  }
  out.stable = g(0.0) == 0.0 ? 0.0 : bisect(0.0, z_min);
  double hi = 2.0 * z_min;
  while (g(hi) <= 0.0) hi *= 2.0;
  out.unstable = bisect(z_min, hi);
  return out;
}

}  // namespace funnel

#endif  // FUNNEL_MAPS_MODEL_MAP_1D_HPP
