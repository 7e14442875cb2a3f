#ifndef FUNNEL_ANALYSIS_FIXED_POINTS_HPP
#define FUNNEL_ANALYSIS_FIXED_POINTS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"
#include "funnel/core/linalg.hpp"
#include "funnel/maps/annulus_maps.hpp"

namespace funnel {

struct FixedPointReport {
  double phi_fp = 0.0;
  double z_fp = 0.0;
  int winding = 0;  // phi_bar = phi_fp + 2 pi winding on the lift
  std::array<std::complex<double>, 2> eigenvalues{};
  bool stable = false;
  double predicted_eigenvalue = 0.0;  // -(omega/rho) alpha'/alpha at phi_fp
};

namespace detail {

inline FixedPointReport make_report(double phi, double z, int winding, const Mat2& jac,
                                    double predicted) {
  FixedPointReport r;
  r.phi_fp = phi;
  r.z_fp = z;
  r.winding = winding;
  r.eigenvalues = eigenvalues(jac);
  r.stable = std::abs(r.eigenvalues[0]) < 1.0 && std::abs(r.eigenvalues[1]) < 1.0;
  r.predicted_eigenvalue = predicted;
  return r;
}

}  // namespace detail

/// Phase value for omega_tilde that makes phi_target a fixed point of the
/// degree-zero singular-limit circle map.
inline double omega_tilde_for_fixed_point(const SaddleFocusParams& p,
                                          const ModulationProfile& profile,
                                          double phi_target) {
  return wrap_angle(phi_target + p.omega_over_rho() * std::log(profile.alpha(phi_target)));
}

/// Fixed points of the degree-zero singular-limit map: roots of
/// (omega/rho) ln(1/alpha(phi)) + omega_tilde - phi = 2 pi k, bracketed on a grid
/// and bisected.
inline std::vector<FixedPointReport> find_fixed_points_n0(const SingularLimitMap& map,
                                                          std::size_t grid = 4096,
                                                          double tol = 1e-12) {
  require(map.degree() == 0, ErrorKind::domain, "fixed point search needs n = 0");
  const CircleMap& f = map.circle_component();
  const double kappa = f.omega_over_rho();
  const auto& prof = map.profile();
  // G_k(phi) = F(phi) - phi - 2 pi k on [0, 2 pi).
  double fmin = std::numeric_limits<double>::infinity();
  double fmax = -fmin;
  std::vector<double> xs(grid + 1), fs(grid + 1);
  for (std::size_t j = 0; j <= grid; ++j) {
    xs[j] = two_pi * static_cast<double>(j) / static_cast<double>(grid);
    fs[j] = f.lift(xs[j]);
    fmin = std::min(fmin, fs[j]);
    fmax = std::max(fmax, fs[j]);
  }
  const int k_lo = static_cast<int>(std::floor((fmin - two_pi) / two_pi)) - 1;
  const int k_hi = static_cast<int>(std::ceil(fmax / two_pi)) + 1;
  std::vector<std::pair<double, int>> roots;
  for (int k = k_lo; k <= k_hi; ++k) {
    auto G = [&](double x) { return f.lift(x) - x - two_pi * k; };
    for (std::size_t j = 0; j < grid; ++j) {
      const double g0 = fs[j] - xs[j] - two_pi * k;
      const double g1 = fs[j + 1] - xs[j + 1] - two_pi * k;
      if (g0 == 0.0) {
        roots.emplace_back(xs[j], k);
        continue;
      }
      if ((g0 < 0.0) == (g1 < 0.0) || g1 == 0.0) continue;
      double lo = xs[j], hi = xs[j + 1], glo = g0;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = G(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      roots.emplace_back(0.5 * (lo + hi), k);
    }
  }
  std::sort(roots.begin(), roots.end());
  std::vector<FixedPointReport> out;
  for (const auto& [phi, k] : roots) {
    if (!out.empty() && std::abs(angle_difference(phi, out.back().phi_fp)) < 10.0 * tol) continue;
    const auto pt = AnnulusPoint::from_lift(map(AnnulusPoint::from_lift(0.0, phi)).z, phi);
    out.push_back(detail::make_report(phi, pt.z, k, map.jacobian(pt),
                                      -kappa * prof.log_slope(phi)));
  }
  if (out.size() >= 2 && std::abs(angle_difference(out.front().phi_fp, out.back().phi_fp)) < 10.0 * tol) {
    out.pop_back();
  }
  return out;
}

/// Newton refinement of a fixed point of an annulus map (z, phi) = T(z, phi)
/// modulo 2 pi, starting from a guess with known lift winding.
template <AnnulusMap M>
FixedPointReport refine_fixed_point(const M& map, double z0, double phi0, int winding,
                                    double predicted = 0.0, double tol = 1e-13,
                                    int max_iter = 50) {
  double z = z0, phi = phi0;
  for (int it = 0;; ++it) {
    const auto pt = AnnulusPoint::from_lift(z, phi);
    const auto img = map(pt);
    Vec2 r(z - img.z, phi - (img.lift - two_pi * winding));
    if (r.lpNorm<Eigen::Infinity>() < tol) break;
    if (it >= max_iter) {
      fail(ErrorKind::convergence, "fixed point Newton did not converge", r.norm());
    }
    const Mat2 a = Mat2::Identity() - map.jacobian(pt);
    require(std::abs(a.determinant()) > 1e-300, ErrorKind::non_invertible,
            "fixed point Newton: singular system");
    const Vec2 step = a.partialPivLu().solve(r);
    z -= step(0);
    phi -= step(1);
    require(z >= 0.0, ErrorKind::range, "fixed point Newton left z >= 0");
  }
  const auto pt = AnnulusPoint::from_lift(z, phi);
  return detail::make_report(pt.phi, z, winding, map.jacobian(pt), predicted);
}

}  // namespace funnel

#endif  // FUNNEL_ANALYSIS_FIXED_POINTS_HPP
