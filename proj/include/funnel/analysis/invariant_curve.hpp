#ifndef FUNNEL_ANALYSIS_INVARIANT_CURVE_HPP
#define FUNNEL_ANALYSIS_INVARIANT_CURVE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"
#include "funnel/maps/annulus_maps.hpp"
#include "funnel/maps/circle_curve.hpp"

namespace funnel {

struct InvariantCurveOptions {
  std::size_t grid = 1024;
  double tol = 1e-10;
  std::size_t max_iterations = 10000;
};

struct InvariantCurveResult {
  CircleCurve curve;
  double residual = 0.0;     // sup_j |h(phi_bar_j) - z_bar_j|
  double last_change = 0.0;  // sup_j |h_{k+1} - h_k| at exit
  std::size_t iterations = 0;
};

namespace detail {

/// Pushes the graph h through the map and resamples onto the uniform grid.
template <AnnulusMap M>
std::vector<double> graph_transform(const M& map, const std::vector<double>& h,
                                    std::vector<double>& image_phase,
                                    std::vector<double>& image_height) {
  const std::size_t n = h.size();
  std::vector<double> lift(n);
  image_height.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double phi = two_pi * static_cast<double>(j) / static_cast<double>(n);
    const auto img = map(AnnulusPoint::from_lift(h[j], phi));
    lift[j] = img.lift;
    image_height[j] = img.z;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double next = j + 1 < n ? lift[j + 1] : lift[0] + two_pi;
    if (!(next > lift[j])) {
      std::ostringstream os;
      os << "circle component not invertible on [" << two_pi * j / n << ", "
         << two_pi * (j + 1) / n << "]";
      fail(ErrorKind::non_invertible, os.str());
    }
  }
  // Rotate the image knots so that the reduced phases increase from the smallest.
  image_phase.resize(n);
  std::size_t start = 0;
  for (std::size_t j = 0; j < n; ++j) {
    image_phase[j] = wrap_angle(lift[j]);
    if (image_phase[j] < image_phase[start]) start = j;
  }
  std::vector<double> x(n), y(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = (start + k) % n;
    x[k] = image_phase[start] + (lift[j] - lift[start]) + (j < start ? two_pi : 0.0);
    y[k] = image_height[j];
  }
  const PeriodicSpline s(std::move(x), std::move(y), two_pi);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = s(two_pi * static_cast<double>(j) / static_cast<double>(n));
  }
  return out;
}

}  // namespace detail

/// Sup over the grid of |h(phi_bar(phi_j)) - z_bar(phi_j, h(phi_j))|.
template <AnnulusMap M>
double invariance_residual(const M& map, const CircleCurve& curve) {
  double res = 0.0;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const auto img = map(AnnulusPoint::from_lift(curve.heights()[j], curve.phase(j)));
    res = std::max(res, std::abs(curve(img.phi) - img.z));
  }
  return res;
}

/// Invariant graph z = h(phi) of a degree-one annulus map by graph transform,
/// started from the image of the bottom circle z = 0.
template <AnnulusMap M>
InvariantCurveResult find_invariant_curve(const M& map, const InvariantCurveOptions& opt = {}) {
  require(map.degree() == 1, ErrorKind::domain, "invariant curve needs a degree-one map");
  require(opt.grid >= 16, ErrorKind::config, "invariant curve grid must be >= 16");
  const std::size_t n = opt.grid;
  std::vector<double> h(n, 0.0), phase, height;
  // One pushforward of z = 0 lands on alpha^nu (exactly in the singular limit).
  h = detail::graph_transform(map, h, phase, height);
  InvariantCurveResult out;
  out.iterations = 1;
  for (;;) {
    std::vector<double> next = detail::graph_transform(map, h, phase, height);
    double change = 0.0;
    for (std::size_t j = 0; j < n; ++j) change = std::max(change, std::abs(next[j] - h[j]));
    h = std::move(next);
    ++out.iterations;
    out.last_change = change;
    if (change < opt.tol) break;
    if (out.iterations >= opt.max_iterations) {
      const double res = invariance_residual(map, CircleCurve(h));
      std::ostringstream os;
      os << "graph transform did not converge in " << out.iterations
         << " iterations (last change " << change << ", residual " << res << ")";
      fail(ErrorKind::convergence, os.str(), res);
    }
  }
  out.curve = CircleCurve(std::move(h));
  out.residual = invariance_residual(map, out.curve);
  return out;
}

/// Distance in z from a point to the curve.
inline double distance_to_curve(const CircleCurve& curve, const AnnulusPoint& pt) {
  return std::abs(pt.z - curve(pt.phi));
}

}  // namespace funnel

#endif  // FUNNEL_ANALYSIS_INVARIANT_CURVE_HPP
