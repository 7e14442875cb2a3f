#ifndef FUNNEL_MAPS_SADDLE_FOCUS_HPP
#define FUNNEL_MAPS_SADDLE_FOCUS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"

namespace funnel {

/// Linearization rates of a saddle-focus: expansion rho, contraction lambda
/// and rotation omega. The standard constructor enforces the saddle-index
/// condition lambda / rho > 1; `relaxed()` drops it for use with the flow
/// oracle only.
class SaddleFocusParams {
 public:
  SaddleFocusParams(double rho, double lambda, double omega)
      : SaddleFocusParams(rho, lambda, omega, true) {}

  static SaddleFocusParams relaxed(double rho, double lambda, double omega) {
    return SaddleFocusParams(rho, lambda, omega, false);
  }

  double rho() const { return rho_; }
  double lambda() const { return lambda_; }
  double omega() const { return omega_; }
  double saddle_index() const { return lambda_ / rho_; }
  double omega_over_rho() const { return omega_ / rho_; }
  bool satisfies_saddle_condition() const { return saddle_index() > 1.0; }

  void require_saddle_condition() const {
    if (!satisfies_saddle_condition()) {
      std::ostringstream os;
      os << "saddle index lambda/rho = " << saddle_index() << " must exceed 1";
      fail(ErrorKind::domain, os.str());
    }
  }

 private:
  SaddleFocusParams(double rho, double lambda, double omega, bool strict)
      : rho_(rho), lambda_(lambda), omega_(omega) {
    require(std::isfinite(rho) && rho > 0.0, ErrorKind::domain, "rho must be > 0");
    require(std::isfinite(lambda) && lambda > 0.0, ErrorKind::domain,
            "lambda must be > 0");
    require(std::isfinite(omega) && omega >= 0.0, ErrorKind::domain,
            "omega must be >= 0");
    if (strict) require_saddle_condition();
  }

  double rho_;
  double lambda_;
  double omega_;
};

/// A point on the entry disk S0 = {z = 1, r <= 1}. `lift` is the unreduced
/// angle; `phi` is its reduction to [0, 2pi).
struct DiskPoint {
  double r = 0.0;
  double phi = 0.0;
  double lift = 0.0;

  static DiskPoint from_lift(double r, double lift) {
    return {r, wrap_angle(lift), lift};
  }
};

/// A point (z, phi) on the exit cylinder S1 = {r = 1}, with the unreduced
/// angle carried alongside for rotation-number bookkeeping.
struct AnnulusPoint {
  double z = 0.0;
  double phi = 0.0;
  double lift = 0.0;

  static AnnulusPoint from_lift(double z, double lift) {
    return {z, wrap_angle(lift), lift};
  }
};

/// Time of flight from S0 to S1 for a point at radius r0.
inline double transition_time(double r0, const SaddleFocusParams& p) {
  require(r0 > 0.0 && r0 <= 1.0, ErrorKind::domain,
          "transition_time: r0 must lie in (0, 1]");
  return -std::log(r0) / p.rho();
}

/// Unreduced angle gained during the passage: (omega/rho) ln(1/r0).
inline double local_phase_increment(double r0, const SaddleFocusParams& p) {
  require(r0 > 0.0 && r0 <= 1.0, ErrorKind::domain,
          "local map: r0 must lie in (0, 1]");
  return -p.omega_over_rho() * std::log(r0);
}

/// The local passage map S0 -> S1 of the linear saddle-focus flow.
inline AnnulusPoint local_map_t0(const DiskPoint& in, const SaddleFocusParams& p) {
  if (!(in.r > 0.0)) {
    fail(ErrorKind::domain,
         "local map: r0 <= 0 lies on the stable manifold and never reaches S1");
  }
  require(in.r <= 1.0, ErrorKind::domain, "local map: r0 must be <= 1");
  const double z1 = std::pow(in.r, p.saddle_index());
  return AnnulusPoint::from_lift(z1, in.lift + local_phase_increment(in.r, p));
}

struct FlowState {
  double t = 0.0;
  double r = 0.0;
  double lift = 0.0;
  double z = 0.0;
};

enum class FlowStop { radius_one, time };

struct FlowOracleOptions {
  double step = 1e-3;
  double event_tol = 1e-12;
};

namespace detail {

inline FlowState rk4_polar_step(const FlowState& s, double h,
                                const SaddleFocusParams& p) {
  // r' = rho r, phi' = omega, z' = -lambda z, integrated literally so that the
  // oracle shares nothing with the closed-form map.
  auto f = [&](double r, double z) {
    return std::array<double, 2>{p.rho() * r, -p.lambda() * z};
  };
  const auto k1 = f(s.r, s.z);
  const auto k2 = f(s.r + 0.5 * h * k1[0], s.z + 0.5 * h * k1[1]);
  const auto k3 = f(s.r + 0.5 * h * k2[0], s.z + 0.5 * h * k2[1]);
  const auto k4 = f(s.r + h * k3[0], s.z + h * k3[1]);
  FlowState out;
  out.t = s.t + h;
  out.r = s.r + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
  out.z = s.z + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
  out.lift = s.lift + h * p.omega();
  return out;
}

}  // namespace detail

/// Fixed-step RK4 integration of the polar linear flow, stopped either when
/// r reaches 1 (localized by bisection on the final step) or at a given time.
inline FlowState flow_oracle(const FlowState& start, const SaddleFocusParams& p,
                             FlowStop stop, double stop_time = 0.0,
                             const FlowOracleOptions& opt = {}) {
  require(start.r > 0.0, ErrorKind::domain, "flow_oracle: r0 must be > 0");
  FlowState s = start;
  if (stop == FlowStop::time) {
    require(stop_time >= start.t, ErrorKind::domain,
            "flow_oracle: stop time precedes start");
    while (s.t < stop_time) {
      const double h = std::min(opt.step, stop_time - s.t);
      s = detail::rk4_polar_step(s, h, p);
    }
    return s;
  }
  if (s.r >= 1.0) return s;
  for (;;) {
    FlowState next = detail::rk4_polar_step(s, opt.step, p);
    if (next.r < 1.0) {
      s = next;
      continue;
    }
    double lo = 0.0;
    double hi = opt.step;
    while (hi - lo > opt.event_tol) {
      const double mid = 0.5 * (lo + hi);
      if (detail::rk4_polar_step(s, mid, p).r < 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return detail::rk4_polar_step(s, 0.5 * (lo + hi), p);
  }
}

}  // namespace funnel

#endif  // FUNNEL_MAPS_SADDLE_FOCUS_HPP
