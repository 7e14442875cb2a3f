#ifndef FUNNEL_BURSTER_MODEL_HPP
#define FUNNEL_BURSTER_MODEL_HPP

#include <cmath>

#include "funnel/core/error.hpp"
#include "funnel/core/linalg.hpp"
#include "funnel/ode/dopri5.hpp"

namespace funnel::burster {

// Constants of the recovery equation w' = delta (0.7 + v - 0.8 w).
inline constexpr double recovery_offset = 0.7;
inline constexpr double recovery_gain = 0.8;

/// Parameters of the slow-fast burster
///   v' = v - v^3/3 - w + y + I,
///   w' = delta (0.7 + v - 0.8 w),
///   y' = mu_slow (c - y - v).
struct BursterParams {
  double delta = 0.08;
  double mu_slow = 0.002;
  double c = -1.0;
  double I = 0.8;

  void validate() const {
    require(std::isfinite(delta) && delta > 0.0, ErrorKind::domain, "delta must be > 0");
    require(std::isfinite(mu_slow) && mu_slow > 0.0, ErrorKind::domain,
            "mu_slow must be > 0");
    require(std::isfinite(c) && std::isfinite(I), ErrorKind::domain,
            "c and I must be finite");
  }

  // The slow/fast split is only meaningful for small mu_slow.
  bool slow_timescale_warning() const { return mu_slow > 0.1; }
};

struct BursterState {
  double v = 0.0;
  double w = 0.0;
  double y = 0.0;

  ode::State<3> array() const { return {v, w, y}; }
  static BursterState from(const ode::State<3>& s) { return {s[0], s[1], s[2]}; }
  Vec3 vec() const { return {v, w, y}; }
};

inline Vec3 rhs(const BursterState& s, const BursterParams& p) {
  return {s.v - s.v * s.v * s.v / 3.0 - s.w + s.y + p.I,
          p.delta * (recovery_offset + s.v - recovery_gain * s.w),
          p.mu_slow * (p.c - s.y - s.v)};
}

inline Mat3 jacobian(const BursterState& s, const BursterParams& p) {
  Mat3 j;
  j << 1.0 - s.v * s.v, -1.0, 1.0,  //
      p.delta, -recovery_gain * p.delta, 0.0,  //
      -p.mu_slow, 0.0, -p.mu_slow;
  return j;
}

/// Trace of the Jacobian, the local volume expansion rate of the flow.
inline double divergence(const BursterState& s, const BursterParams& p) {
  return (1.0 - s.v * s.v) - recovery_gain * p.delta - p.mu_slow;
}

/// Vector field in the form the integrator expects.
struct BursterField {
  BursterParams p;

  void operator()(double, const ode::State<3>& x, ode::State<3>& dx) const {
    dx[0] = x[0] - x[0] * x[0] * x[0] / 3.0 - x[1] + x[2] + p.I;
    dx[1] = p.delta * (recovery_offset + x[0] - recovery_gain * x[1]);
    dx[2] = p.mu_slow * (p.c - x[2] - x[0]);
  }
};

/// Flow plus the 3x3 variational matrix, stored row-major after the state.
struct BursterVariationalField {
  BursterParams p;

  void operator()(double t, const ode::State<12>& x, ode::State<12>& dx) const {
    ode::State<3> s{x[0], x[1], x[2]};
    ode::State<3> ds;
    BursterField{p}(t, s, ds);
    dx[0] = ds[0];
    dx[1] = ds[1];
    dx[2] = ds[2];
    const double a00 = 1.0 - x[0] * x[0];
    const double d = p.delta;
    const double m = p.mu_slow;
    for (int col = 0; col < 3; ++col) {
      const double q0 = x[3 + col];
      const double q1 = x[6 + col];
      const double q2 = x[9 + col];
      dx[3 + col] = a00 * q0 - q1 + q2;
      dx[6 + col] = d * q0 - recovery_gain * d * q1;
      dx[9 + col] = -m * q0 - m * q2;
    }
  }
};

/// Full-system equilibrium: y = c - v and v^3/3 + 1.25 v + 0.875 = c + I.
/// The left side is strictly increasing in v, so the equilibrium is unique.
inline BursterState full_equilibrium(const BursterParams& p) {
  const double slope = 1.0 / recovery_gain;  // w = (0.7 + v) / 0.8
  auto g = [&](double v) {
    return v * v * v / 3.0 + slope * v + recovery_offset * slope - (p.c + p.I);
  };
  double lo = -1.0, hi = 1.0;
  while (g(lo) > 0.0) lo *= 2.0;
  while (g(hi) < 0.0) hi *= 2.0;
  for (int k = 0; k < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo)); ++k) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  double v = 0.5 * (lo + hi);
  for (int k = 0; k < 2; ++k) v -= g(v) / (v * v + slope);
  return {v, (recovery_offset + v) / recovery_gain, p.c - v};
}

}  // namespace funnel::burster

#endif  // FUNNEL_BURSTER_MODEL_HPP
