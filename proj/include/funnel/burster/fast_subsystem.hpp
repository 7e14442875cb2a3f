#ifndef FUNNEL_BURSTER_FAST_SUBSYSTEM_HPP
#define FUNNEL_BURSTER_FAST_SUBSYSTEM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "funnel/burster/model.hpp"
#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"
#include "funnel/core/linalg.hpp"
#include "funnel/ode/dopri5.hpp"

namespace funnel::burster {

// Fast subsystem (v, w) with the slow variable frozen. Everything here is
// parametrized by the effective drive J = y + I.

struct FastField {
  double delta;
  double drive;  // J = y + I

  void operator()(double, const ode::State<2>& x, ode::State<2>& dx) const {
    dx[0] = x[0] - x[0] * x[0] * x[0] / 3.0 - x[1] + drive;
    dx[1] = delta * (recovery_offset + x[0] - recovery_gain * x[1]);
  }
};

inline Mat2 fast_jacobian(double v, double delta) {
  Mat2 j;
  j << 1.0 - v * v, -1.0, delta, -recovery_gain * delta;
  return j;
}

enum class FastBranchSide { lower, middle, upper };

inline const char* to_string(FastBranchSide b) {
  switch (b) {
    case FastBranchSide::lower: return "lower";
    case FastBranchSide::middle: return "middle";
    case FastBranchSide::upper: return "upper";
  }
  return "?";
}

struct FastEquilibrium {
  double v = 0.0;
  double w = 0.0;
  std::array<std::complex<double>, 2> eigenvalues{};
  bool stable = false;
  // Side of the cubic nullcline, split at the two trace-zero points: the
  // outer branches carry the stable rest states, the middle one is unstable.
  FastBranchSide branch = FastBranchSide::middle;
};

/// Real roots of v^3 + a v + b = 0, ascending, each polished by bisection.
inline std::vector<double> depressed_cubic_roots(double a, double b) {
  auto f = [&](double v) { return (v * v + a) * v + b; };
  std::vector<double> guesses;
  const double disc = -(4.0 * a * a * a + 27.0 * b * b);
  if (disc < 0.0) {
    const double s = std::sqrt(b * b / 4.0 + a * a * a / 27.0);
    guesses.push_back(std::cbrt(-b / 2.0 + s) + std::cbrt(-b / 2.0 - s));
  } else {
    const double r = 2.0 * std::sqrt(-a / 3.0);
    const double arg = std::clamp(3.0 * b / (a * r), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) guesses.push_back(r * std::cos(theta - 2.0 * pi * k / 3.0));
  }
  std::sort(guesses.begin(), guesses.end());
  guesses.erase(std::unique(guesses.begin(), guesses.end(),
                            [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                guesses.end());
  std::vector<double> roots;
  for (double g : guesses) {
    // Bracket within a small window where f changes sign, then bisect.
    double width = 1e-6 * std::max(1.0, std::abs(g));
    double lo = g - width, hi = g + width;
    for (int k = 0; k < 60 && f(lo) * f(hi) > 0.0; ++k) {
      width *= 2.0;
      lo = g - width;
      hi = g + width;
    }
    if (f(lo) * f(hi) > 0.0) {
      roots.push_back(g);
      continue;
    }
    const bool lo_neg = f(lo) < 0.0;
    for (int k = 0; k < 200 && hi - lo > 4e-16 * std::max(1.0, std::abs(lo)); ++k) {
      const double mid = 0.5 * (lo + hi);
      ((f(mid) < 0.0) == lo_neg ? lo : hi) = mid;
    }
    roots.push_back(0.5 * (lo + hi));
  }
  return roots;
}

/// |v| at which the fast Jacobian has zero trace: sqrt(1 - 0.8 delta).
inline double fast_trace_zero_v(double delta) {
  return std::sqrt(1.0 - recovery_gain * delta);
}

/// Equilibria of the fast subsystem at frozen y: v solves
/// v^3 + 0.75 v + 2.625 - 3 (y + I) = 0 and w = (0.7 + v) / 0.8.
inline std::vector<FastEquilibrium> fast_equilibria(double y_frozen,
                                                    const BursterParams& p) {
  const double drive = y_frozen + p.I;
  const double a = 3.0 / recovery_gain - 3.0;
  const double b = 3.0 * recovery_offset / recovery_gain - 3.0 * drive;
  const double knee =
      recovery_gain * p.delta < 1.0 ? fast_trace_zero_v(p.delta) : 0.0;
  std::vector<FastEquilibrium> out;
  for (double v : depressed_cubic_roots(a, b)) {
    FastEquilibrium e;
    e.v = v;
    e.w = (recovery_offset + v) / recovery_gain;
    const Mat2 j = fast_jacobian(v, p.delta);
    e.eigenvalues = eigenvalues(j);
    e.stable = e.eigenvalues[0].real() < 0.0 && e.eigenvalues[1].real() < 0.0;
    e.branch = v <= -knee ? FastBranchSide::lower
               : v >= knee ? FastBranchSide::upper
                           : FastBranchSide::middle;
    out.push_back(e);
  }
  return out;
}

/// Residual of the equilibrium equations at (v, w) for frozen y.
inline double fast_equilibrium_residual(double v, double w, double y_frozen,
                                        const BursterParams& p) {
  const double r1 = v - v * v * v / 3.0 - w + y_frozen + p.I;
  const double r2 = recovery_offset + v - recovery_gain * w;
  return std::max(std::abs(r1), std::abs(r2));
}

/// Drive J at which the fast equilibrium sits at voltage v.
inline double drive_at_equilibrium(double v) {
  return v * v * v / 3.0 - v + (recovery_offset + v) / recovery_gain;
}

enum class Criticality { subcritical, supercritical, undetermined };

inline const char* to_string(Criticality c) {
  switch (c) {
    case Criticality::subcritical: return "subcritical";
    case Criticality::supercritical: return "supercritical";
    case Criticality::undetermined: return "undetermined";
  }
  return "?";
}

struct HopfPoint {
  double y = 0.0;
  double v = 0.0;
  double w = 0.0;
  double frequency = 0.0;
  Criticality criticality = Criticality::undetermined;
  // Probe diagnostics: amplitude of the small cycle trapped in backward time
  // before the point, and of the forward attractor just past it.
  double backward_small_amplitude = 0.0;
  double forward_amplitude = 0.0;
  double probe_offset = 0.0;
};

struct HopfProbeOptions {
  std::vector<double> drive_offsets{1e-3, 3e-4, 1e-4};
  double seed_offset = 1e-3;
  double duration = 3e4;
  double small_radius = 0.5;
};

namespace detail {

// Max |v - v_eq| over the second half of a fast-subsystem run.
inline double probe_amplitude(double delta, double drive, double v_eq, double w_eq,
                              double seed_offset, double duration, bool backward,
                              double escape_radius) {
  FastField field{delta, drive};
  ode::IntegratorOptions opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-12;
  opt.blowup = 50.0;
  double amp = 0.0;
  const double t_end = backward ? -duration : duration;
  try {
    ode::integrate<2>(field, 0.0, {v_eq + seed_offset, w_eq}, t_end, opt,
                      [&](const ode::DenseStep<2>& s) {
                        const double dv = std::abs(s.y1[0] - v_eq) +
                                          std::abs(s.y1[1] - w_eq);
                        if (std::abs(s.t1) > 0.5 * duration) amp = std::max(amp, dv);
                        return dv < escape_radius;
                      });
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
  return amp;
}

}  // namespace detail

/// The lower trace-zero point of the fast subsystem and its criticality.
///
/// Criticality is probed numerically. Just before the point (equilibrium
/// stable) a backward-time run from a small perturbation stays trapped near
/// the equilibrium only if a small repelling cycle surrounds it
/// (subcritical). Just past the point a forward run stays small only if a
/// small attracting cycle was born (supercritical).
inline HopfPoint fast_ah_point(const BursterParams& p, const HopfProbeOptions& probe = {}) {
  if (!(recovery_gain * p.delta < 1.0)) {
    fail(ErrorKind::domain, "fast subsystem has no trace-zero point for delta >= 1.25");
  }
  HopfPoint h;
  h.v = -fast_trace_zero_v(p.delta);
  h.w = (recovery_offset + h.v) / recovery_gain;
  const double drive = drive_at_equilibrium(h.v);
  h.y = drive - p.I;
  h.frequency = std::sqrt(fast_jacobian(h.v, p.delta).determinant());

  // dJ/dv > 0 along the equilibrium curve, so lower drive means a stable rest.
  for (double dj : probe.drive_offsets) {
    const double j_before = drive - dj;
    const double j_after = drive + dj;
    const auto eq_before = fast_equilibria(j_before - p.I, p).front();
    const auto eq_after = fast_equilibria(j_after - p.I, p).front();
    const double back = detail::probe_amplitude(p.delta, j_before, eq_before.v, eq_before.w,
                                                probe.seed_offset, probe.duration, true,
                                                probe.small_radius);
    const double fwd = detail::probe_amplitude(p.delta, j_after, eq_after.v, eq_after.w,
                                               probe.seed_offset, probe.duration, false,
                                               10.0);
    h.backward_small_amplitude = back;
    h.forward_amplitude = fwd;
    h.probe_offset = dj;
    const bool trapped = std::isfinite(back) && back > 0.0 && back < probe.small_radius;
    const bool small_forward = fwd < probe.small_radius;
    if (trapped && !small_forward) {
      h.criticality = Criticality::subcritical;
      return h;
    }
    if (!trapped && small_forward) {
      h.criticality = Criticality::supercritical;
      return h;
    }
  }
  h.criticality = Criticality::undetermined;
  return h;
}

}  // namespace funnel::burster

#endif  // FUNNEL_BURSTER_FAST_SUBSYSTEM_HPP
