#ifndef FUNNEL_ODE_DOPRI5_HPP
#define FUNNEL_ODE_DOPRI5_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>

#include "funnel/core/error.hpp"

namespace funnel::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct IntegratorOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double h_init = 0.0;  // 0: pick automatically
  // The step cap keeps error control honest near slowly unstable equilibria,
  // where unbounded steps let the scheme settle onto a spurious steady state.
  double h_max = 0.5;
  std::size_t max_steps = 100'000'000;
  double blowup = 1e3;
  std::size_t guard_dims = static_cast<std::size_t>(-1);  // leading components checked
};

/// One accepted step with the Dormand-Prince continuous extension
/// (fourth-order dense output).
template <std::size_t N>
struct DenseStep {
  double t0 = 0.0;
  double t1 = 0.0;
  State<N> y0{};
  State<N> y1{};
  std::array<State<N>, 4> rc{};

  State<N> at(double t) const {
    const double h = t1 - t0;
    const double th = h != 0.0 ? (t - t0) / h : 0.0;
    const double th1 = 1.0 - th;
    State<N> out;
    for (std::size_t i = 0; i < N; ++i) {
      out[i] = y0[i] +
               th * (rc[0][i] + th1 * (rc[1][i] + th * (rc[2][i] + th1 * rc[3][i])));
    }
    return out;
  }
};

template <std::size_t N>
struct IntegrationResult {
  double t = 0.0;
  State<N> y{};
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool stopped_by_observer = false;
};

namespace detail {

struct DP54 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0,
                          d7 = 69997945.0 / 29380423.0;
};

template <std::size_t N>
double error_norm(const State<N>& err, const State<N>& y0, const State<N>& y1,
                  const IntegratorOptions& opt) {
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double sc = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / sc;
    sum += q * q;
  }
  return std::sqrt(sum / static_cast<double>(N));
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration from t0 to t1 (either direction).
///
/// `f(t, y, dydt)` evaluates the vector field. `observer(const DenseStep&)` is
/// called after every accepted step and returns false to stop early.
template <std::size_t N, typename Rhs, typename Observer>
IntegrationResult<N> integrate(Rhs&& f, double t0, const State<N>& y0, double t1,
                               const IntegratorOptions& opt, Observer&& observer) {
  using C = detail::DP54;
  IntegrationResult<N> res;
  res.t = t0;
  res.y = y0;
  if (t1 == t0) return res;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const std::size_t guard = std::min(opt.guard_dims, N);

  State<N> k1, k2, k3, k4, k5, k6, k7, tmp, y_new, err;
  f(t0, y0, k1);

  double h = opt.h_init;
  if (h <= 0.0) {
    // Hairer's starting-step heuristic.
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opt.atol + opt.rtol * std::abs(y0[i]);
      d0 += (y0[i] / sc) * (y0[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  }
  h = std::min({h, opt.h_max, std::abs(t1 - t0)});

  double t = t0;
  State<N> y = y0;
  bool last_rejected = false;
  while (dir * (t1 - t) > 0.0) {
    if (res.accepted + res.rejected >= opt.max_steps) {
      fail(ErrorKind::convergence, "integrator exceeded max_steps", t);
    }
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(t), 1.0);
    if (h < h_min) {
      std::ostringstream os;
      os << "integrator step size underflow at t = " << t;
      fail(ErrorKind::step_underflow, os.str(), t);
    }
    bool final_step = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      final_step = true;
    }
    const double hs = dir * h;

    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + hs * C::a21 * k1[i];
    f(t + C::c2 * hs, tmp, k2);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + hs * (C::a31 * k1[i] + C::a32 * k2[i]);
    f(t + C::c3 * hs, tmp, k3);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + hs * (C::a41 * k1[i] + C::a42 * k2[i] + C::a43 * k3[i]);
    f(t + C::c4 * hs, tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + hs * (C::a51 * k1[i] + C::a52 * k2[i] + C::a53 * k3[i] +
                            C::a54 * k4[i]);
    f(t + C::c5 * hs, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + hs * (C::a61 * k1[i] + C::a62 * k2[i] + C::a63 * k3[i] +
                            C::a64 * k4[i] + C::a65 * k5[i]);
    f(t + hs, tmp, k6);
    for (std::size_t i = 0; i < N; ++i)
      y_new[i] = y[i] + hs * (C::a71 * k1[i] + C::a73 * k3[i] + C::a74 * k4[i] +
                              C::a75 * k5[i] + C::a76 * k6[i]);
    f(t + hs, y_new, k7);
    for (std::size_t i = 0; i < N; ++i)
      err[i] = hs * (C::e1 * k1[i] + C::e3 * k3[i] + C::e4 * k4[i] + C::e5 * k5[i] +
                     C::e6 * k6[i] + C::e7 * k7[i]);

    const double e = detail::error_norm<N>(err, y, y_new, opt);
    if (!std::isfinite(e)) {
      h *= 0.2;
      ++res.rejected;
      last_rejected = true;
      continue;
    }
    if (e > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(e, -0.2));
      ++res.rejected;
      last_rejected = true;
      continue;
    }

    DenseStep<N> step;
    step.t0 = t;
    step.t1 = final_step ? t1 : t + hs;
    step.y0 = y;
    step.y1 = y_new;
    for (std::size_t i = 0; i < N; ++i) {
      const double ydiff = y_new[i] - y[i];
      const double bspl = hs * k1[i] - ydiff;
      step.rc[0][i] = ydiff;
      step.rc[1][i] = bspl;
      step.rc[2][i] = ydiff - hs * k7[i] - bspl;
      step.rc[3][i] = hs * (C::d1 * k1[i] + C::d3 * k3[i] + C::d4 * k4[i] +
                            C::d5 * k5[i] + C::d6 * k6[i] + C::d7 * k7[i]);
    }
    t = step.t1;
    y = y_new;
    k1 = k7;
    ++res.accepted;

    for (std::size_t i = 0; i < guard; ++i) {
      if (!(std::abs(y[i]) <= opt.blowup)) {
        std::ostringstream os;
        os << "divergence guard triggered at t = " << t;
        fail(ErrorKind::divergence, os.str(), t);
      }
    }

    const bool keep_going = observer(static_cast<const DenseStep<N>&>(step));
    res.t = t;
    res.y = y;
    if (!keep_going) {
      res.stopped_by_observer = true;
      return res;
    }

    double fac = 0.9 * std::pow(std::max(e, 1e-10), -0.2);
    fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
    h = std::min(h * fac, opt.h_max);
    last_rejected = false;
  }
  return res;
}

template <std::size_t N, typename Rhs>
IntegrationResult<N> integrate(Rhs&& f, double t0, const State<N>& y0, double t1,
                               const IntegratorOptions& opt = {}) {
  return integrate<N>(std::forward<Rhs>(f), t0, y0, t1, opt,
                      [](const DenseStep<N>&) { return true; });
}

/// Locates a zero of g along one dense step with sign change in the requested
/// direction (+1 rising, -1 falling, 0 either) by bisection in time to `tol`.
template <std::size_t N, typename G>
std::optional<double> locate_crossing(const DenseStep<N>& step, G&& g, int direction,
                                      double tol = 1e-12) {
  const double g0 = g(step.y0);
  const double g1 = g(step.y1);
  const bool rising = g0 < 0.0 && g1 >= 0.0;
  const bool falling = g0 > 0.0 && g1 <= 0.0;
  if (!((direction >= 0 && rising) || (direction <= 0 && falling))) return std::nullopt;
  double lo = step.t0;
  double hi = step.t1;
  double glo = g0;
  while (std::abs(hi - lo) > tol) {
    const double mid = 0.5 * (lo + hi);
    // At large |t| the spacing of doubles can exceed tol.
    if (mid == lo || mid == hi) break;
    const double gm = g(step.at(mid));
    if ((gm < 0.0) == (glo < 0.0) && gm != 0.0) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace funnel::ode

#endif  // FUNNEL_ODE_DOPRI5_HPP
