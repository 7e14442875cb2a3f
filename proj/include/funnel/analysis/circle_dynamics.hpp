#ifndef FUNNEL_ANALYSIS_CIRCLE_DYNAMICS_HPP
#define FUNNEL_ANALYSIS_CIRCLE_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <vector>

#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"
#include "funnel/maps/annulus_maps.hpp"

namespace funnel {

struct RotationNumberResult {
  double value = 0.0;  // turns per iterate, reduced to [0, 1)
  double turns = 0.0;  // unreduced (lift advance) / (2 pi N)
  std::size_t iterations = 0;
  double convergence_estimate = 0.0;  // |rho_N - rho_{N/2}|
};

/// Rotation number of a lifted circle map from the orbit of phi0.
template <typename Advance>
  requires std::is_invocable_r_v<double, Advance, double>
RotationNumberResult rotation_number_of(Advance&& advance, double phi0, std::size_t n) {
  require(n >= 1000, ErrorKind::domain, "rotation number needs at least 1000 iterations");
  double x = phi0;
  double half = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    x = advance(x);
    if (!std::isfinite(x)) fail(ErrorKind::divergence, "rotation number: non-finite lift");
    if (k == n / 2) half = (x - phi0) / (two_pi * static_cast<double>(k));
  }
  RotationNumberResult r;
  r.iterations = n;
  r.turns = (x - phi0) / (two_pi * static_cast<double>(n));
  r.value = r.turns - std::floor(r.turns);
  if (r.value >= 1.0) r.value = 0.0;
  r.convergence_estimate = std::abs(r.turns - half);
  return r;
}

template <LiftedCircleMap M>
RotationNumberResult rotation_number(const M& map, double phi0, std::size_t n) {
  return rotation_number_of([&](double x) { return map.lift(x); }, phi0, n);
}

struct Plateau {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
  double value = 0.0;
};

/// Runs of at least `min_length` consecutive sweep values equal to `tol`.
/// Rotation numbers live on [0, 1) with 0 and 1 identified.
inline std::vector<Plateau> find_plateaus(const std::vector<double>& values,
                                          double tol = 1e-6,
                                          std::size_t min_length = 3) {
  auto close = [tol](double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, std::abs(1.0 - d)) <= tol;
  };
  std::vector<Plateau> out;
  std::size_t start = 0;
  for (std::size_t k = 1; k <= values.size(); ++k) {
    if (k < values.size() && close(values[k], values[start])) continue;
    if (k - start >= min_length) out.push_back({start, k - 1, values[start]});
    start = k;
  }
  return out;
}

struct DiffeoCheck {
  bool satisfied = false;
  double sup_value = 0.0;
  double argmax_phi = 0.0;
};

/// sup over phi of (omega/rho) alpha'/alpha, compared with 1. Signed, not
/// absolute: positivity of the circle-map derivative is what matters.
inline DiffeoCheck check_diffeo_condition(const SaddleFocusParams& p,
                                          const ModulationProfile& profile,
                                          std::size_t grid = 4096) {
  const double kappa = p.omega_over_rho();
  auto g = [&](double phi) { return kappa * profile.log_slope(phi); };
  DiffeoCheck out;
  out.sup_value = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid; ++j) {
    const double phi = two_pi * static_cast<double>(j) / static_cast<double>(grid);
    const double v = g(phi);
    if (v > out.sup_value) {
      out.sup_value = v;
      out.argmax_phi = phi;
    }
  }
  // One Newton step on g' = 0 with difference quotients.
  const double h = 1e-4;
  const double x = out.argmax_phi;
  const double g1 = (g(x + h) - g(x - h)) / (2.0 * h);
  const double g2 = (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
  if (g2 < 0.0) {
    const double step = -g1 / g2;
    if (std::abs(step) < two_pi / static_cast<double>(grid)) {
      const double v = g(x + step);
      if (v > out.sup_value) {
        out.sup_value = v;
        out.argmax_phi = wrap_angle(x + step);
      }
    }
  }
  out.satisfied = out.sup_value < 1.0;
  return out;
}

struct StabilityCheck {
  double value = 0.0;
  bool stable_if_fixed = false;
};

/// (omega/rho)|alpha'/alpha| at phi against 1; this one takes the absolute value.
inline StabilityCheck check_stability_condition(const SaddleFocusParams& p,
                                                const ModulationProfile& profile,
                                                double phi) {
  StabilityCheck out;
  out.value = p.omega_over_rho() * std::abs(profile.log_slope(phi));
  out.stable_if_fixed = out.value < 1.0;
  return out;
}

struct SineBranches {
  int branches = 2;
  int full_covers_per_branch = 0;
};

/// Monotone pieces of phi -> A sin(phi) + omega_tilde and how many times each
/// wraps the circle.
inline SineBranches sine_branch_count(double amplitude, double /*omega_tilde*/ = 0.0) {
  require(amplitude > 0.0, ErrorKind::domain, "sine map amplitude must be > 0");
  SineBranches out;
  out.full_covers_per_branch = static_cast<int>(std::floor(2.0 * amplitude / two_pi));
  return out;
}

/// Mean of ln|F'| along an orbit of a circle map.
template <LiftedCircleMap M>
double lyapunov_exponent_1d(const M& map, double phi0, std::size_t n,
                            std::size_t transient = 1000, double floor = -50.0) {
  require(n >= 1, ErrorKind::domain, "need at least one iterate");
  double x = phi0;
  for (std::size_t k = 0; k < transient; ++k) x = map(x);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = std::abs(map.derivative(x));
    sum += d > 0.0 ? std::max(std::log(d), floor) : floor;
    x = map(x);
  }
  return sum / static_cast<double>(n);
}

}  // namespace funnel

#endif  // FUNNEL_ANALYSIS_CIRCLE_DYNAMICS_HPP
