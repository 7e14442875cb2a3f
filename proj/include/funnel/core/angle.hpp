#ifndef FUNNEL_CORE_ANGLE_HPP
#define FUNNEL_CORE_ANGLE_HPP

#include <cmath>
#include <numbers>

namespace funnel {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Reduces an angle to [0, 2pi).
inline double wrap_angle(double phi) {
  double r = std::fmod(phi, two_pi);
  if (r < 0.0) r += two_pi;
  // fmod of a value just below a multiple of 2pi can round up to 2pi itself.
  if (r >= two_pi) r = 0.0;
  return r;
}

// Signed distance between two angles, in (-pi, pi].
inline double angle_difference(double a, double b) {
  double d = wrap_angle(a - b);
  return d > pi ? d - two_pi : d;
}

}  // namespace funnel

#endif  // FUNNEL_CORE_ANGLE_HPP
