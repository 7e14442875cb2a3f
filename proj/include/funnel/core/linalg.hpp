#ifndef FUNNEL_CORE_LINALG_HPP
#define FUNNEL_CORE_LINALG_HPP

#include <algorithm>
#include <array>
#include <complex>

#include <Eigen/Dense>

namespace funnel {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Closed-form eigenvalues of a real 2x2 matrix, ordered by descending modulus.
inline std::array<std::complex<double>, 2> eigenvalues(const Mat2& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  const double disc = 0.25 * tr * tr - det;
  std::array<std::complex<double>, 2> out;
  if (disc >= 0.0) {
    // Stable quadratic roots: avoid cancellation in the smaller one.
    const double s = std::sqrt(disc);
    const double big = 0.5 * tr + (tr >= 0.0 ? s : -s);
    const double small = big != 0.0 ? det / big : 0.5 * tr - (tr >= 0.0 ? s : -s);
    out = {std::complex<double>(big, 0.0), std::complex<double>(small, 0.0)};
  } else {
    const double im = std::sqrt(-disc);
    out = {std::complex<double>(0.5 * tr, im), std::complex<double>(0.5 * tr, -im)};
  }
  if (std::abs(out[1]) > std::abs(out[0])) std::swap(out[0], out[1]);
  return out;
}

inline std::array<std::complex<double>, 3> eigenvalues(const Mat3& m) {
  Eigen::EigenSolver<Mat3> solver(m, false);
  const auto ev = solver.eigenvalues();
  std::array<std::complex<double>, 3> out{ev[0], ev[1], ev[2]};
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

}  // namespace funnel

#endif  // FUNNEL_CORE_LINALG_HPP
