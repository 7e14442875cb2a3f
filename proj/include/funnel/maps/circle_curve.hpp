#ifndef FUNNEL_MAPS_CIRCLE_CURVE_HPP
#define FUNNEL_MAPS_CIRCLE_CURVE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"

namespace funnel {

/// Periodic cubic spline through (x_j, y_j), j < N, with x strictly increasing
/// inside one period [x_0, x_0 + period). Knot spacing may be non-uniform.
class PeriodicSpline {
 public:
  PeriodicSpline() = default;

  PeriodicSpline(std::vector<double> x, std::vector<double> y, double period)
      : x_(std::move(x)), y_(std::move(y)), period_(period) {
    require(x_.size() == y_.size() && x_.size() >= 3, ErrorKind::domain,
            "periodic spline needs at least 3 knots");
    for (std::size_t j = 1; j < x_.size(); ++j) {
      if (!(x_[j] > x_[j - 1])) {
        std::ostringstream os;
        os << "periodic spline knots not increasing on [" << x_[j - 1] << ", "
           << x_[j] << "]";
        fail(ErrorKind::non_invertible, os.str());
      }
    }
    require(x_.back() < x_.front() + period_, ErrorKind::non_invertible,
            "periodic spline knots exceed one period");
    solve_moments();
  }

  double operator()(double x) const {
    const std::size_t n = x_.size();
    double t = x_.front() + std::fmod(x - x_.front(), period_);
    if (t < x_.front()) t += period_;
    // Interval j covers [x_j, x_{j+1}) with x_n = x_0 + period.
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - x_.begin()) - 1;
    const std::size_t k = (j + 1) % n;
    const double xj = x_[j];
    const double xk = (k == 0) ? x_.front() + period_ : x_[k];
    const double h = xk - xj;
    const double a = (xk - t) / h;
    const double b = (t - xj) / h;
    return a * y_[j] + b * y_[k] +
           ((a * a * a - a) * m_[j] + (b * b * b - b) * m_[k]) * h * h / 6.0;
  }

  std::span<const double> knots() const { return x_; }
  std::span<const double> values() const { return y_; }

 private:
  // Second-derivative moments from the cyclic tridiagonal system
  //   h_{j-1} M_{j-1} + 2 (h_{j-1} + h_j) M_j + h_j M_{j+1} = 6 (d_j - d_{j-1}),
  // solved by Sherman-Morrison around the Thomas algorithm.
  void solve_moments() {
    const std::size_t n = x_.size();
    std::vector<double> h(n), d(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = (j + 1) % n;
      const double xk = (k == 0) ? x_.front() + period_ : x_[k];
      h[j] = xk - x_[j];
      d[j] = (y_[k] - y_[j]) / h[j];
    }
    std::vector<double> lower(n), diag(n), upper(n), rhs(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jm = (j + n - 1) % n;
      lower[j] = h[jm];
      diag[j] = 2.0 * (h[jm] + h[j]);
      upper[j] = h[j];
      rhs[j] = 6.0 * (d[j] - d[jm]);
    }
    const double corner_lo = lower[0];      // A(0, n-1)
    const double corner_hi = upper[n - 1];  // A(n-1, 0)
    const double gamma = -diag[0];
    std::vector<double> dmod = diag;
    dmod[0] -= gamma;
    dmod[n - 1] -= corner_hi * corner_lo / gamma;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = corner_hi;
    const auto xs = thomas(lower, dmod, upper, rhs);
    const auto zs = thomas(lower, dmod, upper, u);
    const double fact = (xs[0] + corner_lo * xs[n - 1] / gamma) /
                        (1.0 + zs[0] + corner_lo * zs[n - 1] / gamma);
    m_.resize(n);
    for (std::size_t j = 0; j < n; ++j) m_[j] = xs[j] - fact * zs[j];
  }

  static std::vector<double> thomas(const std::vector<double>& a,
                                    const std::vector<double>& b,
                                    const std::vector<double>& c,
                                    const std::vector<double>& r) {
    const std::size_t n = b.size();
    std::vector<double> cp(n), rp(n), out(n);
    cp[0] = c[0] / b[0];
    rp[0] = r[0] / b[0];
    for (std::size_t j = 1; j < n; ++j) {
      const double den = b[j] - a[j] * cp[j - 1];
      cp[j] = c[j] / den;
      rp[j] = (r[j] - a[j] * rp[j - 1]) / den;
    }
    out[n - 1] = rp[n - 1];
    for (std::size_t j = n - 1; j-- > 0;) out[j] = rp[j] - cp[j] * out[j + 1];
    return out;
  }

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
  double period_ = two_pi;
};

/// A closed graph z = h(phi) sampled on phi_j = 2 pi j / N and evaluated with
/// a periodic cubic spline (error O(N^-4) for smooth h).
class CircleCurve {
 public:
  CircleCurve() = default;

  explicit CircleCurve(std::vector<double> heights) : heights_(std::move(heights)) {
    require(heights_.size() >= 4, ErrorKind::domain,
            "circle curve needs at least 4 samples");
    spline_ = PeriodicSpline(grid(heights_.size()), heights_, two_pi);
  }

  static std::vector<double> grid(std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) g[j] = two_pi * static_cast<double>(j) / n;
    return g;
  }

  double operator()(double phi) const { return spline_(wrap_angle(phi)); }
  std::size_t size() const { return heights_.size(); }
  double phase(std::size_t j) const { return two_pi * static_cast<double>(j) / size(); }
  std::span<const double> heights() const { return heights_; }

 private:
  std::vector<double> heights_;
  PeriodicSpline spline_;
};

}  // namespace funnel

#endif  // FUNNEL_MAPS_CIRCLE_CURVE_HPP
