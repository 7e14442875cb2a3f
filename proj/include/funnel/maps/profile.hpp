#ifndef FUNNEL_MAPS_PROFILE_HPP
#define FUNNEL_MAPS_PROFILE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"

namespace funnel {

/// The 2pi-periodic modulation functions alpha(phi) > 0 and beta(phi) of the
/// global return, together with their analytic derivatives. All evaluations
/// reduce phi mod 2pi first, so periodicity holds exactly.
///
/// Construction validates positivity of alpha on a uniform grid and compares
/// both supplied derivatives against central differences at 64 phases.
struct ProfileValidation {
  int positivity_grid = 4096;
  int derivative_samples = 64;
  double derivative_rtol = 1e-6;
};

class ModulationProfile {
 public:
  using Fn = std::function<double(double)>;
  using Validation = ProfileValidation;

  ModulationProfile(Fn alpha, Fn alpha_prime, Fn beta, Fn beta_prime,
                    std::string name = "custom", Validation v = {})
      : alpha_(std::move(alpha)),
        alpha_prime_(std::move(alpha_prime)),
        beta_(std::move(beta)),
        beta_prime_(std::move(beta_prime)),
        name_(std::move(name)) {
    validate(v);
  }

  /// alpha = 1 + a sin(phi), beta = 0; |a| < 1 keeps alpha positive.
  static ModulationProfile sine(double a) {
    std::ostringstream os;
    os << "sine(a=" << a << ")";
    return ModulationProfile(
        [a](double phi) { return 1.0 + a * std::sin(phi); },
        [a](double phi) { return a * std::cos(phi); }, [](double) { return 0.0; },
        [](double) { return 0.0; }, os.str());
  }

  static ModulationProfile constant(double value = 1.0) {
    return ModulationProfile([value](double) { return value; },
                             [](double) { return 0.0; }, [](double) { return 0.0; },
                             [](double) { return 0.0; }, "constant");
  }

  double alpha(double phi) const { return alpha_(wrap_angle(phi)); }
  double alpha_prime(double phi) const { return alpha_prime_(wrap_angle(phi)); }
  double beta(double phi) const { return beta_(wrap_angle(phi)); }
  double beta_prime(double phi) const { return beta_prime_(wrap_angle(phi)); }

  // Log-derivative alpha'/alpha, the quantity every stability test reads.
  double log_slope(double phi) const { return alpha_prime(phi) / alpha(phi); }

  double min_alpha() const { return min_alpha_; }
  double max_alpha() const { return max_alpha_; }
  const std::string& name() const { return name_; }

 private:
  void validate(const Validation& v) {
    require(v.positivity_grid >= 16, ErrorKind::config,
            "profile positivity grid must have at least 16 points");
    min_alpha_ = std::numeric_limits<double>::infinity();
    max_alpha_ = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < v.positivity_grid; ++j) {
      const double phi = two_pi * j / v.positivity_grid;
      const double a = alpha(phi);
      if (!(std::isfinite(a) && a > 0.0)) {
        std::ostringstream os;
        os << "profile " << name_ << ": alpha(" << phi << ") = " << a
           << " is not positive";
        fail(ErrorKind::domain, os.str());
      }
      min_alpha_ = std::min(min_alpha_, a);
      max_alpha_ = std::max(max_alpha_, a);
    }
    const double h = 1e-5;
    for (int j = 0; j < v.derivative_samples; ++j) {
      const double phi = two_pi * (j + 0.5) / v.derivative_samples;
      check_derivative("alpha", alpha_, alpha_prime_, phi, h, v.derivative_rtol);
      check_derivative("beta", beta_, beta_prime_, phi, h, v.derivative_rtol);
    }
  }

  void check_derivative(const char* which, const Fn& f, const Fn& df, double phi,
                        double h, double rtol) const {
    const double fd = (f(phi + h) - f(phi - h)) / (2.0 * h);
    const double an = df(phi);
    const double scale = std::max({std::abs(fd), std::abs(an), 1.0});
    if (!(std::abs(fd - an) <= rtol * scale)) {
      std::ostringstream os;
      os << "profile " << name_ << ": analytic " << which << "' = " << an
         << " disagrees with finite difference " << fd << " at phi = " << phi;
      fail(ErrorKind::domain, os.str());
    }
  }

  Fn alpha_;
  Fn alpha_prime_;
  Fn beta_;
  Fn beta_prime_;
  std::string name_;
  double min_alpha_ = 0.0;
  double max_alpha_ = 0.0;
};

}  // namespace funnel

#endif  // FUNNEL_MAPS_PROFILE_HPP
