#ifndef FUNNEL_MAPS_ANNULUS_MAPS_HPP
#define FUNNEL_MAPS_ANNULUS_MAPS_HPP

#include <cmath>
#include <concepts>

#include "funnel/core/angle.hpp"
#include "funnel/core/error.hpp"
#include "funnel/core/linalg.hpp"
#include "funnel/maps/global_map.hpp"
#include "funnel/maps/profile.hpp"
#include "funnel/maps/saddle_focus.hpp"

namespace funnel {

/// A return map of the cylinder S1 into itself. Images carry the lifted angle
/// so that F(phi + 2pi) = F(phi) + 2pi * degree() holds on lifts.
template <typename M>
concept AnnulusMap = requires(const M& m, const AnnulusPoint& pt) {
  { m(pt) } -> std::same_as<AnnulusPoint>;
  { m.jacobian(pt) } -> std::same_as<Mat2>;
  { m.degree() } -> std::convertible_to<int>;
  { m.z_max() } -> std::convertible_to<double>;
};

/// A circle map given on lifts, with its derivative.
template <typename M>
concept LiftedCircleMap = requires(const M& m, double phi) {
  { m.lift(phi) } -> std::convertible_to<double>;
  { m.derivative(phi) } -> std::convertible_to<double>;
  { m.degree() } -> std::convertible_to<int>;
};

// Jacobian rows/cols are ordered (z, phi).

/// T = T0 o T1 in the original coordinates of S1, on the strip z in [0, z_max].
class FullMap {
 public:
  FullMap(SaddleFocusParams p, ModulationProfile profile, GlobalMapConfig cfg,
          double z_max = 1.0)
      : p_(p), profile_(std::move(profile)), cfg_(cfg.normalized()), z_max_(z_max) {
    p_.require_saddle_condition();
    require(z_max > 0.0, ErrorKind::domain, "z_max must be > 0");
    require_lands_inside(profile_, cfg_, z_max_);
  }

  DiskPoint t1(const AnnulusPoint& pt) const {
    return global_map_t1(pt, profile_, cfg_);
  }

  AnnulusPoint operator()(const AnnulusPoint& pt) const {
    return local_map_t0(t1(pt), p_);
  }

  Mat2 jacobian(const AnnulusPoint& pt) const {
    const double nu = p_.saddle_index();
    const double kappa = p_.omega_over_rho();
    const double r0 = cfg_.mu * profile_.alpha(pt.phi) + cfg_.eps_r * pt.z;
    const double dr_dz = cfg_.eps_r;
    const double dr_dphi = cfg_.mu * profile_.alpha_prime(pt.phi);
    const double dz_dr = nu * std::pow(r0, nu - 1.0);
    Mat2 j;
    j(0, 0) = dz_dr * dr_dz;
    j(0, 1) = dz_dr * dr_dphi;
    j(1, 0) = cfg_.eps_phi - kappa * dr_dz / r0;
    j(1, 1) = cfg_.n + cfg_.mu * profile_.beta_prime(pt.phi) - kappa * dr_dphi / r0;
    return j;
  }

  /// The drift (omega/rho) ln(1/mu) + phi* that the rescaled map exposes.
  double omega_tilde() const {
    require(cfg_.mu > 0.0, ErrorKind::domain, "omega_tilde needs mu > 0");
    return -p_.omega_over_rho() * std::log(cfg_.mu) + cfg_.phi_star;
  }

  int degree() const { return cfg_.n; }
  double z_max() const { return z_max_; }
  bool in_domain(const AnnulusPoint& pt) const {
    return pt.z >= 0.0 && pt.z <= z_max_ && std::isfinite(pt.lift);
  }

  const SaddleFocusParams& params() const { return p_; }
  const ModulationProfile& profile() const { return profile_; }
  const GlobalMapConfig& config() const { return cfg_; }

 private:
  SaddleFocusParams p_;
  ModulationProfile profile_;
  GlobalMapConfig cfg_;
  double z_max_;
};

/// The full map conjugated by z -> mu^nu z. Evaluation literally unscales,
/// applies FullMap and rescales; nothing is truncated.
class RescaledMap {
 public:
  RescaledMap(SaddleFocusParams p, ModulationProfile profile, GlobalMapConfig cfg,
              double z_max = 0.0)
      : scale_(checked_scale(p, cfg)),
        full_(p, profile,
              cfg, scale_ * (z_max > 0.0 ? z_max : default_z_max(p, profile))) {}

  /// Twice the largest leading-order image height: one application of the
  /// map from anywhere in the strip lands back inside it.
  static double default_z_max(const SaddleFocusParams& p,
                              const ModulationProfile& profile) {
    return 2.0 * std::pow(profile.max_alpha(), p.saddle_index());
  }

  AnnulusPoint unscale(const AnnulusPoint& pt) const {
    return {pt.z * scale_, pt.phi, pt.lift};
  }
  AnnulusPoint rescale(const AnnulusPoint& pt) const {
    return {pt.z / scale_, pt.phi, pt.lift};
  }

  AnnulusPoint operator()(const AnnulusPoint& pt) const {
    return rescale(full_(unscale(pt)));
  }

  Mat2 jacobian(const AnnulusPoint& pt) const {
    Mat2 j = full_.jacobian(unscale(pt));
    j(0, 1) /= scale_;
    j(1, 0) *= scale_;
    return j;
  }

  double omega_tilde() const { return full_.omega_tilde(); }
  /// mu^nu, the factor between original and rescaled heights.
  double scale() const { return scale_; }
  int degree() const { return full_.degree(); }
  double z_max() const { return full_.z_max() / scale_; }
  bool in_domain(const AnnulusPoint& pt) const {
    return pt.z >= 0.0 && pt.z <= z_max() && std::isfinite(pt.lift);
  }
  const FullMap& full() const { return full_; }

 private:
  static double checked_scale(const SaddleFocusParams& p, const GlobalMapConfig& cfg) {
    if (!(cfg.mu > 0.0)) {
      fail(ErrorKind::domain,
           "rescaled map requires mu > 0; use SingularLimitMap at mu = 0");
    }
    return std::pow(cfg.mu, p.saddle_index());
  }

  double scale_;
  FullMap full_;
};

/// Circle map phi -> n phi + (omega/rho) ln(1/alpha(phi)) + omega_tilde on
/// lifts. With n = 1 this is the circle map whose invertibility governs the
/// invariant curve; with n = 0 it is the angular part of the n = 0 limit map.
class CircleMap {
 public:
  CircleMap(SaddleFocusParams p, ModulationProfile profile, double omega_tilde,
            int n = 1)
      : kappa_(p.omega_over_rho()),
        profile_(std::move(profile)),
        omega_tilde_(omega_tilde),
        n_(n) {
    require(n == 0 || n == 1, ErrorKind::domain, "circle map degree must be 0 or 1");
  }

  double lift(double phi) const {
    return n_ * phi - kappa_ * std::log(profile_.alpha(phi)) + omega_tilde_;
  }
  double derivative(double phi) const {
    return n_ - kappa_ * profile_.log_slope(phi);
  }
  double operator()(double phi) const { return wrap_angle(lift(phi)); }
  int degree() const { return n_; }
  double omega_tilde() const { return omega_tilde_; }
  double omega_over_rho() const { return kappa_; }
  const ModulationProfile& profile() const { return profile_; }

 private:
  double kappa_;
  ModulationProfile profile_;
  double omega_tilde_;
  int n_;
};

/// phi -> A sin(phi) + omega_tilde, the one-dimensional reduction with many
/// expanding branches.
struct SineCircleMap {
  double amplitude = 10.0;
  double omega_tilde = 0.0;

  double lift(double phi) const { return amplitude * std::sin(phi) + omega_tilde; }
  double derivative(double phi) const { return amplitude * std::cos(phi); }
  double operator()(double phi) const { return wrap_angle(lift(phi)); }
  int degree() const { return 0; }
};

/// The mu -> 0 limit of the rescaled map with omega_tilde treated as a free
/// parameter: z_bar = alpha(phi)^nu, phi_bar = n phi + (omega/rho) ln(1/alpha)
/// + omega_tilde. The height of the image does not depend on z.
class SingularLimitMap {
 public:
  SingularLimitMap(SaddleFocusParams p, ModulationProfile profile, double omega_tilde,
                   int n)
      : p_(p), circle_(p, std::move(profile), omega_tilde, n) {
    p_.require_saddle_condition();
  }

  AnnulusPoint operator()(const AnnulusPoint& pt) const {
    const double a = circle_.profile().alpha(pt.phi);
    const double lift = circle_.degree() * pt.lift -
                        p_.omega_over_rho() * std::log(a) + circle_.omega_tilde();
    return AnnulusPoint::from_lift(std::pow(a, p_.saddle_index()), lift);
  }

  Mat2 jacobian(const AnnulusPoint& pt) const {
    const double nu = p_.saddle_index();
    const auto& prof = circle_.profile();
    const double a = prof.alpha(pt.phi);
    Mat2 j;
    j(0, 0) = 0.0;
    j(0, 1) = nu * std::pow(a, nu - 1.0) * prof.alpha_prime(pt.phi);
    j(1, 0) = 0.0;
    j(1, 1) = circle_.derivative(pt.phi);
    return j;
  }

  const CircleMap& circle_component() const { return circle_; }
  double omega_tilde() const { return circle_.omega_tilde(); }
  int degree() const { return circle_.degree(); }
  double z_max() const {
    return RescaledMap::default_z_max(p_, circle_.profile());
  }
  bool in_domain(const AnnulusPoint& pt) const {
    return pt.z >= 0.0 && std::isfinite(pt.z) && std::isfinite(pt.lift);
  }
  const SaddleFocusParams& params() const { return p_; }
  const ModulationProfile& profile() const { return circle_.profile(); }

 private:
  SaddleFocusParams p_;
  CircleMap circle_;
};

static_assert(AnnulusMap<FullMap>);
static_assert(AnnulusMap<RescaledMap>);
static_assert(AnnulusMap<SingularLimitMap>);
static_assert(LiftedCircleMap<CircleMap>);
static_assert(LiftedCircleMap<SineCircleMap>);

}  // namespace funnel

#endif  // FUNNEL_MAPS_ANNULUS_MAPS_HPP
