#ifndef FUNNEL_EXPERIMENTS_BUILDERS_HPP
#define FUNNEL_EXPERIMENTS_BUILDERS_HPP

#include <cstdint>
#include <string>

#include "funnel/burster/model.hpp"
#include "funnel/core/error.hpp"
#include "funnel/experiments/config.hpp"
#include "funnel/maps/annulus_maps.hpp"
#include "funnel/maps/global_map.hpp"
#include "funnel/maps/model_map_1d.hpp"
#include "funnel/maps/profile.hpp"
#include "funnel/maps/saddle_focus.hpp"

namespace funnel::experiments {

// Model objects from config sections. Missing keys take the library defaults.

/// [saddle] rho, nu (= lambda / rho), omega_over_rho.
inline SaddleFocusParams saddle_from(const Config& c) {
  const double rho = c.get_double("saddle", "rho", 1.0);
  const double nu = c.get_double("saddle", "nu", 1.5);
  const double kappa = c.get_double("saddle", "omega_over_rho", 1.0);
  return SaddleFocusParams(rho, nu * rho, kappa * rho);
}

/// [profile] kind = sine (alpha = 1 + a sin phi) | constant (alpha = value).
inline ModulationProfile profile_from(const Config& c) {
  const std::string kind = c.get_string("profile", "kind", "sine");
  if (kind == "sine") return ModulationProfile::sine(c.get_double("profile", "a", 0.3));
  if (kind == "constant") return ModulationProfile::constant(c.get_double("profile", "value", 1.0));
  fail(ErrorKind::config, "profile.kind must be sine or constant, got '" + kind + "'");
}

inline GlobalMapConfig global_from(const Config& c) {
  GlobalMapConfig g;
  g.mu = c.get_double("global", "mu", g.mu);
  g.phi_star = c.get_double("global", "phi_star", g.phi_star);
  g.n = static_cast<int>(c.get_int("global", "n", g.n));
  g.eps_r = c.get_double("global", "eps_r", g.eps_r);
  g.eps_phi = c.get_double("global", "eps_phi", g.eps_phi);
  g.validate();
  return g;
}

inline double omega_tilde_from(const Config& c) { return c.get_double("map", "omega_tilde", 0.0); }

inline SineCircleMap sine_from(const Config& c) {
  SineCircleMap s;
  s.amplitude = c.get_double("sine", "amplitude", s.amplitude);
  s.omega_tilde = c.get_double("sine", "omega_tilde", s.omega_tilde);
  return s;
}

inline ModelMap1D model_from(const Config& c) {
  ModelMap1D m;
  m.a = c.get_double("model1d", "a", m.a);
  m.nu = c.get_double("model1d", "nu", m.nu);
  m.alpha = c.get_double("model1d", "alpha", m.alpha);
  m.mu = c.get_double("model1d", "mu", m.mu);
  m.validate();
  return m;
}

inline burster::BursterParams burster_from(const Config& c) {
  burster::BursterParams p;
  p.delta = c.get_double("burster", "delta", p.delta);
  p.mu_slow = c.get_double("burster", "mu_slow", p.mu_slow);
  p.c = c.get_double("burster", "c", p.c);
  p.I = c.get_double("burster", "I", p.I);
  p.validate();
  return p;
}

/// Calls f with the annulus map named by `kind`: full, rescaled or singular.
template <typename F>
decltype(auto) with_annulus_map(const std::string& kind, const Config& c, F&& f) {
  const auto p = saddle_from(c);
  auto prof = profile_from(c);
  if (kind == "rescaled") return f(RescaledMap(p, std::move(prof), global_from(c)));
  if (kind == "full") return f(FullMap(p, std::move(prof), global_from(c)));
  if (kind == "singular") {
    return f(SingularLimitMap(p, std::move(prof), omega_tilde_from(c),
                              static_cast<int>(c.get_int("global", "n", 1))));
  }
  fail(ErrorKind::config, "map must be full, rescaled or singular, got '" + kind + "'");
}

/// Seed for randomized sub-steps at grid point `index`: splitmix64 of the pair.
inline std::uint64_t point_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace funnel::experiments

#endif  // FUNNEL_EXPERIMENTS_BUILDERS_HPP
